//! Diffuse and mirror sphere renders under an environment map.
//!
//! This is the physical oracle for geometry-illumination alignment: a render
//! under a warped map with a fixed camera must match a render under the
//! original map with a rotated camera. Orthographic projection, unit sphere
//! at the origin, camera looking along -Z.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{EnvironmentMap, ImageRgb, Rgb};
use crate::spherical::{pixel_direction, sample_direction, solid_angle_map};
use crate::warp::Rotation;

/// Shading model for the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereMode {
    Mirror,
    Diffuse,
}

/// Render parameters. `camera` is the camera-to-world rotation applied to
/// view-space lookup directions (identity = render in the map's own frame).
#[derive(Debug, Clone)]
pub struct SphereRenderConfig {
    pub image_size: usize,
    pub mode: SphereMode,
    pub albedo: Rgb,
    pub camera: Rotation,
    /// Diffuse shading integrates over a copy of the map downsampled to at
    /// most this height. `None` integrates at full resolution.
    pub max_diffuse_env_height: Option<usize>,
}

impl Default for SphereRenderConfig {
    fn default() -> Self {
        SphereRenderConfig {
            image_size: 256,
            mode: SphereMode::Mirror,
            albedo: Rgb::splat(1.0),
            camera: Rotation::IDENTITY,
            max_diffuse_env_height: Some(32),
        }
    }
}

impl SphereRenderConfig {
    fn validate(&self) -> Result<()> {
        if self.image_size < 8 {
            return Err(Error::InvalidArgument(format!(
                "image_size must be >= 8, got {}",
                self.image_size
            )));
        }
        let a = self.albedo;
        let in_range = |v: f32| (0.0..=1.0).contains(&v);
        if !(in_range(a.r) && in_range(a.g) && in_range(a.b)) {
            return Err(Error::Invariant(format!(
                "albedo must be in [0,1], got ({}, {}, {})",
                a.r, a.g, a.b
            )));
        }
        Ok(())
    }
}

/// An HDR sphere render plus its coverage mask (true on the sphere).
#[derive(Debug, Clone)]
pub struct SphereRender {
    pub image: ImageRgb,
    pub mask: Vec<bool>,
}

impl SphereRender {
    /// Mask as 0/255 bytes, row-major.
    pub fn mask_bytes(&self) -> Vec<u8> {
        self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect()
    }
}

/// Irradiance arriving at a surface with unit `normal`, integrated over the
/// full map: `sum(L(w) * max(0, n . w) * dOmega)` in fixed row-major order.
pub fn irradiance(env: &EnvironmentMap, normal: [f64; 3]) -> Result<Rgb> {
    let n2 = normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2];
    if (n2.sqrt() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "normal must be unit length, |n| = {}",
            n2.sqrt()
        )));
    }
    let (w, h) = (env.width(), env.height());
    let sa = solid_angle_map(h, w).expect("env map dims are 2:1");
    let mut acc = [0.0f64; 3];
    for y in 0..h {
        let d_omega = sa.row(y);
        for x in 0..w {
            let dir = pixel_direction(w, h, x, y);
            let cos = normal[0] * dir[0] + normal[1] * dir[1] + normal[2] * dir[2];
            if cos <= 0.0 {
                continue;
            }
            let p = env.pixel(x, y);
            let wgt = cos * d_omega;
            acc[0] += p.r as f64 * wgt;
            acc[1] += p.g as f64 * wgt;
            acc[2] += p.b as f64 * wgt;
        }
    }
    Ok(Rgb::new(acc[0] as f32, acc[1] as f32, acc[2] as f32))
}

/// Downsamples an environment map by an integer factor with solid-angle
/// weighted box averaging (preserves total radiance).
pub fn downsample_env(env: &EnvironmentMap, new_height: usize) -> Result<EnvironmentMap> {
    if new_height == 0 || !env.height().is_multiple_of(new_height) {
        return Err(Error::InvalidArgument(format!(
            "new height {} must divide source height {}",
            new_height,
            env.height()
        )));
    }
    let factor = env.height() / new_height;
    if factor == 1 {
        return Ok(env.clone());
    }
    let new_width = new_height * 2;
    let sa = solid_angle_map(env.height(), env.width()).expect("2:1");
    let img = ImageRgb::from_fn(new_width, new_height, |x, y| {
        let mut acc = [0.0f64; 3];
        let mut wsum = 0.0f64;
        for sy in y * factor..(y + 1) * factor {
            let w = sa.row(sy);
            for sx in x * factor..(x + 1) * factor {
                let p = env.pixel(sx, sy);
                acc[0] += p.r as f64 * w;
                acc[1] += p.g as f64 * w;
                acc[2] += p.b as f64 * w;
                wsum += w;
            }
        }
        Rgb::new(
            (acc[0] / wsum) as f32,
            (acc[1] / wsum) as f32,
            (acc[2] / wsum) as f32,
        )
    });
    EnvironmentMap::new(img)
}

/// Renders the unit sphere under `env`. Off-sphere pixels are black with a
/// false mask bit.
pub fn render_sphere(env: &EnvironmentMap, cfg: &SphereRenderConfig) -> Result<SphereRender> {
    cfg.validate()?;
    let size = cfg.image_size;

    let diffuse_env = match (cfg.mode, cfg.max_diffuse_env_height) {
        (SphereMode::Diffuse, Some(max_h)) if env.height() > max_h => {
            let mut target = max_h;
            while target > 1 && !env.height().is_multiple_of(target) {
                target -= 1;
            }
            Some(downsample_env(env, target)?)
        }
        _ => None,
    };
    let shade_env = diffuse_env.as_ref().unwrap_or(env);

    let rows: Vec<Vec<(Rgb, bool)>> = (0..size)
        .into_par_iter()
        .map(|j| {
            (0..size)
                .map(|i| {
                    let x = (i as f64 + 0.5) / size as f64 * 2.0 - 1.0;
                    let y = 1.0 - (j as f64 + 0.5) / size as f64 * 2.0;
                    let r2 = x * x + y * y;
                    if r2 > 1.0 {
                        return (Rgb::BLACK, false);
                    }
                    let n = [x, y, (1.0 - r2).sqrt()];
                    let color = match cfg.mode {
                        SphereMode::Mirror => {
                            // view ray travels along -Z; reflect about n
                            let v = [0.0, 0.0, -1.0];
                            let vn = v[2] * n[2];
                            let r = [
                                v[0] - 2.0 * vn * n[0],
                                v[1] - 2.0 * vn * n[1],
                                v[2] - 2.0 * vn * n[2],
                            ];
                            sample_direction(env.image(), cfg.camera.apply(r))
                        }
                        SphereMode::Diffuse => {
                            let nw = cfg.camera.apply(n);
                            let e = irradiance(shade_env, nw).expect("unit normal");
                            Rgb::new(
                                cfg.albedo.r * e.r / std::f32::consts::PI,
                                cfg.albedo.g * e.g / std::f32::consts::PI,
                                cfg.albedo.b * e.b / std::f32::consts::PI,
                            )
                        }
                    };
                    (color, true)
                })
                .collect()
        })
        .collect();

    let mut pixels = Vec::with_capacity(size * size);
    let mut mask = Vec::with_capacity(size * size);
    for row in rows {
        for (c, m) in row {
            pixels.push(c);
            mask.push(m);
        }
    }
    Ok(SphereRender {
        image: ImageRgb::new(size, size, pixels)?,
        mask,
    })
}
