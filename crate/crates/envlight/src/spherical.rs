//! Equirectangular panorama convention and spherical sampling.
//!
//! One convention is fixed here and used everywhere else in the crate:
//! the frame is right-handed with +X right, +Y up, and the camera looking
//! along -Z. Pixel centers map to
//!
//! - azimuth  `phi   = 2*pi*(x + 0.5)/W - pi` measured from -Z toward +X,
//! - polar    `theta = pi*(y + 0.5)/H` measured from +Y,
//!
//! and the outgoing panorama direction is
//! `d = (sin(theta)*sin(phi), cos(theta), -sin(theta)*cos(phi))`.
//!
//! Sampling by direction wraps horizontally and clamps at the poles.
//! Sub-pixel offsets below [`SNAP_EPS`] are snapped to the nearest texel so
//! that exact pixel-center lookups (identity warps, integer-pixel yaws)
//! reproduce stored values bit-exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{ImageRgb, Rgb};

/// Fractional pixel offsets below this snap to the nearest texel.
pub const SNAP_EPS: f64 = 1e-6;

/// Outgoing direction of the pixel-center at integer coordinates `(x, y)`.
pub fn pixel_direction(width: usize, height: usize, x: usize, y: usize) -> [f64; 3] {
    let phi = 2.0 * PI * (x as f64 + 0.5) / width as f64 - PI;
    let theta = PI * (y as f64 + 0.5) / height as f64;
    direction_from_angles(phi, theta)
}

/// Direction for azimuth `phi` (from -Z toward +X) and polar angle `theta`
/// (from +Y).
pub fn direction_from_angles(phi: f64, theta: f64) -> [f64; 3] {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    [st * sp, ct, -st * cp]
}

/// Continuous pixel coordinates of a direction. The returned coordinates are
/// in pixel-center units: integer values land exactly on texel centers.
/// `x` lies in [-0.5, W-0.5], `y` in [-0.5, H-0.5].
pub fn direction_to_pixel(width: usize, height: usize, d: [f64; 3]) -> (f64, f64) {
    let phi = d[0].atan2(-d[2]);
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let theta = (d[1] / r).clamp(-1.0, 1.0).acos();
    let x = (phi + PI) / (2.0 * PI) * width as f64 - 0.5;
    let y = theta / PI * height as f64 - 0.5;
    (x, y)
}

#[inline]
fn snap(frac: f64) -> f64 {
    if frac < SNAP_EPS {
        0.0
    } else if frac > 1.0 - SNAP_EPS {
        1.0
    } else {
        frac
    }
}

#[inline]
fn wrap_col(i: isize, width: usize) -> usize {
    i.rem_euclid(width as isize) as usize
}

/// Bilinear lookup of an equirectangular image in direction `d` (need not be
/// normalized). Horizontal wrap, polar clamp.
pub fn sample_direction(img: &ImageRgb, d: [f64; 3]) -> Rgb {
    let (x, y) = direction_to_pixel(img.width(), img.height(), d);
    sample_pixel_coords(img, x, y)
}

/// Bilinear lookup at continuous pixel-center coordinates.
pub fn sample_pixel_coords(img: &ImageRgb, x: f64, y: f64) -> Rgb {
    let w = img.width();
    let h = img.height();
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = snap(x - x0);
    let fy = snap(y - y0);
    let (ix0, fx) = if fx >= 1.0 {
        (x0 as isize + 1, 0.0)
    } else {
        (x0 as isize, fx)
    };
    let (iy0, fy) = if fy >= 1.0 {
        (y0 as isize + 1, 0.0)
    } else {
        (y0 as isize, fy)
    };

    let cx0 = wrap_col(ix0, w);
    let cx1 = wrap_col(ix0 + 1, w);
    let cy0 = iy0.clamp(0, h as isize - 1) as usize;
    let cy1 = (iy0 + 1).clamp(0, h as isize - 1) as usize;

    if fx == 0.0 && fy == 0.0 {
        return img.pixel(cx0, cy0);
    }

    let p00 = img.pixel(cx0, cy0);
    let p10 = img.pixel(cx1, cy0);
    let p01 = img.pixel(cx0, cy1);
    let p11 = img.pixel(cx1, cy1);
    let w00 = (1.0 - fx) * (1.0 - fy);
    let w10 = fx * (1.0 - fy);
    let w01 = (1.0 - fx) * fy;
    let w11 = fx * fy;
    let ch = |c: usize| -> f32 {
        (p00.channel(c) as f64 * w00
            + p10.channel(c) as f64 * w10
            + p01.channel(c) as f64 * w01
            + p11.channel(c) as f64 * w11) as f32
    };
    Rgb::new(ch(0), ch(1), ch(2))
}

/// Per-pixel solid angles of an equirectangular grid. The value is constant
/// along each row: row `y` has `dOmega = (2*pi/W) * (pi/H) * sin(theta_y)`.
#[derive(Debug, Clone)]
pub struct SolidAngleMap {
    width: usize,
    height: usize,
    rows: Vec<f64>,
}

impl SolidAngleMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Solid angle of any pixel in row `y`, steradians.
    #[inline]
    pub fn row(&self, y: usize) -> f64 {
        self.rows[y]
    }

    /// Sum over all pixels; approaches `4*pi` as the grid is refined.
    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r * self.width as f64).sum()
    }
}

/// Builds the per-pixel solid angle map for a `width x height`
/// equirectangular grid. Requires `width == 2 * height`.
pub fn solid_angle_map(height: usize, width: usize) -> Result<SolidAngleMap> {
    if height == 0 || width != 2 * height {
        return Err(Error::InvalidArgument(format!(
            "solid angle map needs 2:1 dims, got {}x{}",
            width, height
        )));
    }
    let cell = (2.0 * PI / width as f64) * (PI / height as f64);
    let rows = (0..height)
        .map(|y| {
            let theta = PI * (y as f64 + 0.5) / height as f64;
            cell * theta.sin()
        })
        .collect();
    Ok(SolidAngleMap {
        width,
        height,
        rows,
    })
}
