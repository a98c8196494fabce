//! Environment-map warping: rotations, camera/light trajectories, and
//! ground-truth environment-video generation by spherical resampling.
//!
//! Rotations are camera-to-world. The relative warp for frame `i` is
//! `M_i = R_0^T * L_i^T * R_i` (world-fixed lighting rotated by `L_i`, seen
//! from camera `R_i`, expressed relative to the first viewpoint), and each
//! output pixel with panorama direction `d` samples the source map at
//! `M_i * d`. With this convention a yaw to the left moves panorama content
//! to the right.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{EnvironmentMap, ImageRgb, Rgb};
use crate::rng::{keyed_rng, DOMAIN_TRAJECTORY};
use crate::spherical::{pixel_direction, sample_direction, solid_angle_map};

const ORTHO_EPS: f64 = 1e-6;

/// A proper rotation (orthonormal, determinant +1), stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// Validates orthonormality and determinant within 1e-6.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation { m };
        let e = r.orthonormality_error();
        if e > ORTHO_EPS {
            return Err(Error::Invariant(format!(
                "matrix is not orthonormal (error {:.3e})",
                e
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ORTHO_EPS {
            return Err(Error::Invariant(format!(
                "matrix determinant {} is not +1",
                det
            )));
        }
        Ok(r)
    }

    /// Rodrigues rotation about `axis` by `radians`.
    pub fn from_axis_angle(axis: [f64; 3], radians: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n < 1e-12 {
            return Err(Error::InvalidArgument("rotation axis must be non-zero".into()));
        }
        let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
        let (s, c) = radians.sin_cos();
        let t = 1.0 - c;
        Ok(Rotation {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        })
    }

    /// Rotation about +Y. Positive angles yaw the camera to the left.
    pub fn yaw(radians: f64) -> Self {
        Self::from_axis_angle([0.0, 1.0, 0.0], radians).expect("unit axis")
    }

    /// Rotation about +X.
    pub fn pitch(radians: f64) -> Self {
        Self::from_axis_angle([1.0, 0.0, 0.0], radians).expect("unit axis")
    }

    /// Rotation about +Z.
    pub fn roll(radians: f64) -> Self {
        Self::from_axis_angle([0.0, 0.0, 1.0], radians).expect("unit axis")
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.m;
        Rotation {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        let a = &self.m;
        let b = &other.m;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Rotation { m }
    }

    #[inline]
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Rotation angle in radians, from the trace.
    pub fn angle(&self) -> f64 {
        let trace = self.m[0][0] + self.m[1][1] + self.m[2][2];
        ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn is_identity(&self) -> bool {
        self.m == Self::IDENTITY.m
    }

    pub fn to_flat(&self) -> [f64; 9] {
        let m = &self.m;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn from_flat(f: [f64; 9]) -> Result<Self> {
        Self::from_matrix([[f[0], f[1], f[2]], [f[3], f[4], f[5]], [f[6], f[7], f[8]]])
    }

    fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    fn orthonormality_error(&self) -> f64 {
        let t = self.compose(&self.transpose());
        let mut e = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                e = e.max((t.m[i][j] - want).abs());
            }
        }
        e
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

/// The three camera/light motion patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionPattern {
    /// Camera rotates, lighting fixed.
    #[serde(rename = "camera-rot-fixed-light")]
    CameraRotFixedLight,
    /// Lighting rotates, camera fixed.
    #[serde(rename = "light-rot-fixed-camera")]
    LightRotFixedCamera,
    /// Both rotate simultaneously.
    #[serde(rename = "both")]
    Both,
}

/// Per-frame camera and light orientations, relative to the first viewpoint
/// (frame 0 is the identity for both).
#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrajectory {
    pattern: MotionPattern,
    camera: Vec<Rotation>,
    light: Vec<Rotation>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFrame {
    camera: [f64; 9],
    light: [f64; 9],
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    pattern: MotionPattern,
    n_frames: usize,
    frames: Vec<TrajectoryFrame>,
}

impl CameraTrajectory {
    pub fn new(
        pattern: MotionPattern,
        camera: Vec<Rotation>,
        light: Vec<Rotation>,
    ) -> Result<Self> {
        if camera.is_empty() || camera.len() != light.len() {
            return Err(Error::DimMismatch(format!(
                "camera ({}) and light ({}) rotation counts must match and be non-empty",
                camera.len(),
                light.len()
            )));
        }
        for (name, r) in [("camera", &camera[0]), ("light", &light[0])] {
            if r.angle() > ORTHO_EPS {
                return Err(Error::Invariant(format!(
                    "frame 0 {} rotation must be the identity",
                    name
                )));
            }
        }
        Ok(CameraTrajectory {
            pattern,
            camera,
            light,
        })
    }

    pub fn pattern(&self) -> MotionPattern {
        self.pattern
    }

    pub fn n_frames(&self) -> usize {
        self.camera.len()
    }

    pub fn camera(&self, frame: usize) -> &Rotation {
        &self.camera[frame]
    }

    pub fn light(&self, frame: usize) -> &Rotation {
        &self.light[frame]
    }

    /// Relative warp rotation of frame `i`: `R_0^T * L_i^T * R_i`.
    pub fn relative_rotation(&self, frame: usize) -> Rotation {
        self.camera[0]
            .transpose()
            .compose(&self.light[frame].transpose())
            .compose(&self.camera[frame])
    }

    pub fn to_json(&self) -> String {
        let file = TrajectoryFile {
            pattern: self.pattern,
            n_frames: self.n_frames(),
            frames: self
                .camera
                .iter()
                .zip(&self.light)
                .map(|(c, l)| TrajectoryFrame {
                    camera: c.to_flat(),
                    light: l.to_flat(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("trajectory serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("bad trajectory json: {}", e)))?;
        if file.frames.len() != file.n_frames {
            return Err(Error::DimMismatch(format!(
                "trajectory declares {} frames but lists {}",
                file.n_frames,
                file.frames.len()
            )));
        }
        let mut camera = Vec::with_capacity(file.frames.len());
        let mut light = Vec::with_capacity(file.frames.len());
        for f in &file.frames {
            camera.push(Rotation::from_flat(f.camera)?);
            light.push(Rotation::from_flat(f.light)?);
        }
        CameraTrajectory::new(file.pattern, camera, light)
    }
}

/// Resamples an environment map under a relative rotation: each output pixel
/// with panorama direction `d` takes `bilinear(env, rel * d)`, with
/// horizontal wrap and pole clamp. The identity rotation reproduces the
/// input bit-exactly.
pub fn warp_env(env: &EnvironmentMap, rel: &Rotation) -> EnvironmentMap {
    let (w, h) = (env.width(), env.height());
    let src = env.image();
    let mut rows: Vec<Vec<Rgb>> = Vec::with_capacity(h);
    (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let d = pixel_direction(w, h, x, y);
                    sample_direction(src, rel.apply(d))
                })
                .collect::<Vec<Rgb>>()
        })
        .collect_into_vec(&mut rows);
    let pixels = rows.into_iter().flatten().collect();
    let img = ImageRgb::new(w, h, pixels).expect("dims preserved");
    EnvironmentMap::new(img).expect("resampling non-negative radiance stays valid")
}

/// Ground-truth environment video: frame `i` is `warp_env(env0, M_i)` with
/// `M_i` from [`CameraTrajectory::relative_rotation`]. Frame 0 equals `env0`
/// bit-exactly.
pub fn make_environment_video(
    env0: &EnvironmentMap,
    traj: &CameraTrajectory,
) -> Result<Vec<EnvironmentMap>> {
    if traj.n_frames() == 0 {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    Ok((0..traj.n_frames())
        .map(|i| warp_env(env0, &traj.relative_rotation(i)))
        .collect())
}

/// How often the random angular velocity is redrawn.
const VELOCITY_RESAMPLE_FRAMES: usize = 24;

/// Generates a smooth random trajectory for a motion pattern: piecewise
/// constant angular velocity redrawn every 24 frames, deterministic in the
/// seed, frame 0 identity, per-frame rotation angle bounded by
/// `max_angular_speed_deg`.
pub fn gen_trajectory(
    pattern: MotionPattern,
    n_frames: usize,
    seed: u64,
    max_angular_speed_deg: f64,
) -> Result<CameraTrajectory> {
    if n_frames < 1 {
        return Err(Error::InvalidArgument("n_frames must be >= 1".into()));
    }
    if max_angular_speed_deg.is_nan() || max_angular_speed_deg < 0.0 {
        return Err(Error::InvalidArgument(
            "max_angular_speed_deg must be >= 0".into(),
        ));
    }
    let mut rng = keyed_rng(seed, DOMAIN_TRAJECTORY, 0);
    let max_rad = max_angular_speed_deg.to_radians();

    let walk = |active: bool, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Rotation> {
        if !active {
            return vec![Rotation::IDENTITY; n_frames];
        }
        let mut out = Vec::with_capacity(n_frames);
        out.push(Rotation::IDENTITY);
        let mut step = Rotation::IDENTITY;
        for i in 1..n_frames {
            if (i - 1) % VELOCITY_RESAMPLE_FRAMES == 0 {
                step = random_step(rng, max_rad);
            }
            let prev = *out.last().expect("non-empty");
            out.push(prev.compose(&step));
        }
        out
    };

    let (cam_active, light_active) = match pattern {
        MotionPattern::CameraRotFixedLight => (true, false),
        MotionPattern::LightRotFixedCamera => (false, true),
        MotionPattern::Both => (true, true),
    };
    let camera = walk(cam_active, &mut rng);
    let light = walk(light_active, &mut rng);
    CameraTrajectory::new(pattern, camera, light)
}

fn random_step(rng: &mut rand_chacha::ChaCha8Rng, max_rad: f64) -> Rotation {
    // uniform direction on the sphere
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    let axis = [s * phi.cos(), z, s * phi.sin()];
    let speed: f64 = rng.random_range(0.0..=max_rad);
    Rotation::from_axis_angle(axis, speed).expect("unit axis")
}

/// Total radiance `sum(L * dOmega)` per channel, fixed row-major summation
/// order.
pub fn total_radiance(env: &EnvironmentMap) -> [f64; 3] {
    let sa = solid_angle_map(env.height(), env.width()).expect("env map dims are 2:1");
    let mut acc = [0.0f64; 3];
    for y in 0..env.height() {
        let w = sa.row(y);
        let mut row = [0.0f64; 3];
        for x in 0..env.width() {
            let p = env.pixel(x, y);
            row[0] += p.r as f64;
            row[1] += p.g as f64;
            row[2] += p.b as f64;
        }
        for (a, r) in acc.iter_mut().zip(row) {
            *a += r * w;
        }
    }
    acc
}
