//! The three complementary lighting representations of an HDR environment
//! map: Reinhard LDR, normalized log-intensity, and directional encoding.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{write_png_ldr, EnvironmentMap, ImageRgb, LdrImage, Rgb};
use crate::spherical::pixel_direction;
use crate::tensor::LatentSeq;

/// Default normalization constant for the log encoding.
pub const DEFAULT_M: f64 = 60000.0;

/// Per-channel Reinhard tonemapping `v -> v / (1 + v)` on any image.
/// Strictly monotone; output in [0, 1) for non-negative finite input.
pub fn tonemap_reinhard_image(img: &ImageRgb) -> LdrImage {
    let mapped = img.map(|p| p.map(|v| v / (1.0 + v)));
    LdrImage::new(mapped).expect("reinhard of non-negative radiance stays in [0,1)")
}

/// Reinhard tonemapping of an environment map.
pub fn tonemap_reinhard(env: &EnvironmentMap) -> LdrImage {
    tonemap_reinhard_image(env.image())
}

/// Normalized log-intensity encoding `log(1 + E) / log(1 + M)` per channel.
/// Values above `M` encode to values above 1 and are preserved, not clamped;
/// use [`log_overflow_count`] to report them.
pub fn encode_log(env: &EnvironmentMap, m: f64) -> Result<ImageRgb> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidArgument(format!("M must be > 0, got {}", m)));
    }
    let denom = m.ln_1p();
    Ok(env
        .image()
        .map(|p| p.map(|v| ((v as f64).ln_1p() / denom) as f32)))
}

/// Inverse of [`encode_log`]: `v -> exp(v * ln(1 + M)) - 1` per channel.
pub fn decode_log(log: &ImageRgb, m: f64) -> Result<EnvironmentMap> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidArgument(format!("M must be > 0, got {}", m)));
    }
    if !log.all_finite() {
        return Err(Error::Invariant("non-finite value in log image".into()));
    }
    let scale = m.ln_1p();
    let decoded = log.map(|p| p.map(|v| ((v as f64 * scale).exp_m1()) as f32));
    EnvironmentMap::new(decoded)
}

/// Number of encoded values above 1 (radiance above M).
pub fn log_overflow_count(log: &ImageRgb) -> usize {
    log.pixels()
        .iter()
        .flat_map(|p| p.channels())
        .filter(|&v| v > 1.0)
        .count()
}

/// Directional encoding image: each pixel stores the negated outgoing ray
/// direction of the panorama pixel, remapped from [-1,1] to [0,1].
/// Depends only on the dimensions, never on map content.
pub fn directional_encoding(width: usize, height: usize) -> Result<LdrImage> {
    if height == 0 || width != 2 * height {
        return Err(Error::InvalidArgument(format!(
            "directional encoding needs 2:1 dims, got {}x{}",
            width, height
        )));
    }
    let img = ImageRgb::from_fn(width, height, |x, y| {
        let d = pixel_direction(width, height, x, y);
        Rgb::new(
            ((-d[0] + 1.0) * 0.5) as f32,
            ((-d[1] + 1.0) * 0.5) as f32,
            ((-d[2] + 1.0) * 0.5) as f32,
        )
    });
    LdrImage::new(img).map_err(|_| Error::Invariant("directional encoding out of range".into()))
}

/// Decodes one directional-encoding pixel back to the stored unit vector.
pub fn decode_direction(p: Rgb) -> [f64; 3] {
    [
        2.0 * p.r as f64 - 1.0,
        2.0 * p.g as f64 - 1.0,
        2.0 * p.b as f64 - 1.0,
    ]
}

/// The three encodings of one environment map.
#[derive(Debug, Clone)]
pub struct LightBundle {
    pub ldr: LdrImage,
    pub log: ImageRgb,
    pub dir: LdrImage,
    pub m_const: f64,
}

/// Builds the LDR / log / directional bundle for a map.
pub fn encode_bundle(env: &EnvironmentMap, m: f64) -> Result<LightBundle> {
    Ok(LightBundle {
        ldr: tonemap_reinhard(env),
        log: encode_log(env, m)?,
        dir: directional_encoding(env.width(), env.height())?,
        m_const: m,
    })
}

impl LightBundle {
    pub fn width(&self) -> usize {
        self.ldr.width()
    }

    pub fn height(&self) -> usize {
        self.ldr.height()
    }

    /// Writes `<stem>.ldr.png`, `<stem>.log.eten` and `<stem>.dir.png`.
    /// The log image is stored as a rank-4 `[1, H, W, 3]` tensor.
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let with_ext = |ext: &str| {
            let mut os = stem.as_os_str().to_owned();
            os.push(ext);
            std::path::PathBuf::from(os)
        };
        write_png_ldr(&self.ldr, with_ext(".ldr.png"))?;
        log_image_to_latent(&self.log)?.save(with_ext(".log.eten"))?;
        write_png_ldr(&self.dir, with_ext(".dir.png"))?;
        Ok(())
    }
}

/// Packs an RGB log image into a `[1, H, W, 3]` latent sequence.
pub fn log_image_to_latent(log: &ImageRgb) -> Result<LatentSeq> {
    let mut data = Vec::with_capacity(log.width() * log.height() * 3);
    for p in log.pixels() {
        data.extend_from_slice(&p.channels());
    }
    LatentSeq::new([1, log.height(), log.width(), 3], data)
}

/// Unpacks a `[1, H, W, 3]` latent back to an RGB image.
pub fn latent_to_log_image(seq: &LatentSeq) -> Result<ImageRgb> {
    let [n, h, w, c] = seq.dims();
    if n != 1 || c != 3 {
        return Err(Error::DimMismatch(format!(
            "expected [1, H, W, 3] log tensor, got {:?}",
            seq.dims()
        )));
    }
    let pixels = seq
        .data()
        .chunks_exact(3)
        .map(|v| Rgb::new(v[0], v[1], v[2]))
        .collect();
    ImageRgb::new(w, h, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_map(height: usize) -> EnvironmentMap {
        EnvironmentMap::from_fn(height, |x, y| {
            Rgb::new(
                (x as f32 * 7.3 + 0.1) % 11.0,
                (y as f32 * 3.1) % 5.0,
                ((x + y) as f32 * 1.7) % 2.0,
            )
        })
        .unwrap()
    }

    #[test]
    fn reinhard_values() {
        let env = EnvironmentMap::new(
            ImageRgb::new(
                2,
                1,
                vec![Rgb::new(0.0, 1.0, 60000.0), Rgb::splat(3.0)],
            )
            .unwrap(),
        )
        .unwrap();
        let ldr = tonemap_reinhard(&env);
        let p = ldr.pixel(0, 0);
        assert_eq!(p.r, 0.0);
        assert_eq!(p.g, 0.5);
        assert_relative_eq!(p.b as f64, 60000.0 / 60001.0, epsilon = 1e-6);
        assert_relative_eq!(ldr.pixel(1, 0).r, 0.75, epsilon = 1e-7);
    }

    #[test]
    fn reinhard_is_monotone() {
        let f = |v: f32| v / (1.0 + v);
        let mut prev = -1.0f32;
        for i in 0..1000 {
            let v = i as f32 * 7.3;
            let t = f(v);
            assert!(t >= prev);
            assert!(t < 1.0);
            prev = t;
        }
    }

    #[test]
    fn log_endpoints_exact() {
        let env = EnvironmentMap::new(
            ImageRgb::new(2, 1, vec![Rgb::splat(0.0), Rgb::splat(60000.0)]).unwrap(),
        )
        .unwrap();
        let log = encode_log(&env, 60000.0).unwrap();
        assert_eq!(log.pixel(0, 0).r, 0.0);
        assert_eq!(log.pixel(1, 0).r, 1.0);
    }

    #[test]
    fn log_of_e_minus_one() {
        let v = (std::f64::consts::E - 1.0) as f32;
        let env =
            EnvironmentMap::new(ImageRgb::new(2, 1, vec![Rgb::splat(v), Rgb::BLACK]).unwrap())
                .unwrap();
        let log = encode_log(&env, 60000.0).unwrap();
        // ln(1 + (e-1)) / ln(60001) = 1 / ln(60001)
        let expected = 1.0 / 60001f64.ln();
        assert_relative_eq!(log.pixel(0, 0).r as f64, expected, epsilon = 1e-7);
        assert_relative_eq!(expected, 0.09089, epsilon = 1e-5);
    }

    #[test]
    fn log_roundtrip() {
        let env = test_map(8);
        let log = encode_log(&env, DEFAULT_M).unwrap();
        let back = decode_log(&log, DEFAULT_M).unwrap();
        for (a, b) in env.image().pixels().iter().zip(back.image().pixels()) {
            for c in 0..3 {
                let (x, y) = (a.channel(c), b.channel(c));
                let denom = x.abs().max(1e-3);
                assert!((x - y).abs() / denom < 1e-5, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn decode_log_endpoints() {
        let log = ImageRgb::new(2, 1, vec![Rgb::splat(0.0), Rgb::splat(1.0)]).unwrap();
        let env = decode_log(&log, 60000.0).unwrap();
        assert_eq!(env.pixel(0, 0).r, 0.0);
        assert_relative_eq!(env.pixel(1, 0).r as f64, 60000.0, epsilon = 1e-3);
    }

    #[test]
    fn invalid_m_rejected() {
        let env = test_map(4);
        assert!(encode_log(&env, 0.0).is_err());
        assert!(encode_log(&env, -1.0).is_err());
    }

    #[test]
    fn overflow_preserved_and_counted() {
        let env = EnvironmentMap::new(
            ImageRgb::new(2, 1, vec![Rgb::splat(100.0), Rgb::splat(1.0)]).unwrap(),
        )
        .unwrap();
        let log = encode_log(&env, 10.0).unwrap();
        assert!(log.pixel(0, 0).r > 1.0);
        assert_eq!(log_overflow_count(&log), 3);
        let back = decode_log(&log, 10.0).unwrap();
        assert_relative_eq!(back.pixel(0, 0).r, 100.0, epsilon = 1e-3);
    }

    #[test]
    fn directional_known_pixels() {
        // no pixel center sits exactly at phi = 0, so check the decoded
        // vectors are unit everywhere and pin the forward/up encodings
        // through the angle convention directly
        let dir = directional_encoding(64, 32).unwrap();
        for y in 0..32 {
            for x in 0..64 {
                let v = decode_direction(dir.pixel(x, y));
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                assert!((n - 1.0).abs() < 1e-6, "norm {}", n);
            }
        }
        // top row points nearly up, so stored vector is nearly -Y:
        // rgb ~ (0.5, 0.0, 0.5)
        let top = dir.pixel(0, 0);
        assert!((top.g - 0.0).abs() < 0.05);
        // forward direction d=(0,0,-1) encodes to (0.5, 0.5, 1.0)
        let e = [0.0, 0.0, 1.0];
        let rgb = Rgb::new(
            ((e[0] + 1.0) * 0.5) as f32,
            ((e[1] + 1.0) * 0.5) as f32,
            ((e[2] + 1.0) * 0.5) as f32,
        );
        assert_eq!(rgb, Rgb::new(0.5, 0.5, 1.0));
    }

    #[test]
    fn directional_rejects_bad_dims() {
        assert!(directional_encoding(63, 32).is_err());
    }

    #[test]
    fn bundle_black_map() {
        let env = EnvironmentMap::filled(4, Rgb::BLACK).unwrap();
        let b = encode_bundle(&env, DEFAULT_M).unwrap();
        assert!(b.ldr.image().pixels().iter().all(|p| *p == Rgb::BLACK));
        assert!(b.log.pixels().iter().all(|p| *p == Rgb::BLACK));
        assert_eq!(b.dir.image(), directional_encoding(8, 4).unwrap().image());
        assert_eq!(b.width(), 8);
        assert_eq!(b.height(), 4);
    }

    #[test]
    fn bundle_log_decodes_back() {
        let env = test_map(8);
        let b = encode_bundle(&env, DEFAULT_M).unwrap();
        let back = decode_log(&b.log, b.m_const).unwrap();
        for (a, bb) in env.image().pixels().iter().zip(back.image().pixels()) {
            assert_relative_eq!(a.r, bb.r, max_relative = 1e-5, epsilon = 1e-6);
        }
    }

    #[test]
    fn log_image_latent_roundtrip() {
        let env = test_map(4);
        let log = encode_log(&env, DEFAULT_M).unwrap();
        let latent = log_image_to_latent(&log).unwrap();
        assert_eq!(latent.dims(), [1, 4, 8, 3]);
        let back = latent_to_log_image(&latent).unwrap();
        assert_eq!(back, log);
    }
}
