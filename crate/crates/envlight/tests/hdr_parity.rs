//! Cross-implementation parity for the Radiance HDR codec: files written by
//! this crate must decode identically through the `image` crate's
//! independent reader, and files written by `image` must parse here, with
//! agreement inside one shared-exponent mantissa step.

use std::io::Cursor;

use envlight::hdr::{encode_hdr, parse_hdr, rgbe_encode};
use envlight::{ImageRgb, Rgb};
use image::codecs::hdr::{HdrDecoder, HdrEncoder};
use image::ImageDecoder;

fn test_images() -> Vec<ImageRgb> {
    let mut state = 0x1234_5678_9abc_def0u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    vec![
        ImageRgb::filled(16, 8, Rgb::splat(0.5)),
        ImageRgb::from_fn(32, 16, |x, y| {
            Rgb::new(x as f32 * 0.37, y as f32 * 2.1, (x * y) as f32 * 0.01)
        }),
        ImageRgb::from_fn(64, 32, |_, _| {
            Rgb::new(
                (next() * 1e4) as f32,
                next() as f32,
                (next() * 1e-2) as f32,
            )
        }),
        ImageRgb::from_fn(16, 16, |x, y| {
            if x == 7 && y == 3 {
                Rgb::splat(6e4)
            } else {
                Rgb::BLACK
            }
        }),
        // flat-scanline width (below the RLE range)
        ImageRgb::from_fn(4, 4, |x, y| Rgb::new(x as f32, y as f32, 0.25)),
    ]
}

/// One mantissa step at the exponent this color encodes with.
fn mantissa_step(c: Rgb) -> f32 {
    let e = rgbe_encode(c)[3];
    if e == 0 {
        return 1e-30;
    }
    f32::powi(2.0, e as i32 - 136)
}

fn decode_with_image_crate(bytes: &[u8]) -> (u32, u32, Vec<Rgb>) {
    let decoder = HdrDecoder::new(Cursor::new(bytes)).expect("image crate accepts the header");
    let (w, h) = decoder.dimensions();
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder.read_image(&mut buf).expect("image crate decodes");
    let pixels = buf
        .chunks_exact(12)
        .map(|c| {
            Rgb::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..8].try_into().unwrap()),
                f32::from_le_bytes(c[8..12].try_into().unwrap()),
            )
        })
        .collect();
    (w, h, pixels)
}

#[test]
fn our_files_decode_identically_elsewhere() {
    for (i, img) in test_images().iter().enumerate() {
        let bytes = encode_hdr(img).unwrap();
        let ours = parse_hdr(&bytes).unwrap();
        let (w, h, theirs) = decode_with_image_crate(&bytes);
        assert_eq!((w as usize, h as usize), (img.width(), img.height()));
        for (j, (a, b)) in ours.pixels().iter().zip(&theirs).enumerate() {
            let step = mantissa_step(*a);
            for c in 0..3 {
                let d = (a.channel(c) - b.channel(c)).abs();
                assert!(
                    d <= step,
                    "image {} pixel {} channel {}: {} vs {} (step {})",
                    i,
                    j,
                    c,
                    a.channel(c),
                    b.channel(c),
                    step
                );
            }
        }
    }
}

#[test]
fn foreign_files_parse_here() {
    for (i, img) in test_images().iter().enumerate() {
        let pixels: Vec<image::Rgb<f32>> = img
            .pixels()
            .iter()
            .map(|p| image::Rgb([p.r, p.g, p.b]))
            .collect();
        let mut bytes = Vec::new();
        HdrEncoder::new(&mut bytes)
            .encode(&pixels, img.width(), img.height())
            .expect("image crate encodes");
        let ours = parse_hdr(&bytes).unwrap();
        assert_eq!((ours.width(), ours.height()), (img.width(), img.height()));
        for (j, (a, b)) in ours.pixels().iter().zip(img.pixels()).enumerate() {
            let step = mantissa_step(*b);
            for c in 0..3 {
                let d = (a.channel(c) - b.channel(c)).abs();
                assert!(
                    d <= step,
                    "image {} pixel {} channel {}: {} vs original {} (step {})",
                    i,
                    j,
                    c,
                    a.channel(c),
                    b.channel(c),
                    step
                );
            }
        }
    }
}
