//! Property tests for crate-wide invariants: parser robustness, format
//! round trips, encoding bijections, and the algebraic laws of the latent
//! procedures.

use proptest::prelude::*;

use envlight::hdr::{encode_hdr, parse_hdr};
use envlight::tensor::{encode_tensor, parse_tensor, Tensor};
use envlight::{
    build_sic_pair, decode_log, encode_log, group_fuse, interpolate_latents, warp_env,
    EnvironmentMap, GBufferLatents, ImageRgb, LatentSeq, Rgb, Rotation,
};

fn arb_radiance() -> impl Strategy<Value = f32> {
    prop_oneof![
        Just(0.0f32),
        (0.0f64..60000.0).prop_map(|v| v as f32),
        (0.0f64..1.0).prop_map(|v| v as f32),
    ]
}

fn arb_env(max_h: usize) -> impl Strategy<Value = EnvironmentMap> {
    (1..=max_h).prop_flat_map(|h| {
        prop::collection::vec((arb_radiance(), arb_radiance(), arb_radiance()), h * h * 2)
            .prop_map(move |vals| {
                let pixels = vals.into_iter().map(|(r, g, b)| Rgb::new(r, g, b)).collect();
                EnvironmentMap::new(ImageRgb::new(2 * h, h, pixels).unwrap()).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hdr_fuzz_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..4096)) {
        let _ = parse_hdr(&bytes);
    }

    #[test]
    fn hdr_mutated_valid_file_never_panics(
        env in arb_env(8),
        flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8)
    ) {
        let mut bytes = encode_hdr(env.image()).unwrap();
        for (idx, val) in flips {
            let i = idx.index(bytes.len());
            bytes[i] = val;
        }
        let _ = parse_hdr(&bytes);
    }

    #[test]
    fn hdr_second_roundtrip_is_fixed_point(env in arb_env(8)) {
        // one write quantizes; after that, write/read is the identity
        let once = parse_hdr(&encode_hdr(env.image()).unwrap()).unwrap();
        let twice = parse_hdr(&encode_hdr(&once).unwrap()).unwrap();
        prop_assert_eq!(&once, &twice);
        // and the re-encoded bytes are identical too
        prop_assert_eq!(encode_hdr(&once).unwrap(), encode_hdr(&twice).unwrap());
    }

    #[test]
    fn tensor_roundtrip_bit_exact(
        dims in prop::collection::vec(1u64..5, 1..5),
        seedval in any::<f32>().prop_filter("finite", |v| v.is_finite()),
    ) {
        let len: usize = dims.iter().map(|&d| d as usize).product();
        let data: Vec<f32> = (0..len)
            .map(|i| seedval + i as f32 * 0.37 - (i % 3) as f32)
            .collect();
        let t = Tensor::new(dims, data).unwrap();
        let back = parse_tensor(&encode_tensor(&t).unwrap()).unwrap();
        prop_assert_eq!(back.dims, t.dims);
        for (a, b) in back.data.iter().zip(&t.data) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn log_roundtrip_within_tolerance(env in arb_env(6)) {
        let log = encode_log(&env, 60000.0).unwrap();
        let back = decode_log(&log, 60000.0).unwrap();
        for (a, b) in env.image().pixels().iter().zip(back.image().pixels()) {
            for c in 0..3 {
                let (x, y) = (a.channel(c) as f64, b.channel(c) as f64);
                prop_assert!((x - y).abs() <= x.abs().max(1e-4) * 1e-5,
                    "decode({}) -> {}", x, y);
            }
        }
    }

    #[test]
    fn reinhard_order_preserving(a in arb_radiance(), b in arb_radiance()) {
        let f = |v: f32| v / (1.0 + v);
        if a <= b {
            prop_assert!(f(a) <= f(b));
        } else {
            prop_assert!(f(b) <= f(a));
        }
    }

    #[test]
    fn warp_identity_bit_exact(env in arb_env(8)) {
        let out = warp_env(&env, &Rotation::IDENTITY);
        prop_assert_eq!(out, env);
    }

    #[test]
    fn group_fuse_linearity(
        data in prop::collection::vec(-100.0f32..100.0, 5 * 8),
        data2 in prop::collection::vec(-100.0f32..100.0, 5 * 8),
    ) {
        let dims = [2usize, 2, 2, 1];
        let cut = |d: &[f32], i: usize| {
            LatentSeq::new(dims, d[i * 8..(i + 1) * 8].to_vec()).unwrap()
        };
        let g1 = GBufferLatents::new(
            cut(&data, 0), cut(&data, 1), cut(&data, 2), cut(&data, 3), cut(&data, 4),
        ).unwrap();
        let g2 = GBufferLatents::new(
            cut(&data2, 0), cut(&data2, 1), cut(&data2, 2), cut(&data2, 3), cut(&data2, 4),
        ).unwrap();
        let sum = GBufferLatents::new(
            g1.base_color.add(&g2.base_color).unwrap(),
            g1.normal.add(&g2.normal).unwrap(),
            g1.depth.add(&g2.depth).unwrap(),
            g1.roughness.add(&g2.roughness).unwrap(),
            g1.metallic.add(&g2.metallic).unwrap(),
        ).unwrap();
        let (a1, n1) = group_fuse(&g1);
        let (a2, n2) = group_fuse(&g2);
        let (a3, n3) = group_fuse(&sum);
        // the two association orders differ by a few ulps of the summand
        // magnitudes, even when the result itself cancels to near zero
        for (i, (x, y)) in a3.data().iter().zip(a1.add(&a2).unwrap().data()).enumerate() {
            let scale: f32 = [0usize, 2, 4]
                .iter()
                .map(|&g| data[g * 8 + i].abs() + data2[g * 8 + i].abs())
                .sum();
            prop_assert!((x - y).abs() <= scale.max(1.0) * 1e-5, "{} vs {}", x, y);
        }
        for (i, (x, y)) in n3.data().iter().zip(n1.add(&n2).unwrap().data()).enumerate() {
            let scale: f32 = [1usize, 3]
                .iter()
                .map(|&g| data[g * 8 + i].abs() + data2[g * 8 + i].abs())
                .sum();
            prop_assert!((x - y).abs() <= scale.max(1.0) * 1e-5, "{} vs {}", x, y);
        }
    }

    #[test]
    fn interpolation_stays_in_bounds(
        a in prop::collection::vec(-1000.0f32..1000.0, 8),
        b in prop::collection::vec(-1000.0f32..1000.0, 8),
        w in 0.0f64..1e12,
    ) {
        let dims = [1usize, 2, 2, 2];
        let za = LatentSeq::new(dims, a.clone()).unwrap();
        let zb = LatentSeq::new(dims, b.clone()).unwrap();
        let out = interpolate_latents(&za, &zb, w).unwrap();
        for ((x, p), q) in out.data().iter().zip(&a).zip(&b) {
            let lo = p.min(*q);
            let hi = p.max(*q);
            prop_assert!(*x >= lo && *x <= hi, "{} outside [{}, {}]", x, lo, hi);
        }
    }

    #[test]
    fn sic_correspondence_is_involution(n in 1usize..200) {
        let frames: Vec<usize> = (0..n).collect();
        let pair = build_sic_pair(n, &frames).unwrap();
        for i in 1..=n {
            prop_assert_eq!(pair.correspondence(pair.correspondence(i)), i);
        }
        prop_assert_eq!(pair.condition, n - 1);
        // reversed list is an exact mirror
        let mirrored: Vec<usize> = pair.forward_frames.iter().rev().copied().collect();
        prop_assert_eq!(&pair.reversed_frames, &mirrored);
    }
}
