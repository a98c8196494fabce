//! The `selfcheck` battery: one deterministic check per core invariant,
//! reported as pass/fail lines and a machine-readable manifest.

use serde::Serialize;

use envlight::{
    aggregate_per_video, angular_error, assemble_sequence, build_sic_pair, decode_log,
    disassemble_sequence, encode_log, extract_peaks, interpolate_latents,
    material_consistency, mse, plan_clips, psnr, render_sphere, solid_angle_map, ssim,
    tonemap_reinhard_image, warp_env, ConditionSource, EnvironmentMap, ImageRgb, LatentSeq, Rgb,
    Rotation, SphereMode, SphereRenderConfig,
};

#[derive(Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

type Check = (&'static str, fn(u64, f64) -> Result<String, String>);

pub fn run_all(seed: u64, m: f64) -> Vec<CheckResult> {
    let checks: Vec<Check> = vec![
        ("log-roundtrip", check_log_roundtrip),
        ("hdr-roundtrip", check_hdr_roundtrip),
        ("hdr-fuzz", check_hdr_fuzz),
        ("tensor-roundtrip", check_tensor_roundtrip),
        ("warp-identity", check_warp_identity),
        ("warp-integer-yaw", check_warp_integer_yaw),
        ("warp-inverse", check_warp_inverse),
        ("solid-angle-total", check_solid_angle),
        ("white-furnace", check_white_furnace),
        ("alignment-oracle", check_alignment),
        ("sequence-layout", check_sequence_layout),
        ("interpolation-endpoints", check_interpolation),
        ("sic-involution", check_sic),
        ("stream-plan", check_stream_plan),
        ("metric-identities", check_metrics),
        ("peak-extraction", check_peaks),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f(seed, m) {
            Ok(detail) => CheckResult {
                name: name.to_string(),
                passed: true,
                detail,
            },
            Err(detail) => CheckResult {
                name: name.to_string(),
                passed: false,
                detail,
            },
        })
        .collect()
}

/// Tiny deterministic value stream for the checks.
struct Lcg(u64);

impl Lcg {
    fn new(seed: u64, salt: u64) -> Self {
        Lcg(seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15) | 1)
    }

    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn smooth_map(height: usize, lcg: &mut Lcg) -> EnvironmentMap {
    let width = height * 2;
    // amplitudes bounded so every channel stays well above zero
    let (a, b, c) = (
        0.4 * lcg.next_f64(),
        0.4 * lcg.next_f64(),
        0.4 * lcg.next_f64(),
    );
    EnvironmentMap::from_fn(height, |x, y| {
        let d = envlight::pixel_direction(width, height, x, y);
        Rgb::new(
            (1.0 + a * d[0] + 0.15 * d[1]) as f32,
            (1.0 + b * d[1]) as f32,
            (1.0 + c * d[2] + 0.15 * d[0]) as f32,
        )
    })
    .expect("2:1 dims")
}

fn check_log_roundtrip(seed: u64, m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v = lcg.next_f64() * m;
        let enc = ((v).ln_1p() / m.ln_1p()) as f32;
        let dec = (enc as f64 * m.ln_1p()).exp_m1();
        let rel = (dec - v).abs() / v.abs().max(1e-4);
        worst = worst.max(rel);
    }
    let env = EnvironmentMap::new(
        ImageRgb::new(2, 1, vec![Rgb::splat(0.0), Rgb::splat(m as f32)]).expect("2x1"),
    )
    .expect("valid");
    let log = encode_log(&env, m).map_err(|e| e.to_string())?;
    if log.pixel(0, 0).r != 0.0 || (log.pixel(1, 0).r - 1.0).abs() > 1e-9 {
        return Err("endpoints not exact".into());
    }
    let back = decode_log(&log, m).map_err(|e| e.to_string())?;
    let end_rel = (back.pixel(1, 0).r as f64 - m).abs() / m;
    if worst < 1e-5 && end_rel < 1e-5 {
        Ok(format!("max rel err {:.2e}", worst))
    } else {
        Err(format!("max rel err {:.2e}, endpoint rel {:.2e}", worst, end_rel))
    }
}

fn check_hdr_roundtrip(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 2);
    let img = ImageRgb::from_fn(32, 16, |_, _| {
        Rgb::new(
            (lcg.next_f64() * 100.0) as f32,
            (lcg.next_f64() * 10.0) as f32,
            lcg.next_f64() as f32,
        )
    });
    let once = envlight::hdr::parse_hdr(&envlight::hdr::encode_hdr(&img).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let twice =
        envlight::hdr::parse_hdr(&envlight::hdr::encode_hdr(&once).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    if once == twice {
        Ok("fixed point after one quantization".into())
    } else {
        Err("second roundtrip changed pixels".into())
    }
}

fn check_hdr_fuzz(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 3);
    let mut errors = 0usize;
    for _ in 0..1000 {
        let len = (lcg.next_f64() * 256.0) as usize;
        let bytes: Vec<u8> = (0..len).map(|_| (lcg.next_f64() * 256.0) as u8).collect();
        if envlight::hdr::parse_hdr(&bytes).is_err() {
            errors += 1;
        }
    }
    Ok(format!("{}/1000 random buffers rejected cleanly", errors))
}

fn check_tensor_roundtrip(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 4);
    let data: Vec<f32> = (0..2 * 3 * 4 * 5)
        .map(|_| (lcg.next_f64() * 2.0 - 1.0) as f32)
        .collect();
    let t = envlight::Tensor::new(vec![2, 3, 4, 5], data).map_err(|e| e.to_string())?;
    let bytes = envlight::tensor::encode_tensor(&t).map_err(|e| e.to_string())?;
    let back = envlight::tensor::parse_tensor(&bytes).map_err(|e| e.to_string())?;
    let same = back.dims == t.dims
        && back
            .data
            .iter()
            .zip(&t.data)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    if same {
        Ok(format!("{} bytes bit-exact", bytes.len()))
    } else {
        Err("tensor bytes not bit-exact".into())
    }
}

fn check_warp_identity(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 5);
    let env = smooth_map(32, &mut lcg);
    if warp_env(&env, &Rotation::IDENTITY) == env {
        Ok("bit-exact".into())
    } else {
        Err("identity warp changed pixels".into())
    }
}

fn check_warp_integer_yaw(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 6);
    let env = smooth_map(32, &mut lcg);
    let w = env.width();
    let k = 5usize;
    let rel = Rotation::yaw(std::f64::consts::TAU * k as f64 / w as f64);
    let out = warp_env(&env, &rel);
    for y in 0..env.height() {
        for x in 0..w {
            if out.pixel(x, y) != env.pixel((x + w - k) % w, y) {
                return Err(format!("mismatch at ({}, {})", x, y));
            }
        }
    }
    Ok(format!("column roll by {} exact", k))
}

fn check_warp_inverse(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 7);
    let env = smooth_map(128, &mut lcg);
    let r = Rotation::yaw(0.61).compose(&Rotation::pitch(0.37));
    let back = warp_env(&warp_env(&env, &r), &r.transpose());
    let m = mse(env.image(), back.image()).map_err(|e| e.to_string())?;
    let p = if m == 0.0 { 99.0 } else { 10.0 * (4.0 / m).log10() };
    if p > 40.0 {
        Ok(format!("psnr {:.1} dB", p))
    } else {
        Err(format!("psnr {:.1} dB <= 40", p))
    }
}

fn check_solid_angle(_seed: u64, _m: f64) -> Result<String, String> {
    let sa = solid_angle_map(32, 64).map_err(|e| e.to_string())?;
    let total = sa.total();
    let rel = (total - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
    if rel < 1e-3 {
        Ok(format!("total {:.6} (rel err {:.2e})", total, rel))
    } else {
        Err(format!("total {:.6} off by {:.2e}", total, rel))
    }
}

fn check_white_furnace(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 8);
    let c = Rgb::new(
        (0.25 + lcg.next_f64()) as f32,
        (0.25 + lcg.next_f64()) as f32,
        (0.25 + lcg.next_f64()) as f32,
    );
    let env = EnvironmentMap::filled(32, c).expect("valid");
    let out = render_sphere(
        &env,
        &SphereRenderConfig {
            image_size: 24,
            mode: SphereMode::Diffuse,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (p, &covered) in out.image.pixels().iter().zip(&out.mask) {
        if !covered {
            continue;
        }
        for ch in 0..3 {
            let rel = ((p.channel(ch) - c.channel(ch)) / c.channel(ch)).abs() as f64;
            worst = worst.max(rel);
        }
    }
    if worst < 0.01 {
        Ok(format!("max rel dev {:.2e}", worst))
    } else {
        Err(format!("max rel dev {:.2e} >= 1%", worst))
    }
}

fn check_alignment(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 9);
    let env = smooth_map(64, &mut lcg);
    let r = Rotation::yaw(0.9).compose(&Rotation::pitch(-0.4));
    let cfg_fixed = SphereRenderConfig {
        image_size: 96,
        ..Default::default()
    };
    let cfg_rot = SphereRenderConfig {
        image_size: 96,
        camera: r,
        ..Default::default()
    };
    let a = render_sphere(&warp_env(&env, &r), &cfg_fixed).map_err(|e| e.to_string())?;
    let b = render_sphere(&env, &cfg_rot).map_err(|e| e.to_string())?;
    let ta = tonemap_reinhard_image(&a.image);
    let tb = tonemap_reinhard_image(&b.image);
    let p = psnr(ta.image(), tb.image(), 1.0).map_err(|e| e.to_string())?;
    if p > 35.0 {
        Ok(format!("tonemapped psnr {:.1} dB", p))
    } else {
        Err(format!("tonemapped psnr {:.1} dB <= 35", p))
    }
}

fn check_sequence_layout(_seed: u64, _m: f64) -> Result<String, String> {
    let n = 5usize;
    let dims = [n, 2, 2, 2];
    let count: usize = dims.iter().product();
    let make = |off: usize| {
        LatentSeq::new(dims, (0..count).map(|i| ((i + off) % 13) as f32).collect()).expect("dims")
    };
    let z_ref = LatentSeq::new([1, 2, 2, 2], (0..8).map(|i| i as f32).collect()).expect("dims");
    let (t, e, a, nr, light) = (make(1), make(2), make(3), make(4), make(5));
    let seq = assemble_sequence(&z_ref, &t, &e, &a, &nr, &light).map_err(|e| e.to_string())?;
    if seq.n_frames() != 1 + 4 * n {
        return Err(format!("frame count {} != {}", seq.n_frames(), 1 + 4 * n));
    }
    let (r2, t2, e2, a2, nl2) = disassemble_sequence(&seq);
    let nr2 = nl2.sub(&light).map_err(|e| e.to_string())?;
    if r2 == z_ref && t2 == t && e2 == e && a2 == a && nr2 == nr {
        Ok(format!("{} frames, inputs recovered", seq.n_frames()))
    } else {
        Err("disassembly did not recover inputs".into())
    }
}

fn check_interpolation(seed: u64, _m: f64) -> Result<String, String> {
    let mut lcg = Lcg::new(seed, 10);
    let dims = [2, 2, 2, 2];
    let count: usize = dims.iter().product();
    let a = LatentSeq::new(
        dims,
        (0..count).map(|_| (lcg.next_f64() * 4.0 - 2.0) as f32).collect(),
    )
    .expect("dims");
    let b = LatentSeq::new(
        dims,
        (0..count).map(|_| (lcg.next_f64() * 4.0 - 2.0) as f32).collect(),
    )
    .expect("dims");
    let w0 = interpolate_latents(&a, &b, 0.0).map_err(|e| e.to_string())?;
    if w0 != a {
        return Err("w=0 is not z_with".into());
    }
    let winf = interpolate_latents(&a, &b, 1e9).map_err(|e| e.to_string())?;
    for (x, y) in winf.data().iter().zip(b.data()) {
        if (x - y).abs() > y.abs().max(1.0) * 1e-6 {
            return Err(format!("w=1e9: {} vs {}", x, y));
        }
    }
    Ok("w=0 exact, w=1e9 within 1e-6".into())
}

fn check_sic(_seed: u64, _m: f64) -> Result<String, String> {
    for n in [1usize, 9, 57] {
        let frames: Vec<usize> = (0..n).collect();
        let pair = build_sic_pair(n, &frames).map_err(|e| e.to_string())?;
        for i in 1..=n {
            if pair.correspondence(pair.correspondence(i)) != i {
                return Err(format!("n={}: correspondence not an involution at {}", n, i));
            }
        }
        if pair.condition != n - 1 {
            return Err(format!("n={}: condition is not frame n", n));
        }
    }
    Ok("involution for n in {1, 9, 57}".into())
}

fn check_stream_plan(_seed: u64, _m: f64) -> Result<String, String> {
    let plan = plan_clips(169, 57, 1).map_err(|e| e.to_string())?;
    let got: Vec<(usize, usize)> = plan.clips.iter().map(|c| (c.start, c.length)).collect();
    if got != vec![(0, 57), (56, 57), (112, 57)] {
        return Err(format!("169-frame plan {:?}", got));
    }
    if plan.clips[1].condition != (ConditionSource::PrevClip { clip: 0, frame: 56 })
        || plan.clips[2].condition != (ConditionSource::PrevClip { clip: 1, frame: 112 })
    {
        return Err("169-frame conditions wrong".into());
    }
    let plan = plan_clips(100, 57, 1).map_err(|e| e.to_string())?;
    let got: Vec<(usize, usize)> = plan.clips.iter().map(|c| (c.start, c.length)).collect();
    if got != vec![(0, 57), (51, 49)] {
        return Err(format!("100-frame plan {:?}", got));
    }
    Ok("169 and 100 frame plans exact".into())
}

fn check_metrics(_seed: u64, _m: f64) -> Result<String, String> {
    let f = vec![vec![1.0f32, 2.0], vec![3.0, 4.0]];
    let orth_a = vec![vec![1.0f32, 0.0]];
    let orth_b = vec![vec![0.0f32, 1.0]];
    let anti: Vec<Vec<f32>> = f.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    let mc_same = material_consistency(&f, &f).map_err(|e| e.to_string())?;
    let mc_orth = material_consistency(&orth_a, &orth_b).map_err(|e| e.to_string())?;
    let mc_anti = material_consistency(&f, &anti).map_err(|e| e.to_string())?;
    if (mc_same - 1.0).abs() > 1e-9 || (mc_orth - 0.5).abs() > 1e-9 || mc_anti.abs() > 1e-9 {
        return Err(format!("mc {} {} {}", mc_same, mc_orth, mc_anti));
    }

    let x = ImageRgb::filled(16, 16, Rgb::splat(0.0));
    let y = ImageRgb::filled(16, 16, Rgb::splat(0.1));
    let p = psnr(&x, &y, 1.0).map_err(|e| e.to_string())?;
    if (p - 20.0).abs() > 1e-5 {
        return Err(format!("psnr {} != 20", p));
    }
    let s = ssim(&y, &y).map_err(|e| e.to_string())?;
    if (s - 1.0).abs() > 1e-9 {
        return Err(format!("ssim self {} != 1", s));
    }
    let rep = aggregate_per_video("deg", &[vec![0.0, 8.0], vec![0.0, 12.0]])
        .map_err(|e| e.to_string())?;
    if (rep.std - 5.0).abs() > 1e-12 {
        return Err(format!("avg std {} != 5", rep.std));
    }
    Ok("mc / psnr / ssim / aggregation identities hold".into())
}

fn check_peaks(_seed: u64, _m: f64) -> Result<String, String> {
    let (w, h) = (64usize, 32usize);
    let mut img = ImageRgb::filled(w, h, Rgb::splat(0.01));
    img.set_pixel(40, 12, Rgb::splat(500.0));
    let env = EnvironmentMap::new(img).expect("valid");
    let peaks = extract_peaks(&env, 1, 10.0).map_err(|e| e.to_string())?;
    let gt = envlight::PeakSet {
        peaks: vec![envlight::Peak {
            direction: envlight::pixel_direction(w, h, 40, 12),
            luminance: 500.0,
        }],
        nms_radius_deg: 10.0,
    };
    let err = angular_error(&peaks, &gt, 1).map_err(|e| e.to_string())?;
    if err < 1e-9 {
        Ok(format!("single-texel peak error {:.1e} deg", err))
    } else {
        Err(format!("peak error {} deg", err))
    }
}
