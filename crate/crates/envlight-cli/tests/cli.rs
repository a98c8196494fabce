//! Behavior tests for the `envlight-relit` binary: exit codes, JSON errors,
//! the documented subcommand examples, and byte-level rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

use envlight::{write_hdr, EnvironmentMap, ImageRgb, LatentSeq, Rgb};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_envlight-relit"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .args(["--out-dir", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn make_smooth_hdr(path: &Path, height: usize) {
    let width = 2 * height;
    let env = EnvironmentMap::from_fn(height, |x, y| {
        let d = envlight::pixel_direction(width, height, x, y);
        Rgb::new(
            (1.0 + 0.4 * d[0] + 0.2 * (3.0 * d[1]).sin()) as f32,
            (1.0 + 0.3 * d[1]) as f32,
            (1.0 + 0.2 * d[2] + 0.15 * (2.0 * d[0]).cos()) as f32,
        )
    })
    .unwrap();
    write_hdr(&env, path).unwrap();
}

#[test]
fn warp_inverse_via_cli_recovers_input() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.hdr");
    make_smooth_hdr(&input, 64);

    let out = run(
        &["warp", input.to_str().unwrap(), "--yaw", "90", "--output", "w"],
        tmp.path(),
    );
    assert!(out.status.success(), "{:?}", out);
    let w = tmp.path().join("w.hdr");
    let out = run(
        &["warp", w.to_str().unwrap(), "--yaw", "-90", "--output", "back"],
        tmp.path(),
    );
    assert!(out.status.success(), "{:?}", out);

    let orig = envlight::read_hdr(&input).unwrap();
    let back = envlight::read_hdr(tmp.path().join("back.hdr")).unwrap();
    let p = envlight::psnr(orig.image(), back.image(), 2.0).unwrap();
    assert!(p > 40.0, "psnr {}", p);
}

#[test]
fn stream_plan_json_matches_expected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["stream-plan", "--frames", "169"], tmp.path());
    assert!(out.status.success());
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("plan.json")).unwrap())
            .unwrap();
    let clips = plan["clips"].as_array().unwrap();
    assert_eq!(clips.len(), 3);
    assert_eq!(clips[0]["start"], 0);
    assert_eq!(clips[1]["start"], 56);
    assert_eq!(clips[2]["start"], 112);
    assert_eq!(clips[2]["length"], 57);
    assert_eq!(clips[1]["condition"]["source"], "prev_clip");
    assert_eq!(clips[1]["condition"]["frame"], 56);
    assert_eq!(clips[2]["condition"]["frame"], 112);
}

#[test]
fn encode_black_map_gives_zero_log() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("black.hdr");
    write_hdr(&EnvironmentMap::filled(8, Rgb::BLACK).unwrap(), &input).unwrap();
    let out = run(&["encode", input.to_str().unwrap()], tmp.path());
    assert!(out.status.success());
    let log = LatentSeq::load(tmp.path().join("black.log.eten")).unwrap();
    assert_eq!(log.dims(), [1, 8, 16, 3]);
    assert!(log.data().iter().all(|&v| v == 0.0));
}

#[test]
fn encode_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.hdr");
    make_smooth_hdr(&input, 16);

    let read_all = |dir: &Path| {
        ["in.ldr.png", "in.log.eten", "in.dir.png", "encode.manifest.json"]
            .iter()
            .map(|n| std::fs::read(dir.join(n)).unwrap())
            .collect::<Vec<_>>()
    };
    assert!(run(&["encode", input.to_str().unwrap()], tmp.path()).status.success());
    let first = read_all(tmp.path());
    assert!(run(&["encode", input.to_str().unwrap()], tmp.path()).status.success());
    let second = read_all(tmp.path());
    assert_eq!(first, second);
}

#[test]
fn trajgen_same_seed_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["trajgen", "--pattern", "both", "--frames", "9", "--seed", "42"];
    assert!(run(&args, tmp.path()).status.success());
    let a = std::fs::read(tmp.path().join("traj.json")).unwrap();
    assert!(run(&args, tmp.path()).status.success());
    let b = std::fs::read(tmp.path().join("traj.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn render_sphere_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.hdr");
    make_smooth_hdr(&input, 16);
    let out = run(
        &[
            "render-sphere",
            input.to_str().unwrap(),
            "--mode",
            "mirror",
            "--size",
            "32",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    for name in ["sphere.hdr", "sphere.png", "sphere.mask.png"] {
        assert!(tmp.path().join(name).exists(), "{} missing", name);
    }
}

#[test]
fn encode_then_decode_log_roundtrips() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.hdr");
    make_smooth_hdr(&input, 16);
    assert!(run(&["encode", input.to_str().unwrap()], tmp.path()).status.success());
    let log = tmp.path().join("in.log.eten");
    assert!(run(
        &["decode-log", log.to_str().unwrap(), "--output", "back.hdr"],
        tmp.path(),
    )
    .status
    .success());
    let orig = envlight::read_hdr(&input).unwrap();
    let back = envlight::read_hdr(tmp.path().join("back.hdr")).unwrap();
    // writing back.hdr re-quantizes to RGBE: allow one mantissa step at the
    // pixel's shared exponent on top of the log round trip
    for (a, b) in orig.image().pixels().iter().zip(back.image().pixels()) {
        let e = envlight::rgbe_encode(*a)[3];
        let step = f32::powi(2.0, e as i32 - 136);
        for c in 0..3 {
            let (x, y) = (a.channel(c), b.channel(c));
            assert!((x - y).abs() <= step * 1.01, "{} vs {} (step {})", x, y, step);
        }
    }
}

#[test]
fn eval_psnr_directory_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let (da, db) = (tmp.path().join("a"), tmp.path().join("b"));
    std::fs::create_dir_all(&da).unwrap();
    std::fs::create_dir_all(&db).unwrap();
    for i in 0..3 {
        let a = EnvironmentMap::filled(8, Rgb::splat(0.2 + 0.1 * i as f32)).unwrap();
        let b = EnvironmentMap::filled(8, Rgb::splat(0.3 + 0.1 * i as f32)).unwrap();
        write_hdr(&a, da.join(format!("f{}.hdr", i))).unwrap();
        write_hdr(&b, db.join(format!("f{}.hdr", i))).unwrap();
    }
    let out = run(
        &["eval-psnr", da.to_str().unwrap(), db.to_str().unwrap()],
        tmp.path(),
    );
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("psnr.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rep["report"]["per_frame"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(tmp.path().join("psnr.report.csv")).unwrap();
    assert!(csv.starts_with("frame,value\n"));
}

#[test]
fn thread_cap_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let run_with_threads = |n: &str| {
        let out = bin()
            .env("ENVLIGHT_THREADS", n)
            .args(["selfcheck", "--seed", "9", "--out-dir", tmp.path().to_str().unwrap()])
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        std::fs::read(tmp.path().join("selfcheck.manifest.json")).unwrap()
    };
    let single = run_with_threads("1");
    let many = run_with_threads("4");
    assert_eq!(single, many);
}

#[test]
fn missing_input_exits_3_with_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["encode", "nonexistent.hdr"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(err["error"].is_string());
    assert_eq!(err["kind"], "io");
}

#[test]
fn invariant_violation_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["stream-plan", "--frames", "30"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "invalid-argument");
}

#[test]
fn usage_error_exits_2_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["no-such-command"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "usage");
}

#[test]
fn corrupt_hdr_exits_3_with_offset_message() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.hdr");
    std::fs::write(&bad, b"#?RADIANCE\n\n-Y 4 +X 8\n\x02\x02\x00\x08").unwrap();
    let out = run(&["encode", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "hdr-parse");
    assert!(err["error"].as_str().unwrap().contains("byte"));
}

#[test]
fn interp_endpoint_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = LatentSeq::new([1, 2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = LatentSeq::new([1, 2, 2, 1], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
    a.save(tmp.path().join("a.eten")).unwrap();
    b.save(tmp.path().join("b.eten")).unwrap();
    let out = run(
        &[
            "interp",
            tmp.path().join("a.eten").to_str().unwrap(),
            tmp.path().join("b.eten").to_str().unwrap(),
            "--w",
            "0",
            "--output",
            "z.eten",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let z = LatentSeq::load(tmp.path().join("z.eten")).unwrap();
    assert_eq!(z, a);
}

#[test]
fn eval_angular_identical_maps_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.hdr");
    // one dominant texel
    let mut img = ImageRgb::filled(32, 16, Rgb::splat(0.01));
    img.set_pixel(20, 7, Rgb::splat(100.0));
    write_hdr(&EnvironmentMap::new(img).unwrap(), &input).unwrap();
    let out = run(
        &[
            "eval-angular",
            "--pred",
            input.to_str().unwrap(),
            "--gt",
            input.to_str().unwrap(),
            "--k",
            "1",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("angular.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rep["report"]["mean"], 0.0);
    // config echoed into the manifest
    assert_eq!(rep["config"]["nms_radius_deg"], 10.0);
    assert_eq!(rep["config"]["m"], 60000.0);
}
