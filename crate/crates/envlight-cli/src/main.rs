//! `envlight-relit`: one binary exposing the toolkit as subcommands.
//!
//! Every subcommand is deterministic given its flags and `--seed`, writes a
//! manifest echoing the full run configuration, and reports failures as one
//! JSON object on stderr. Exit codes: 0 ok, 2 usage, 3 parse/io,
//! 4 invariant violation. `ENVLIGHT_THREADS` caps internal parallelism.

mod selfcheck;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use envlight::{
    aggregate, angular_error, build_sic_pair, decode_log, encode_bundle,
    extract_peaks, features_from_tensor, gen_trajectory, interpolate_latents, latent_to_log_image,
    make_environment_video, material_consistency, plan_clips, psnr, read_hdr, read_tensor,
    render_sphere, ssim, tonemap_reinhard_image, warp_env, write_hdr, write_hdr_image,
    write_png_gray, write_png_ldr, CameraTrajectory, EnvironmentMap, Error, ImageRgb, LatentSeq,
    LdrImage, MetricsReport, MotionPattern, Rgb, Rotation, SphereMode, SphereRenderConfig,
};

#[derive(Parser)]
#[command(
    name = "envlight-relit",
    version,
    about = "Environment-map encodings, warping, sphere oracles, latent procedures, \
             streaming plans and relighting metrics"
)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Seed for every randomized operation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Normalization constant of the log-intensity encoding.
    #[arg(long, global = true, default_value_t = 60000.0)]
    m: f64,
    /// Streaming clip length (must be 8n+1).
    #[arg(long, global = true, default_value_t = 57)]
    clip_len: usize,
    /// Streaming clip overlap in frames.
    #[arg(long, global = true, default_value_t = 1)]
    overlap: usize,
    /// Peak suppression radius in degrees.
    #[arg(long, global = true, default_value_t = 10.0)]
    nms_radius_deg: f64,
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
}

/// Echo of the run configuration, embedded in every manifest.
#[derive(Serialize, Clone)]
struct RunConfig {
    seed: u64,
    m: f64,
    clip_len: usize,
    overlap: usize,
    nms_radius_deg: f64,
    out_dir: String,
}

impl From<&ConfigArgs> for RunConfig {
    fn from(a: &ConfigArgs) -> Self {
        RunConfig {
            seed: a.seed,
            m: a.m,
            clip_len: a.clip_len,
            overlap: a.overlap,
            nms_radius_deg: a.nms_radius_deg,
            out_dir: a.out_dir.display().to_string(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the LDR / log / directional bundle of an environment map.
    Encode {
        input: PathBuf,
        /// Output stem; defaults to the input file stem.
        #[arg(long)]
        stem: Option<String>,
    },
    /// Inverse-transform a log-intensity tensor back to a Radiance HDR map.
    DecodeLog {
        input: PathBuf,
        #[arg(long, default_value = "decoded.hdr")]
        output: String,
    },
    /// Warp a map by fixed angles, or into a whole environment video.
    Warp {
        input: PathBuf,
        /// Yaw in degrees (about +Y).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        yaw: f64,
        /// Pitch in degrees (about +X).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        pitch: f64,
        /// Roll in degrees (about +Z).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        roll: f64,
        /// Trajectory JSON; when given, writes one frame per trajectory step.
        #[arg(long, conflicts_with_all = ["yaw", "pitch", "roll"])]
        traj: Option<PathBuf>,
        /// Output file (single warp) or filename prefix (trajectory mode).
        #[arg(long, default_value = "warped")]
        output: String,
    },
    /// Generate a random smooth camera/light trajectory.
    Trajgen {
        #[arg(long, value_enum)]
        pattern: PatternArg,
        #[arg(long)]
        frames: usize,
        /// Per-frame rotation bound in degrees.
        #[arg(long, default_value_t = 2.0)]
        max_speed: f64,
        #[arg(long, default_value = "traj.json")]
        output: String,
    },
    /// Render a mirror or diffuse sphere under a map.
    RenderSphere {
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Diffuse albedo as "r,g,b" in [0,1].
        #[arg(long, default_value = "1,1,1")]
        albedo: String,
        /// Camera yaw in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        yaw: f64,
        /// Camera pitch in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        pitch: f64,
        /// Camera roll in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        roll: f64,
        #[arg(long, default_value = "sphere")]
        stem: String,
    },
    /// Interpolate two latent tensors: a/(1+w) + b*w/(1+w).
    Interp {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        w: f64,
        #[arg(long, default_value = "interp.eten")]
        output: String,
    },
    /// Build the reverse-order illumination-consistency pair manifest.
    SicPairs {
        #[arg(long)]
        frames: usize,
        /// Directory of per-frame log-map tensors (sorted by name).
        #[arg(long)]
        env_video: PathBuf,
        #[arg(long, default_value = "sic_pair.json")]
        output: String,
    },
    /// Plan streaming clips for a long video.
    StreamPlan {
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value = "plan.json")]
        output: String,
    },
    /// PSNR between two HDR files or two directories of frames.
    EvalPsnr {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
        /// Reinhard-tonemap inputs before comparing.
        #[arg(long)]
        tonemap: bool,
        #[arg(long, default_value = "psnr")]
        report: String,
    },
    /// SSIM between two HDR files or two directories of frames.
    EvalSsim {
        a: PathBuf,
        b: PathBuf,
        /// Reinhard-tonemap inputs before comparing (required for HDR data).
        #[arg(long)]
        tonemap: bool,
        #[arg(long, default_value = "ssim")]
        report: String,
    },
    /// Material consistency between paired [N, D] feature tensors.
    EvalMc {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        gen: PathBuf,
        #[arg(long, default_value = "mc")]
        report: String,
    },
    /// Peak-light angular error between predicted and ground-truth maps.
    EvalAngular {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Number of peaks to match.
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value = "angular")]
        report: String,
    },
    /// Run the full invariant suite and print one pass/fail line per check.
    Selfcheck,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum PatternArg {
    #[value(name = "camera-rot-fixed-light")]
    Camera,
    #[value(name = "light-rot-fixed-camera")]
    Light,
    Both,
}

impl From<PatternArg> for MotionPattern {
    fn from(p: PatternArg) -> Self {
        match p {
            PatternArg::Camera => MotionPattern::CameraRotFixedLight,
            PatternArg::Light => MotionPattern::LightRotFixedCamera,
            PatternArg::Both => MotionPattern::Both,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ModeArg {
    Mirror,
    Diffuse,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            emit_json_error("usage", &e.render().to_string());
            return ExitCode::from(2);
        }
    };

    if let Ok(threads) = std::env::var("ENVLIGHT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            emit_json_error(error_kind(&e), &e.to_string());
            ExitCode::from(error_exit_code(&e))
        }
    }
}

fn emit_json_error(kind: &str, message: &str) {
    let obj = serde_json::json!({ "error": message, "kind": kind });
    eprintln!("{}", obj);
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io(_) => "io",
        Error::HdrParse { .. } => "hdr-parse",
        Error::TensorFormat(_) => "tensor-format",
        Error::PngEncode(_) => "png-encode",
        Error::DimMismatch(_) => "dim-mismatch",
        Error::InvalidArgument(_) => "invalid-argument",
        Error::Invariant(_) => "invariant",
    }
}

fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::HdrParse { .. } | Error::TensorFormat(_) | Error::PngEncode(_) => 3,
        Error::DimMismatch(_) | Error::InvalidArgument(_) | Error::Invariant(_) => 4,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let config = RunConfig::from(&cli.config);
    std::fs::create_dir_all(&cli.config.out_dir)?;
    let out = |name: &str| cli.config.out_dir.join(name);

    match cli.command {
        Command::Encode { input, stem } => {
            let env = read_hdr(&input)?;
            let bundle = encode_bundle(&env, cli.config.m)?;
            let overflow = envlight::log_overflow_count(&bundle.log);
            if overflow > 0 {
                eprintln!(
                    "warning: {} log values above 1 (radiance above M={})",
                    overflow, cli.config.m
                );
            }
            let stem = stem.unwrap_or_else(|| file_stem(&input));
            bundle.save(out(&stem))?;
            write_manifest(
                &config,
                "encode",
                &out("encode.manifest.json"),
                serde_json::json!({
                    "input": input.display().to_string(),
                    "outputs": [
                        format!("{}.ldr.png", stem),
                        format!("{}.log.eten", stem),
                        format!("{}.dir.png", stem),
                    ],
                    "log_overflow_count": overflow,
                    "width": env.width(),
                    "height": env.height(),
                }),
            )
        }

        Command::DecodeLog { input, output } => {
            let latent = LatentSeq::load(&input)?;
            let log = latent_to_log_image(&latent)?;
            let env = decode_log(&log, cli.config.m)?;
            write_hdr(&env, out(&output))?;
            write_manifest(
                &config,
                "decode-log",
                &out("decode-log.manifest.json"),
                serde_json::json!({
                    "input": input.display().to_string(),
                    "output": output,
                    "width": env.width(),
                    "height": env.height(),
                }),
            )
        }

        Command::Warp {
            input,
            yaw,
            pitch,
            roll,
            traj,
            output,
        } => {
            let env = read_hdr(&input)?;
            match traj {
                None => {
                    let rel = euler_rotation(yaw, pitch, roll);
                    let warped = warp_env(&env, &rel);
                    let name = ensure_ext(&output, "hdr");
                    write_hdr(&warped, out(&name))?;
                    write_manifest(
                        &config,
                        "warp",
                        &out("warp.manifest.json"),
                        serde_json::json!({
                            "input": input.display().to_string(),
                            "output": name,
                            "yaw_deg": yaw,
                            "pitch_deg": pitch,
                            "roll_deg": roll,
                        }),
                    )
                }
                Some(traj_path) => {
                    let traj = CameraTrajectory::from_json(&std::fs::read_to_string(&traj_path)?)?;
                    let frames = make_environment_video(&env, &traj)?;
                    let mut names = Vec::with_capacity(frames.len());
                    for (i, frame) in frames.iter().enumerate() {
                        let name = format!("{}_{:04}.hdr", output, i);
                        write_hdr(frame, out(&name))?;
                        names.push(name);
                    }
                    write_manifest(
                        &config,
                        "warp",
                        &out("warp.manifest.json"),
                        serde_json::json!({
                            "input": input.display().to_string(),
                            "trajectory": traj_path.display().to_string(),
                            "n_frames": frames.len(),
                            "frames": names,
                        }),
                    )
                }
            }
        }

        Command::Trajgen {
            pattern,
            frames,
            max_speed,
            output,
        } => {
            let traj = gen_trajectory(pattern.into(), frames, cli.config.seed, max_speed)?;
            std::fs::write(out(&output), traj.to_json())?;
            write_manifest(
                &config,
                "trajgen",
                &out("trajgen.manifest.json"),
                serde_json::json!({
                    "pattern": serde_json::to_value(traj.pattern()).expect("pattern"),
                    "n_frames": frames,
                    "max_speed_deg": max_speed,
                    "output": output,
                }),
            )
        }

        Command::RenderSphere {
            input,
            mode,
            size,
            albedo,
            yaw,
            pitch,
            roll,
            stem,
        } => {
            let env = read_hdr(&input)?;
            let cfg = SphereRenderConfig {
                image_size: size,
                mode: match mode {
                    ModeArg::Mirror => SphereMode::Mirror,
                    ModeArg::Diffuse => SphereMode::Diffuse,
                },
                albedo: parse_albedo(&albedo)?,
                camera: euler_rotation(yaw, pitch, roll),
                ..Default::default()
            };
            let render = render_sphere(&env, &cfg)?;
            write_hdr_image(&render.image, out(&format!("{}.hdr", stem)))?;
            write_png_ldr(
                &tonemap_reinhard_image(&render.image),
                out(&format!("{}.png", stem)),
            )?;
            write_png_gray(
                size,
                size,
                &render.mask_bytes(),
                out(&format!("{}.mask.png", stem)),
            )?;
            write_manifest(
                &config,
                "render-sphere",
                &out("render-sphere.manifest.json"),
                serde_json::json!({
                    "input": input.display().to_string(),
                    "size": size,
                    "mode": match mode { ModeArg::Mirror => "mirror", ModeArg::Diffuse => "diffuse" },
                    "outputs": [
                        format!("{}.hdr", stem),
                        format!("{}.png", stem),
                        format!("{}.mask.png", stem),
                    ],
                }),
            )
        }

        Command::Interp { a, b, w, output } => {
            let za = LatentSeq::load(&a)?;
            let zb = LatentSeq::load(&b)?;
            let z = interpolate_latents(&za, &zb, w)?;
            z.save(out(&output))?;
            write_manifest(
                &config,
                "interp",
                &out("interp.manifest.json"),
                serde_json::json!({
                    "a": a.display().to_string(),
                    "b": b.display().to_string(),
                    "w": w,
                    "output": output,
                    "dims": z.dims(),
                }),
            )
        }

        Command::SicPairs {
            frames,
            env_video,
            output,
        } => {
            let files = sorted_files(&env_video, "eten")?;
            if files.len() != frames {
                return Err(Error::DimMismatch(format!(
                    "--frames {} but {} .eten files in {}",
                    frames,
                    files.len(),
                    env_video.display()
                )));
            }
            let mut dims = None;
            for f in &files {
                let t = LatentSeq::load(f)?;
                if let Some(d) = dims {
                    if t.dims() != d {
                        return Err(Error::DimMismatch(format!(
                            "frame {} dims {:?} != first frame {:?}",
                            f.display(),
                            t.dims(),
                            d
                        )));
                    }
                } else {
                    dims = Some(t.dims());
                }
            }
            let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
            let pair = build_sic_pair(frames, &names)?;
            let payload = serde_json::json!({
                "n_frames": frames,
                "forward_frames": pair.forward_frames,
                "reversed_frames": pair.reversed_frames,
                "condition": pair.condition,
                "correspondence": "frame i pairs with frame n+1-i (1-based)",
                "frame_files": names,
            });
            std::fs::write(
                out(&output),
                serde_json::to_string_pretty(&payload).expect("json"),
            )?;
            write_manifest(
                &config,
                "sic-pairs",
                &out("sic-pairs.manifest.json"),
                serde_json::json!({ "output": output, "n_frames": frames }),
            )
        }

        Command::StreamPlan { frames, output } => {
            let plan = plan_clips(frames, cli.config.clip_len, cli.config.overlap)?;
            println!("clip  start    end  length  condition");
            for (k, c) in plan.clips.iter().enumerate() {
                let cond = match c.condition {
                    envlight::ConditionSource::User => "user".to_string(),
                    envlight::ConditionSource::PrevClip { clip, frame } => {
                        format!("clip {} frame {}", clip, frame)
                    }
                };
                println!(
                    "{:>4}  {:>5}  {:>5}  {:>6}  {}",
                    k,
                    c.start,
                    c.end(),
                    c.length,
                    cond
                );
            }
            std::fs::write(
                out(&output),
                serde_json::to_string_pretty(&plan).expect("json"),
            )?;
            write_manifest(
                &config,
                "stream-plan",
                &out("stream-plan.manifest.json"),
                serde_json::json!({
                    "total_frames": frames,
                    "n_clips": plan.clips.len(),
                    "output": output,
                }),
            )
        }

        Command::EvalPsnr {
            a,
            b,
            peak,
            tonemap,
            report,
        } => {
            let pairs = load_image_pairs(&a, &b)?;
            let values: Vec<f64> = pairs
                .iter()
                .map(|(x, y)| {
                    let (x, y) = maybe_tonemap(x, y, tonemap);
                    psnr(&x, &y, peak)
                })
                .collect::<Result<_, _>>()?;
            let mut rep = aggregate("psnr", &values)?;
            rep.params
                .insert("peak".into(), serde_json::json!(peak));
            rep.params
                .insert("tonemap".into(), serde_json::json!(tonemap));
            write_report(&config, "eval-psnr", &rep, &cli.config.out_dir, &report)
        }

        Command::EvalSsim {
            a,
            b,
            tonemap,
            report,
        } => {
            let pairs = load_image_pairs(&a, &b)?;
            let values: Vec<f64> = pairs
                .iter()
                .map(|(x, y)| {
                    let (x, y) = maybe_tonemap(x, y, tonemap);
                    require_unit_range(&x)?;
                    require_unit_range(&y)?;
                    ssim(&x, &y)
                })
                .collect::<Result<_, _>>()?;
            let mut rep = aggregate("ssim", &values)?;
            rep.params
                .insert("tonemap".into(), serde_json::json!(tonemap));
            write_report(&config, "eval-ssim", &rep, &cli.config.out_dir, &report)
        }

        Command::EvalMc { src, gen, report } => {
            let fs = features_from_tensor(&read_tensor(&src)?)?;
            let fg = features_from_tensor(&read_tensor(&gen)?)?;
            let value = material_consistency(&fs, &fg)?;
            let mut rep = aggregate("material_consistency", &[value])?;
            rep.params
                .insert("n_features".into(), serde_json::json!(fs.len()));
            write_report(&config, "eval-mc", &rep, &cli.config.out_dir, &report)
        }

        Command::EvalAngular {
            pred,
            gt,
            k,
            report,
        } => {
            let pred_maps = load_env_list(&pred)?;
            let gt_maps = load_env_list(&gt)?;
            if pred_maps.len() != gt_maps.len() {
                return Err(Error::DimMismatch(format!(
                    "{} predicted maps vs {} ground-truth maps",
                    pred_maps.len(),
                    gt_maps.len()
                )));
            }
            let values: Vec<f64> = pred_maps
                .iter()
                .zip(&gt_maps)
                .map(|(p, g)| {
                    let pp = extract_peaks(p, k, cli.config.nms_radius_deg)?;
                    let gg = extract_peaks(g, k, cli.config.nms_radius_deg)?;
                    angular_error(&pp, &gg, k)
                })
                .collect::<Result<_, _>>()?;
            let mut rep = aggregate(&format!("angular_error_top{}", k), &values)?;
            rep.params.insert("k".into(), serde_json::json!(k));
            rep.params.insert(
                "nms_radius_deg".into(),
                serde_json::json!(cli.config.nms_radius_deg),
            );
            write_report(&config, "eval-angular", &rep, &cli.config.out_dir, &report)
        }

        Command::Selfcheck => {
            let results = selfcheck::run_all(cli.config.seed, cli.config.m);
            let all_passed = results.iter().all(|r| r.passed);
            for r in &results {
                println!(
                    "{} {} ({})",
                    if r.passed { "pass" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            write_manifest(
                &config,
                "selfcheck",
                &out("selfcheck.manifest.json"),
                serde_json::json!({
                    "checks": results,
                    "all_passed": all_passed,
                }),
            )?;
            if all_passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string())
}

fn ensure_ext(name: &str, ext: &str) -> String {
    if name.ends_with(&format!(".{}", ext)) {
        name.to_string()
    } else {
        format!("{}.{}", name, ext)
    }
}

/// Camera-to-world rotation from degrees: `yaw(+Y) * pitch(+X) * roll(+Z)`.
fn euler_rotation(yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Rotation {
    Rotation::yaw(yaw_deg.to_radians())
        .compose(&Rotation::pitch(pitch_deg.to_radians()))
        .compose(&Rotation::roll(roll_deg.to_radians()))
}

fn parse_albedo(s: &str) -> Result<Rgb, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "albedo must be 'r,g,b', got '{}'",
            s
        )));
    }
    let mut v = [0.0f32; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad albedo component '{}'", part)))?;
    }
    Ok(Rgb::new(v[0], v[1], v[2]))
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Error> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == ext).unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no .{} files in {}",
            ext,
            dir.display()
        )));
    }
    Ok(files)
}

/// Loads an image pair from two files or two directories of frames.
fn load_image_pairs(a: &Path, b: &Path) -> Result<Vec<(ImageRgb, ImageRgb)>, Error> {
    if a.is_dir() != b.is_dir() {
        return Err(Error::InvalidArgument(
            "both inputs must be files or both directories".into(),
        ));
    }
    if a.is_dir() {
        let fa = sorted_files(a, "hdr")?;
        let fb = sorted_files(b, "hdr")?;
        if fa.len() != fb.len() {
            return Err(Error::DimMismatch(format!(
                "{} frames vs {} frames",
                fa.len(),
                fb.len()
            )));
        }
        fa.iter()
            .zip(&fb)
            .map(|(x, y)| Ok((envlight::read_hdr_image(x)?, envlight::read_hdr_image(y)?)))
            .collect()
    } else {
        Ok(vec![(
            envlight::read_hdr_image(a)?,
            envlight::read_hdr_image(b)?,
        )])
    }
}

fn load_env_list(p: &Path) -> Result<Vec<EnvironmentMap>, Error> {
    if p.is_dir() {
        sorted_files(p, "hdr")?.iter().map(read_hdr).collect()
    } else {
        Ok(vec![read_hdr(p)?])
    }
}

fn maybe_tonemap(a: &ImageRgb, b: &ImageRgb, tonemap: bool) -> (ImageRgb, ImageRgb) {
    if tonemap {
        (
            tonemap_reinhard_image(a).into_image(),
            tonemap_reinhard_image(b).into_image(),
        )
    } else {
        (a.clone(), b.clone())
    }
}

fn require_unit_range(img: &ImageRgb) -> Result<(), Error> {
    LdrImage::new(img.clone()).map(|_| ()).map_err(|_| {
        Error::InvalidArgument(
            "ssim needs values in [0,1]; pass --tonemap for HDR inputs".into(),
        )
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    payload: serde_json::Value,
}

fn write_manifest(
    config: &RunConfig,
    command: &str,
    path: &Path,
    payload: serde_json::Value,
) -> Result<ExitCode, Error> {
    let manifest = Manifest {
        command,
        config,
        payload,
    };
    std::fs::write(
        path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn write_report(
    config: &RunConfig,
    command: &str,
    report: &MetricsReport,
    out_dir: &Path,
    stem: &str,
) -> Result<ExitCode, Error> {
    let json_path = out_dir.join(format!("{}.report.json", stem));
    let csv_path = out_dir.join(format!("{}.report.csv", stem));
    std::fs::write(&csv_path, report.to_csv())?;
    println!(
        "{}: mean {:.6} median {:.6} std {:.6} over {} frames",
        report.metric,
        report.mean,
        report.median,
        report.std,
        report.per_frame.len()
    );
    write_manifest(
        config,
        command,
        &json_path,
        serde_json::json!({
            "report": report,
            "csv": csv_path.file_name().map(|s| s.to_string_lossy().into_owned()),
        }),
    )
}
