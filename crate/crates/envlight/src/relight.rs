//! Conditioning and training-strategy tensor procedures: G-buffer latent
//! grouping, condition-sequence assembly, reference sampling and zeroing,
//! latent interpolation, and illumination-consistency pair construction.
//!
//! All functions are pure over caller-supplied latents; no encoder, decoder
//! or denoiser lives here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::resize_bilinear;
use crate::rng::{keyed_rng, DOMAIN_REFERENCE_SAMPLE, DOMAIN_ZERO_REFERENCE};
use crate::tensor::LatentSeq;
use crate::LightBundle;

/// The five G-buffer latents (base color, normal, depth, roughness,
/// metallic), all with identical dims.
#[derive(Debug, Clone)]
pub struct GBufferLatents {
    pub base_color: LatentSeq,
    pub normal: LatentSeq,
    pub depth: LatentSeq,
    pub roughness: LatentSeq,
    pub metallic: LatentSeq,
}

impl GBufferLatents {
    pub fn new(
        base_color: LatentSeq,
        normal: LatentSeq,
        depth: LatentSeq,
        roughness: LatentSeq,
        metallic: LatentSeq,
    ) -> Result<Self> {
        let dims = base_color.dims();
        for (name, t) in [
            ("normal", &normal),
            ("depth", &depth),
            ("roughness", &roughness),
            ("metallic", &metallic),
        ] {
            if t.dims() != dims {
                return Err(Error::DimMismatch(format!(
                    "{} latent dims {:?} != base color dims {:?}",
                    name,
                    t.dims(),
                    dims
                )));
            }
        }
        Ok(GBufferLatents {
            base_color,
            normal,
            depth,
            roughness,
            metallic,
        })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.base_color.dims()
    }
}

/// Partial grouping fusion: returns `(base_color + depth + metallic,
/// normal + roughness)`.
pub fn group_fuse(g: &GBufferLatents) -> (LatentSeq, LatentSeq) {
    let adm = g
        .base_color
        .add(&g.depth)
        .and_then(|t| t.add(&g.metallic))
        .expect("validated dims");
    let nr = g.normal.add(&g.roughness).expect("validated dims");
    (adm, nr)
}

/// Labels for the five segments of a condition sequence, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentLabel {
    /// One reference-image latent frame.
    Reference,
    /// N target (noised relit video) frames.
    Target,
    /// N target environment-video (log) frames.
    EnvLog,
    /// N fused base-color+depth+metallic frames.
    FusedAdm,
    /// N fused normal+roughness frames with the lighting feature added.
    FusedNrLight,
}

/// One labeled span of frames inside a condition sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub label: SegmentLabel,
    pub start_frame: usize,
    pub n_frames: usize,
}

/// The frame-concatenated conditioning input: segments
/// `[reference | target | env-log | adm | nr + light]`, `1 + 4N` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSequence {
    layout: Vec<SegmentSpan>,
    data: LatentSeq,
}

impl ConditionSequence {
    pub fn layout(&self) -> &[SegmentSpan] {
        &self.layout
    }

    pub fn data(&self) -> &LatentSeq {
        &self.data
    }

    pub fn n_frames(&self) -> usize {
        self.data.n_frames()
    }

    /// JSON manifest describing the layout, referencing the tensor file the
    /// sequence data is stored in.
    pub fn manifest_json(&self, tensor_file: &str) -> String {
        let payload = serde_json::json!({
            "tensor_file": tensor_file,
            "total_frames": self.n_frames(),
            "frame_dims": self.data.frame_dims(),
            "layout": self.layout,
        });
        serde_json::to_string_pretty(&payload).expect("layout serializes")
    }

    /// Frames of one segment as a fresh latent sequence.
    pub fn segment(&self, label: SegmentLabel) -> LatentSeq {
        let span = self
            .layout
            .iter()
            .find(|s| s.label == label)
            .expect("all five labels are always present");
        let [_, h, w, c] = self.data.dims();
        let frame_len = self.data.frame_len();
        let start = span.start_frame * frame_len;
        let end = start + span.n_frames * frame_len;
        LatentSeq::new([span.n_frames, h, w, c], self.data.data()[start..end].to_vec())
            .expect("span is in range")
    }
}

/// Assembles the conditioning sequence by temporal concatenation:
/// `[z_ref | z_target.. | z_env_log.. | z_adm.. | (z_nr + light).. ]`.
/// `z_ref` must be a single frame; the other five must share `N` frames and
/// per-frame dims.
pub fn assemble_sequence(
    z_ref: &LatentSeq,
    z_target: &LatentSeq,
    z_env_log: &LatentSeq,
    z_adm: &LatentSeq,
    z_nr: &LatentSeq,
    light: &LatentSeq,
) -> Result<ConditionSequence> {
    if z_ref.n_frames() != 1 {
        return Err(Error::DimMismatch(format!(
            "reference latent must have 1 frame, got {}",
            z_ref.n_frames()
        )));
    }
    let frame_dims = z_ref.frame_dims();
    let n = z_target.n_frames();
    for (name, t) in [
        ("target", z_target),
        ("env-log", z_env_log),
        ("adm", z_adm),
        ("nr", z_nr),
        ("light", light),
    ] {
        if t.frame_dims() != frame_dims {
            return Err(Error::DimMismatch(format!(
                "{} per-frame dims {:?} != reference {:?}",
                name,
                t.frame_dims(),
                frame_dims
            )));
        }
        if t.n_frames() != n {
            return Err(Error::DimMismatch(format!(
                "{} has {} frames, expected {}",
                name,
                t.n_frames(),
                n
            )));
        }
    }

    let nr_light = z_nr.add(light)?;
    let total = 1 + 4 * n;
    let mut data = Vec::with_capacity(total * z_ref.frame_len());
    data.extend_from_slice(z_ref.data());
    data.extend_from_slice(z_target.data());
    data.extend_from_slice(z_env_log.data());
    data.extend_from_slice(z_adm.data());
    data.extend_from_slice(nr_light.data());

    let [h, w, c] = frame_dims;
    let layout = vec![
        SegmentSpan {
            label: SegmentLabel::Reference,
            start_frame: 0,
            n_frames: 1,
        },
        SegmentSpan {
            label: SegmentLabel::Target,
            start_frame: 1,
            n_frames: n,
        },
        SegmentSpan {
            label: SegmentLabel::EnvLog,
            start_frame: 1 + n,
            n_frames: n,
        },
        SegmentSpan {
            label: SegmentLabel::FusedAdm,
            start_frame: 1 + 2 * n,
            n_frames: n,
        },
        SegmentSpan {
            label: SegmentLabel::FusedNrLight,
            start_frame: 1 + 3 * n,
            n_frames: n,
        },
    ];
    Ok(ConditionSequence {
        layout,
        data: LatentSeq::new([total, h, w, c], data)?,
    })
}

/// Splits a condition sequence back into its five segments, in layout order.
pub fn disassemble_sequence(
    seq: &ConditionSequence,
) -> (LatentSeq, LatentSeq, LatentSeq, LatentSeq, LatentSeq) {
    (
        seq.segment(SegmentLabel::Reference),
        seq.segment(SegmentLabel::Target),
        seq.segment(SegmentLabel::EnvLog),
        seq.segment(SegmentLabel::FusedAdm),
        seq.segment(SegmentLabel::FusedNrLight),
    )
}

/// Uniform random frame index in `[0, n_frames)`, deterministic in
/// `(seed, denoise_step)` and varying across steps.
pub fn sample_reference_index(n_frames: usize, denoise_step: u64, seed: u64) -> Result<usize> {
    if n_frames < 1 {
        return Err(Error::InvalidArgument("n_frames must be >= 1".into()));
    }
    let mut rng = keyed_rng(seed, DOMAIN_REFERENCE_SAMPLE, denoise_step);
    Ok(rng.random_range(0..n_frames))
}

/// Returns an all-zero copy with probability `p`, the input otherwise;
/// deterministic per seed.
pub fn zero_reference(z_ref: &LatentSeq, p: f64, seed: u64) -> Result<LatentSeq> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability must be in [0,1], got {}",
            p
        )));
    }
    let mut rng = keyed_rng(seed, DOMAIN_ZERO_REFERENCE, 0);
    let draw: f64 = rng.random();
    if draw < p {
        Ok(LatentSeq::zeros(z_ref.dims()))
    } else {
        Ok(z_ref.clone())
    }
}

/// Latent interpolation between a result generated with the reference image
/// and one generated without it:
///
/// `z_new = z_with / (1 + w) + z_without * w / (1 + w)`
///
/// `w = 0` returns `z_with` exactly; `w -> inf` approaches `z_without`.
pub fn interpolate_latents(
    z_with: &LatentSeq,
    z_without: &LatentSeq,
    w: f64,
) -> Result<LatentSeq> {
    if w.is_nan() || w < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "interpolation weight must be >= 0, got {}",
            w
        )));
    }
    if !z_with.same_dims(z_without) {
        return Err(Error::DimMismatch(format!(
            "latent dims {:?} vs {:?}",
            z_with.dims(),
            z_without.dims()
        )));
    }
    if w == 0.0 {
        return Ok(z_with.clone());
    }
    let t = w / (1.0 + w);
    // a + t*(b - a) in f64 keeps the result inside [min(a,b), max(a,b)]
    z_with.zip_with(z_without, |a, b| {
        let a = a as f64;
        let b = b as f64;
        (a + t * (b - a)) as f32
    })
}

/// A self-supervised illumination-consistency training pair: the forward
/// clip, its reversed twin conditioned on the last predicted environment
/// frame, and the frame correspondence `i <-> n + 1 - i` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicPair<T> {
    /// Frame numbers 1..=n.
    pub forward_frames: Vec<usize>,
    /// Frame numbers n..=1.
    pub reversed_frames: Vec<usize>,
    /// The conditioning environment frame (log form) at frame n.
    pub condition: T,
}

impl<T> SicPair<T> {
    pub fn n_frames(&self) -> usize {
        self.forward_frames.len()
    }

    /// The partner of 1-based frame `i`; an involution over 1..=n.
    pub fn correspondence(&self, i: usize) -> usize {
        self.n_frames() + 1 - i
    }
}

/// Builds the SIC pair for an environment video given in log form.
pub fn build_sic_pair<T: Clone>(n_frames: usize, env_video: &[T]) -> Result<SicPair<T>> {
    if n_frames == 0 || env_video.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    if env_video.len() != n_frames {
        return Err(Error::DimMismatch(format!(
            "env video has {} frames, expected {}",
            env_video.len(),
            n_frames
        )));
    }
    Ok(SicPair {
        forward_frames: (1..=n_frames).collect(),
        reversed_frames: (1..=n_frames).rev().collect(),
        condition: env_video[n_frames - 1].clone(),
    })
}

/// Non-learned stand-in for the fused lighting feature: for each output
/// channel `c`, the mean over the three encodings of their channel
/// `c mod 3`, bilinearly resized to the latent resolution. One bundle per
/// frame; `dims` is the `[N, H, W, C]` of the latent it will be added to.
pub fn make_ce_standin(bundles: &[LightBundle], dims: [usize; 4]) -> Result<LatentSeq> {
    let [n, h, w, c] = dims;
    if bundles.len() != n {
        return Err(Error::DimMismatch(format!(
            "{} bundles for {} frames",
            bundles.len(),
            n
        )));
    }
    let mut data = Vec::with_capacity(n * h * w * c);
    for bundle in bundles {
        let ldr = resize_bilinear(bundle.ldr.image(), w, h)?;
        let log = resize_bilinear(&bundle.log, w, h)?;
        let dir = resize_bilinear(bundle.dir.image(), w, h)?;
        for y in 0..h {
            for x in 0..w {
                let a = ldr.pixel(x, y);
                let b = log.pixel(x, y);
                let d = dir.pixel(x, y);
                for ch in 0..c {
                    let s = ch % 3;
                    data.push((a.channel(s) + b.channel(s) + d.channel(s)) / 3.0);
                }
            }
        }
    }
    LatentSeq::new(dims, data)
}
