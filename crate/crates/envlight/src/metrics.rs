//! Evaluation metrics: PSNR / SSIM image fidelity, material consistency
//! over feature vectors, dominant-light peak extraction with angular error,
//! and per-frame / per-video aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{EnvironmentMap, ImageRgb};
use crate::spherical::pixel_direction;
use crate::tensor::Tensor;

/// PSNR sentinel when the two images are identical.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Mean squared error over all pixels and channels.
pub fn mse(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mut acc = 0.0f64;
    for (p, q) in a.pixels().iter().zip(b.pixels()) {
        for c in 0..3 {
            let d = p.channel(c) as f64 - q.channel(c) as f64;
            acc += d * d;
        }
    }
    Ok(acc / (a.pixels().len() * 3) as f64)
}

/// `10 * log10(peak^2 / MSE)` in dB, capped at 99 dB when MSE is zero.
pub fn psnr(a: &ImageRgb, b: &ImageRgb, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / m).log10()).min(PSNR_CAP_DB))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0f64; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5, K1=0.01,
/// K2=0.03) over the valid region, computed per channel and averaged.
/// Inputs must share dims of at least 11x11 with values in [0, 1].
pub fn ssim(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} smaller than the {0}x{0} ssim window",
            w, h
        )));
    }
    let kernel = gaussian_kernel();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;

    let mut total = 0.0f64;
    for ch in 0..3usize {
        let xa: Vec<f64> = a.pixels().iter().map(|p| p.channel(ch) as f64).collect();
        let xb: Vec<f64> = b.pixels().iter().map(|p| p.channel(ch) as f64).collect();
        // separable Gaussian filtering of the five moment fields
        let mu_a = filter(&xa, w, h, &kernel);
        let mu_b = filter(&xb, w, h, &kernel);
        let aa = filter(&mul(&xa, &xa), w, h, &kernel);
        let bb = filter(&mul(&xb, &xb), w, h, &kernel);
        let ab = filter(&mul(&xa, &xb), w, h, &kernel);

        let half = SSIM_WINDOW / 2;
        let mut acc = 0.0f64;
        let mut count = 0usize;
        for y in half..h - half {
            for x in half..w - half {
                let i = y * w + x;
                let (ma, mb) = (mu_a[i], mu_b[i]);
                let va = aa[i] - ma * ma;
                let vb = bb[i] - mb * mb;
                let cov = ab[i] - ma * mb;
                let v = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                acc += v;
                count += 1;
            }
        }
        total += acc / count as f64;
    }
    Ok(total / 3.0)
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Separable convolution; edge columns/rows outside the valid interior are
/// left zero and never consumed.
fn filter(src: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let half = SSIM_WINDOW / 2;
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in half..w - half {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * src[y * w + x + k - half];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in half..h - half {
        for x in half..w - half {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * tmp[(y + k - half) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Material consistency over paired feature vectors:
/// `MC = 1 - (1/2N) * sum(1 - cos(f_src_i, f_gen_i))`, cosine on the raw
/// (un-normalized) vectors. 1 for identical, 0.5 for orthogonal, 0 for
/// antipodal features.
pub fn material_consistency(feats_src: &[Vec<f32>], feats_gen: &[Vec<f32>]) -> Result<f64> {
    if feats_src.len() != feats_gen.len() {
        return Err(Error::DimMismatch(format!(
            "{} source vs {} generated feature vectors",
            feats_src.len(),
            feats_gen.len()
        )));
    }
    if feats_src.is_empty() {
        return Err(Error::InvalidArgument("no feature vectors".into()));
    }
    let n = feats_src.len() as f64;
    let mut sum = 0.0f64;
    for (i, (a, b)) in feats_src.iter().zip(feats_gen).enumerate() {
        if a.len() != b.len() {
            return Err(Error::DimMismatch(format!(
                "feature {} has lengths {} vs {}",
                i,
                a.len(),
                b.len()
            )));
        }
        let mut dot = 0.0f64;
        let mut na = 0.0f64;
        let mut nb = 0.0f64;
        for (&x, &y) in a.iter().zip(b) {
            dot += x as f64 * y as f64;
            na += (x as f64) * (x as f64);
            nb += (y as f64) * (y as f64);
        }
        if na == 0.0 || nb == 0.0 {
            return Err(Error::InvalidArgument(format!("feature {} is a zero vector", i)));
        }
        let cos = dot / (na.sqrt() * nb.sqrt());
        sum += 1.0 - cos;
    }
    Ok(1.0 - sum / (2.0 * n))
}

/// Rows of a rank-2 `[N, D]` tensor as feature vectors.
pub fn features_from_tensor(t: &Tensor) -> Result<Vec<Vec<f32>>> {
    if t.dims.len() != 2 {
        return Err(Error::DimMismatch(format!(
            "features need a rank-2 [N, D] tensor, got dims {:?}",
            t.dims
        )));
    }
    let d = t.dims[1] as usize;
    if d == 0 {
        return Err(Error::InvalidArgument("feature dimension is zero".into()));
    }
    Ok(t.data.chunks_exact(d).map(|c| c.to_vec()).collect())
}

/// One extracted light peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Unit direction in the panorama convention.
    pub direction: [f64; 3],
    /// Rec. 709 luminance of the source pixel.
    pub luminance: f64,
}

/// Peaks sorted by luminance descending, pairwise at least the NMS radius
/// apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub nms_radius_deg: f64,
}

/// Greedy dominant-light extraction: repeatedly take the brightest
/// unsuppressed pixel (ties broken by lowest pixel index) and suppress all
/// pixels within `nms_radius_deg` of it, up to `k` peaks.
pub fn extract_peaks(env: &EnvironmentMap, k: usize, nms_radius_deg: f64) -> Result<PeakSet> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if nms_radius_deg.is_nan() || nms_radius_deg <= 0.0 {
        return Err(Error::InvalidArgument("nms radius must be > 0".into()));
    }
    let (w, h) = (env.width(), env.height());
    let lum: Vec<f64> = env
        .image()
        .pixels()
        .iter()
        .map(|p| p.luminance() as f64)
        .collect();
    let dirs: Vec<[f64; 3]> = (0..w * h)
        .map(|i| pixel_direction(w, h, i % w, i / w))
        .collect();
    let cos_radius = nms_radius_deg.to_radians().cos();

    let mut suppressed = vec![false; w * h];
    let mut peaks = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..w * h {
            if suppressed[i] {
                continue;
            }
            match best {
                Some(b) if lum[i] <= lum[b] => {}
                _ => best = Some(i),
            }
        }
        let Some(b) = best else { break };
        peaks.push(Peak {
            direction: dirs[b],
            luminance: lum[b],
        });
        let pd = dirs[b];
        for (i, s) in suppressed.iter_mut().enumerate() {
            if *s {
                continue;
            }
            let d = dirs[i];
            let dot = pd[0] * d[0] + pd[1] * d[1] + pd[2] * d[2];
            if dot >= cos_radius {
                *s = true;
            }
        }
    }
    Ok(PeakSet {
        peaks,
        nms_radius_deg,
    })
}

/// Angle between two unit directions, degrees.
pub fn angle_between_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    dot.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Mean angular error over greedily matched peaks: ground-truth peaks in
/// luminance order each claim the nearest unmatched predicted peak; up to
/// `k` pairs are matched.
pub fn angular_error(pred: &PeakSet, gt: &PeakSet, k: usize) -> Result<f64> {
    if pred.peaks.is_empty() || gt.peaks.is_empty() {
        return Err(Error::InvalidArgument("empty peak set".into()));
    }
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let pairs = k.min(gt.peaks.len()).min(pred.peaks.len());
    let mut used = vec![false; pred.peaks.len()];
    let mut sum = 0.0f64;
    for g in gt.peaks.iter().take(pairs) {
        let mut best = None;
        let mut best_angle = f64::INFINITY;
        for (i, p) in pred.peaks.iter().enumerate() {
            if used[i] {
                continue;
            }
            let ang = angle_between_deg(p.direction, g.direction);
            if ang < best_angle {
                best_angle = ang;
                best = Some(i);
            }
        }
        let i = best.expect("pairs <= pred count leaves an unused peak");
        used[i] = true;
        sum += best_angle;
    }
    Ok(sum / pairs as f64)
}

/// Per-frame metric values with their aggregate statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metric: String,
    /// How the aggregate was formed: "per-frame" or "per-video".
    pub aggregation: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub per_frame: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl MetricsReport {
    /// CSV rows `frame,value` followed by the aggregate rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,value\n");
        for (i, v) in self.per_frame.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, v));
        }
        out.push_str(&format!("mean,{}\n", self.mean));
        out.push_str(&format!("median,{}\n", self.median));
        out.push_str(&format!("std,{}\n", self.std));
        out
    }
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Lower-middle median: element `(n-1)/2` of the sorted list.
fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    sorted[(sorted.len() - 1) / 2]
}

/// Population standard deviation.
fn std_of(values: &[f64]) -> f64 {
    let m = mean_of(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty value list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant("non-finite metric value".into()));
    }
    Ok(())
}

/// Aggregates a flat per-frame value list: mean, lower-middle median,
/// population std.
pub fn aggregate(metric: &str, values: &[f64]) -> Result<MetricsReport> {
    check_values(values)?;
    Ok(MetricsReport {
        metric: metric.to_string(),
        aggregation: "per-frame".to_string(),
        params: serde_json::Map::new(),
        per_frame: values.to_vec(),
        mean: mean_of(values),
        median: median_of(values),
        std: std_of(values),
    })
}

/// Aggregates grouped per-video values: mean and median are over the pooled
/// values, while the reported std is the average of per-video population
/// stds.
pub fn aggregate_per_video(metric: &str, videos: &[Vec<f64>]) -> Result<MetricsReport> {
    if videos.is_empty() {
        return Err(Error::InvalidArgument("empty video list".into()));
    }
    let mut pooled = Vec::new();
    let mut stds = Vec::with_capacity(videos.len());
    for v in videos {
        check_values(v)?;
        stds.push(std_of(v));
        pooled.extend_from_slice(v);
    }
    Ok(MetricsReport {
        metric: metric.to_string(),
        aggregation: "per-video".to_string(),
        params: serde_json::Map::new(),
        per_frame: pooled.clone(),
        mean: mean_of(&pooled),
        median: median_of(&pooled),
        std: mean_of(&stds),
    })
}
