//! Streaming long-video relighting plans: segment a long video into
//! overlapping clips whose lengths follow the `8n + 1` pattern, and chain
//! each clip's initial lighting from the previous clip's predicted
//! environment video.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CLIP_LEN: usize = 57;
pub const DEFAULT_OVERLAP: usize = 1;

/// Where a clip's initial environment map comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ConditionSource {
    /// The user-supplied map (first clip only).
    User,
    /// A frame of a previous clip's predicted environment video.
    /// `frame` is a global frame index inside that clip's range.
    PrevClip { clip: usize, frame: usize },
}

/// One clip: frames `[start, start + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub start: usize,
    pub length: usize,
    pub condition: ConditionSource,
}

impl Clip {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// A full streaming plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipPlan {
    pub total_frames: usize,
    pub clip_len: usize,
    pub overlap: usize,
    pub clips: Vec<Clip>,
}

/// True for lengths of the form `8n + 1`.
pub fn is_valid_clip_len(len: usize) -> bool {
    len >= 1 && (len - 1).is_multiple_of(8)
}

/// Smallest `8n + 1` value `>= len`.
pub fn next_clip_len(len: usize) -> usize {
    if len <= 1 {
        1
    } else {
        (len - 2) / 8 * 8 + 9
    }
}

/// Segments `total_frames` into clips of `clip_len` frames stepping by
/// `clip_len - overlap`. A short tail becomes a final clip of the smallest
/// `8n + 1` length covering the remainder, shifted backward (staying inside
/// the previous clip) so the plan ends exactly at `total_frames`.
///
/// Every non-first clip is conditioned on its own first frame, sourced from
/// the previous clip's environment video.
pub fn plan_clips(total_frames: usize, clip_len: usize, overlap: usize) -> Result<ClipPlan> {
    if total_frames < 1 {
        return Err(Error::InvalidArgument("total_frames must be >= 1".into()));
    }
    if !is_valid_clip_len(clip_len) {
        return Err(Error::InvalidArgument(format!(
            "clip_len must be of the form 8n+1, got {}",
            clip_len
        )));
    }
    if overlap == 0 || overlap >= clip_len {
        return Err(Error::InvalidArgument(format!(
            "overlap must satisfy 0 < overlap < clip_len, got {}",
            overlap
        )));
    }

    let mut clips = Vec::new();
    if total_frames <= clip_len {
        if !is_valid_clip_len(total_frames) {
            return Err(Error::InvalidArgument(format!(
                "a video of {} frames (shorter than one clip) must itself have 8n+1 frames",
                total_frames
            )));
        }
        clips.push(Clip {
            start: 0,
            length: total_frames,
            condition: ConditionSource::User,
        });
        return Ok(ClipPlan {
            total_frames,
            clip_len,
            overlap,
            clips,
        });
    }

    let step = clip_len - overlap;
    let mut k = 0usize;
    loop {
        let start = k * step;
        if start + clip_len <= total_frames {
            clips.push(Clip {
                start,
                length: clip_len,
                condition: condition_for(k, start),
            });
            if start + clip_len == total_frames {
                break;
            }
            k += 1;
            continue;
        }
        // tail: the nominal window would overrun
        let prev = *clips.last().expect("total_frames > clip_len pushes a clip first");
        if prev.end() >= total_frames {
            break; // already covered
        }
        let remainder = total_frames - start;
        let length = next_clip_len(remainder);
        let tail_start = total_frames - length;
        if tail_start < prev.start || tail_start >= prev.end() {
            return Err(Error::Invariant(format!(
                "tail clip start {} falls outside the previous clip [{}, {})",
                tail_start,
                prev.start,
                prev.end()
            )));
        }
        clips.push(Clip {
            start: tail_start,
            length,
            condition: condition_for(k, tail_start),
        });
        break;
    }

    Ok(ClipPlan {
        total_frames,
        clip_len,
        overlap,
        clips,
    })
}

fn condition_for(k: usize, start: usize) -> ConditionSource {
    if k == 0 {
        ConditionSource::User
    } else {
        ConditionSource::PrevClip {
            clip: k - 1,
            frame: start,
        }
    }
}

/// Resolves each clip's initial environment map. `env_videos[k]` is the
/// predicted environment video of clip `k` (the last clip's video may be
/// omitted since nothing is chained from it). Frame indices are translated
/// from global to clip-local positions.
pub fn chain_conditions<T: Clone>(
    plan: &ClipPlan,
    user_map: T,
    env_videos: &[Vec<T>],
) -> Result<Vec<T>> {
    let n = plan.clips.len();
    if env_videos.len() + 1 < n {
        return Err(Error::InvalidArgument(format!(
            "missing env videos: got {}, need at least {}",
            env_videos.len(),
            n.saturating_sub(1)
        )));
    }
    for (k, video) in env_videos.iter().enumerate() {
        if video.len() != plan.clips[k].length {
            return Err(Error::DimMismatch(format!(
                "env video {} has {} frames, clip needs {}",
                k,
                video.len(),
                plan.clips[k].length
            )));
        }
    }
    plan.clips
        .iter()
        .map(|clip| match clip.condition {
            ConditionSource::User => Ok(user_map.clone()),
            ConditionSource::PrevClip { clip: p, frame } => {
                let prev = &plan.clips[p];
                if frame < prev.start || frame >= prev.end() {
                    return Err(Error::Invariant(format!(
                        "condition frame {} outside clip {} range [{}, {})",
                        frame,
                        p,
                        prev.start,
                        prev.end()
                    )));
                }
                Ok(env_videos[p][frame - prev.start].clone())
            }
        })
        .collect()
}
