//! Deterministic math core for environment-map conditioned video
//! relighting: Radiance HDR and binary tensor I/O, the three lighting
//! encodings, ground-truth environment-video generation by viewpoint
//! warping, sphere-render alignment oracles, latent conditioning and
//! training-pair procedures, streaming clip planning, and evaluation
//! metrics.
//!
//! Everything in this crate is pure and reproducible: all randomness is
//! keyed by explicit seeds, reductions use fixed summation orders, and
//! parallel code paths never change results.

pub mod encodings;
pub mod error;
pub mod hdr;
pub mod image;
pub mod metrics;
pub mod relight;
mod rng;
pub mod scheduler;
pub mod spherical;
pub mod sphere;
pub mod tensor;
pub mod warp;

pub use encodings::{
    decode_direction, decode_log, directional_encoding, encode_bundle, encode_log,
    latent_to_log_image, log_image_to_latent, log_overflow_count, tonemap_reinhard,
    tonemap_reinhard_image, LightBundle, DEFAULT_M,
};
pub use error::{Error, Result};
pub use hdr::{read_hdr, read_hdr_image, rgbe_decode, rgbe_encode, write_hdr, write_hdr_image};
pub use image::{
    quantize_u8, resize_bilinear, write_png_gray, write_png_ldr, EnvironmentMap, ImageRgb,
    LdrImage, Rgb,
};
pub use metrics::{
    aggregate, aggregate_per_video, angle_between_deg, angular_error, extract_peaks,
    features_from_tensor, material_consistency, mse, psnr, ssim, MetricsReport, Peak, PeakSet,
};
pub use relight::{
    assemble_sequence, build_sic_pair, disassemble_sequence, group_fuse, interpolate_latents,
    make_ce_standin, sample_reference_index, zero_reference, ConditionSequence, GBufferLatents,
    SegmentLabel, SegmentSpan, SicPair,
};
pub use scheduler::{
    chain_conditions, is_valid_clip_len, next_clip_len, plan_clips, Clip, ClipPlan,
    ConditionSource, DEFAULT_CLIP_LEN, DEFAULT_OVERLAP,
};
pub use spherical::{
    direction_to_pixel, pixel_direction, sample_direction, solid_angle_map, SolidAngleMap,
};
pub use sphere::{
    downsample_env, irradiance, render_sphere, SphereMode, SphereRender, SphereRenderConfig,
};
pub use tensor::{read_tensor, write_tensor, LatentSeq, Tensor};
pub use warp::{
    gen_trajectory, make_environment_video, total_radiance, warp_env, CameraTrajectory,
    MotionPattern, Rotation,
};
