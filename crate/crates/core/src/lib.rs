//! Single-render stereo synthesis on the CPU.
//!
//! One eye is rasterized; the other is synthesized by reprojecting the color
//! and depth buffers and patching the disoccluded holes.

pub mod config;
pub mod error;
pub mod images;
pub mod io;
pub mod math;
pub mod metrics;
pub mod patch;
pub mod pipeline;
pub mod raster;
pub mod reproject;
pub mod scene;

pub use config::{PatchConfig, Patcher, PipelineConfig, Resolution, SceneConfig};
pub use error::{Error, Result};
pub use images::{ColorImage, DepthImage, Rgb};
pub use math::{CameraPose, Eye, Mat4, ProjectionParams, Quaternion, StereoRig, Vec3};
pub use metrics::{disocclusion_fraction, error_map, psnr, ssim, MetricsReport, Psnr};
pub use patch::{median_patch, patch, patch_with_stats, PatchOptions, PatchStats};
pub use pipeline::{bench_complexity, run_pipeline, stream_size_estimate, synthesize, BenchOptions, BenchRow};
pub use raster::{rasterize, render_stereo_gt, Frame, Scene, TriangleMesh};
pub use reproject::{reproject, Downsample, ReprojectOptions, ShiftBuffer, SourceBuffer, SourceTexel};
pub use scene::{gen_scene, parse_obj, to_obj, Pattern, ScenePreset};
