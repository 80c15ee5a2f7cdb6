//! End-to-end driver: render once, reproject, patch, score.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Patcher, PipelineConfig};
use crate::error::{Error, Result};
use crate::images::{ColorImage, DepthImage};
use crate::io;
use crate::math::{eye_poses, reprojection_matrix, view_projection, CameraPose, Eye};
use crate::metrics::{disocclusion_fraction, error_map, psnr, ssim, MetricsReport};
use crate::patch::{median_patch, patch_with_stats, PatchStats};
use crate::raster::{rasterize, Frame, Scene};
use crate::reproject::{stage1_reproject, stage2_scan, ReprojectOptions, SourceBuffer};
use crate::scene::{gen_scene, ScenePreset};

/// Per-stage pixel work of the synthesis path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PixelOps {
    pub stage1: u64,
    pub stage2: u64,
    pub patch: u64,
}

impl PixelOps {
    pub fn total(&self) -> u64 {
        self.stage1 + self.stage2 + self.patch
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub image: ColorImage,
    pub source_buffer: SourceBuffer,
    pub pixel_ops: PixelOps,
    pub patch_stats: Option<PatchStats>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: MetricsReport,
    /// The eye that was rendered.
    pub dominant: Frame,
    /// Reference render of the other eye, used only for scoring.
    pub ground_truth: Frame,
    pub synthesized: ColorImage,
    pub source_buffer: SourceBuffer,
    pub error_map: DepthImage,
    pub pixel_ops: PixelOps,
    pub patch_stats: Option<PatchStats>,
}

fn dominant_and_other(cfg: &PipelineConfig) -> (CameraPose, CameraPose) {
    let (left, right) = eye_poses(&cfg.rig, &cfg.head);
    match cfg.rig.dominant {
        Eye::Left => (left, right),
        Eye::Right => (right, left),
    }
}

/// Reprojects a rendered frame toward `target` and fills the holes.
pub fn synthesize_from(frame: &Frame, target: &CameraPose, cfg: &PipelineConfig) -> Result<Synthesis> {
    let vp_src = view_projection(&frame.pose, &frame.proj);
    let vp_dst = view_projection(target, &frame.proj);
    let m = reprojection_matrix(&vp_src, &vp_dst)?;
    let opts = ReprojectOptions {
        downsample: cfg.downsample,
        dominant: cfg.rig.dominant,
    };
    let shift = stage1_reproject(&frame.depth, &m, &opts)?;
    let imb = stage2_scan(&shift);
    let (w, h) = frame.color.dims();
    let imb_pixels = (imb.width() * imb.height()) as u64;
    let pixel_ops = PixelOps {
        stage1: imb_pixels,
        stage2: imb_pixels,
        patch: (w * h) as u64,
    };
    let popts = cfg.patch.options();
    let (image, patch_stats) = match cfg.patch.patcher {
        Patcher::Yoro => {
            let (img, stats) = patch_with_stats(&frame.color, &imb, &popts)?;
            (img, Some(stats))
        }
        Patcher::Median => (median_patch(&frame.color, &imb, cfg.patch.median_window, &popts)?, None),
    };
    Ok(Synthesis {
        image,
        source_buffer: imb,
        pixel_ops,
        patch_stats,
    })
}

/// Runs the pipeline on an already generated scene without touching disk.
pub fn synthesize(cfg: &PipelineConfig, scene: &Scene) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (w, h) = (cfg.resolution.width, cfg.resolution.height);
    let (dom_pose, other_pose) = dominant_and_other(cfg);

    let start = Instant::now();
    let dominant = rasterize(scene, &dom_pose, &cfg.projection, w, h)?;
    let syn = synthesize_from(&dominant, &other_pose, cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    // scoring only; kept out of the cost ledger
    let ground_truth = rasterize(scene, &other_pose, &cfg.projection, w, h)?;
    let report = MetricsReport {
        ssim: ssim(&syn.image, &ground_truth.color)?,
        psnr_db: psnr(&syn.image, &ground_truth.color)?,
        disocclusion_fraction: disocclusion_fraction(&syn.source_buffer),
        triangle_ops: dominant.triangles_processed,
        pixel_ops: syn.pixel_ops.total(),
        wall_time_s,
    };
    let error_map = error_map(&syn.image, &ground_truth.color)?;
    Ok(PipelineOutput {
        report,
        dominant,
        ground_truth,
        synthesized: syn.image,
        source_buffer: syn.source_buffer,
        error_map,
        pixel_ops: syn.pixel_ops,
        patch_stats: syn.patch_stats,
    })
}

pub fn build_scene(cfg: &PipelineConfig) -> Result<Scene> {
    gen_scene(&cfg.scene.preset()?, cfg.scene.seed)
}

/// Generates the scene, runs the pipeline and writes every artifact to
/// `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let scene = build_scene(cfg)?;
    let out = synthesize(cfg, &scene)?;
    write_artifacts(&out, cfg, &cfg.output_dir)?;
    Ok(out)
}

pub fn write_artifacts(out: &PipelineOutput, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_png(dir.join("synthesized.png"), &out.synthesized)?;
    io::write_png(dir.join("ground_truth.png"), &out.ground_truth.color)?;
    io::write_png(dir.join("dominant.png"), &out.dominant.color)?;
    io::write_pfm(dir.join("dominant_depth.pfm"), &io::depth_to_pfm(&out.dominant.depth))?;
    io::write_depth_png16(dir.join("dominant_depth.png"), &out.dominant.depth)?;
    io::write_gray_png(dir.join("error_map.png"), &out.error_map)?;
    io::write_pfm(dir.join("source_buffer.pfm"), &io::sourcebuffer_to_pfm(&out.source_buffer))?;
    std::fs::write(dir.join("config.json"), cfg.to_json())?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&out.report)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Worker threads for every stage; 1 gives single-core timings.
    pub threads: usize,
    /// Timed repetitions per configuration; the minimum is kept.
    pub repeats: usize,
    /// Half extent of each random triangle in meters.
    pub triangle_size: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            threads: 1,
            repeats: 3,
            triangle_size: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub triangles: u64,
    pub conventional_triangle_ops: u64,
    pub conventional_time_s: f64,
    pub yoro_triangle_ops: u64,
    pub yoro_pixel_ops: u64,
    pub yoro_time_s: f64,
    pub time_ratio: f64,
}

/// Times conventional two-eye rendering against render-once synthesis over
/// random-triangle scenes of increasing size.
pub fn bench_complexity(counts: &[usize], cfg: &PipelineConfig, opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("triangle counts must be nonempty and strictly ascending"));
    }
    if opts.threads == 0 || opts.repeats == 0 {
        return Err(Error::invalid("threads and repeats must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let (w, h) = (cfg.resolution.width, cfg.resolution.height);
    let (dom_pose, other_pose) = dominant_and_other(cfg);
    pool.install(|| {
        counts
            .iter()
            .map(|&n| {
                let preset = ScenePreset::RandomTriangles {
                    count: n,
                    size: opts.triangle_size,
                };
                let scene = gen_scene(&preset, cfg.scene.seed)?;
                let mut conv_t = f64::INFINITY;
                let mut yoro_t = f64::INFINITY;
                let mut conv_ops = 0;
                let mut yoro_ops = 0;
                let mut pixel_ops = 0;
                for _ in 0..opts.repeats {
                    let t = Instant::now();
                    let a = rasterize(&scene, &dom_pose, &cfg.projection, w, h)?;
                    let b = rasterize(&scene, &other_pose, &cfg.projection, w, h)?;
                    conv_t = conv_t.min(t.elapsed().as_secs_f64());
                    conv_ops = a.triangles_processed + b.triangles_processed;

                    let t = Instant::now();
                    let f = rasterize(&scene, &dom_pose, &cfg.projection, w, h)?;
                    let syn = synthesize_from(&f, &other_pose, cfg)?;
                    yoro_t = yoro_t.min(t.elapsed().as_secs_f64());
                    yoro_ops = f.triangles_processed;
                    pixel_ops = syn.pixel_ops.total();
                }
                Ok(BenchRow {
                    triangles: n as u64,
                    conventional_triangle_ops: conv_ops,
                    conventional_time_s: conv_t,
                    yoro_triangle_ops: yoro_ops,
                    yoro_pixel_ops: pixel_ops,
                    yoro_time_s: yoro_t,
                    time_ratio: yoro_t / conv_t,
                })
            })
            .collect()
    })
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Raw per-frame bytes for streaming both eyes versus one eye plus depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamSize {
    pub width: usize,
    pub height: usize,
    pub color_bits: u32,
    pub depth_bits: u32,
    pub stereo_rgb_bytes: u64,
    pub rgbd_bytes: u64,
    pub reduction: f64,
}

/// `color_bits` per color channel; `depth_bits` for the single depth
/// channel. Sizes are rounded up to whole bytes.
pub fn stream_size_estimate(width: usize, height: usize, color_bits: u32, depth_bits: u32) -> Result<StreamSize> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("resolution must be >= 1"));
    }
    if color_bits == 0 || depth_bits == 0 || color_bits > 64 || depth_bits > 64 {
        return Err(Error::invalid("bit depths must lie in 1..=64"));
    }
    let px = (width as u64)
        .checked_mul(height as u64)
        .ok_or_else(|| Error::invalid("resolution overflows"))?;
    let stereo_bits = px * 6 * color_bits as u64;
    let rgbd_bits = px * (3 * color_bits as u64 + depth_bits as u64);
    let stereo_rgb_bytes = stereo_bits.div_ceil(8);
    let rgbd_bytes = rgbd_bits.div_ceil(8);
    Ok(StreamSize {
        width,
        height,
        color_bits,
        depth_bits,
        stereo_rgb_bytes,
        rgbd_bytes,
        reduction: (stereo_bits - rgbd_bits) as f64 / stereo_bits as f64,
    })
}
