use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stereosynth::pipeline::{build_scene, write_bench_csv};
use stereosynth::reproject::{stage1_reproject, stage2_scan};
use stereosynth::{io, math, metrics, Downsample, Error, Eye, Patcher, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "stereosynth", version, about = "Render one eye, synthesize the other")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured scene and export it as OBJ.
    GenScene(Common),
    /// Rasterize both eyes (the conventional path).
    Render(Common),
    /// Render the dominant eye and dump its SourceBuffer.
    Reproject(ReprojectArgs),
    /// Fill a SourceBuffer from a color image.
    Patch(PatchArgs),
    /// Full run: render once, reproject, patch, score against the other eye.
    Pipeline(Common),
    /// Compare two PNG images.
    Metrics(MetricsArgs),
    /// Time conventional rendering against render-once synthesis.
    Bench(BenchArgs),
    /// Raw stream sizes of stereo RGB versus RGB plus depth.
    StreamSize(StreamArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// ImBuffer downsample factor (1, 2, 4, 8 or 16).
    #[arg(long)]
    downsample: Option<u32>,
    #[arg(long)]
    no_linear_interp: bool,
    /// yoro or median.
    #[arg(long)]
    patcher: Option<String>,
}

#[derive(Args)]
struct ReprojectArgs {
    #[command(flatten)]
    common: Common,
    /// Reproject this depth PFM instead of rendering the scene.
    #[arg(long)]
    depth: Option<PathBuf>,
}

#[derive(Args)]
struct PatchArgs {
    #[command(flatten)]
    common: Common,
    /// Dominant-eye color PNG.
    #[arg(long)]
    color: PathBuf,
    /// SourceBuffer PFM from `reproject`.
    #[arg(long)]
    source_buffer: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    a: PathBuf,
    b: PathBuf,
    /// Also write the 1 - SSIM error map here.
    #[arg(long)]
    error_map: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated ascending triangle counts.
    #[arg(long, value_delimiter = ',', default_value = "10000,50000,100000,200000")]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0.08)]
    triangle_size: f64,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long, default_value_t = 1920)]
    width: usize,
    #[arg(long, default_value_t = 1080)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    color_bits: u32,
    /// Defaults to the color bit depth.
    #[arg(long)]
    depth_bits: Option<u32>,
}

const DEFAULT_BENCH_CONFIG: &str = r#"{"schema_version":1,"scene":{"preset":"plane","params":{"distance":2.0}}}"#;

impl Common {
    fn load(&self, required: bool) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None if required => {
                return Err(Error::Config {
                    field: "--config".into(),
                    message: "this subcommand needs a config file".into(),
                })
            }
            None => PipelineConfig::from_json(DEFAULT_BENCH_CONFIG)?,
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.scene.seed = seed;
        }
        if let Some(k) = self.downsample {
            cfg.downsample = Downsample::try_from(k).map_err(|e| Error::Config {
                field: "--downsample".into(),
                message: e.to_string(),
            })?;
        }
        if self.no_linear_interp {
            cfg.patch.linear_interp = false;
        }
        if let Some(p) = &self.patcher {
            cfg.patch.patcher = p.parse::<Patcher>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn poses(cfg: &PipelineConfig) -> (math::CameraPose, math::CameraPose) {
    let (l, r) = math::eye_poses(&cfg.rig, &cfg.head);
    match cfg.rig.dominant {
        Eye::Left => (l, r),
        Eye::Right => (r, l),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn gen_scene_cmd(c: &Common) -> Result<()> {
    let cfg = c.load(true)?;
    let scene = build_scene(&cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("scene.obj"), stereosynth::to_obj(&scene))?;
    print_json(&serde_json::json!({
        "preset": cfg.scene.preset,
        "seed": cfg.scene.seed,
        "meshes": scene.meshes.len(),
        "triangles": scene.triangle_count(),
    }))
}

fn render_cmd(c: &Common) -> Result<()> {
    let cfg = c.load(true)?;
    let scene = build_scene(&cfg)?;
    let (w, h) = (cfg.resolution.width, cfg.resolution.height);
    let (left, right) = stereosynth::render_stereo_gt(&scene, &cfg.rig, &cfg.head, &cfg.projection, w, h)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    for (name, f) in [("left", &left), ("right", &right)] {
        io::write_png(dir.join(format!("{name}.png")), &f.color)?;
        io::write_pfm(dir.join(format!("{name}_depth.pfm")), &io::depth_to_pfm(&f.depth))?;
        io::write_depth_png16(dir.join(format!("{name}_depth.png")), &f.depth)?;
    }
    print_json(&serde_json::json!({
        "triangle_ops": left.triangles_processed + right.triangles_processed,
    }))
}

fn reproject_cmd(a: &ReprojectArgs) -> Result<()> {
    let cfg = a.common.load(a.depth.is_none())?;
    let (dom, other) = poses(&cfg);
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let depth = match &a.depth {
        Some(p) => io::depth_from_pfm(&std::fs::read(p)?)?,
        None => {
            let scene = build_scene(&cfg)?;
            let (w, h) = (cfg.resolution.width, cfg.resolution.height);
            let frame = stereosynth::rasterize(&scene, &dom, &cfg.projection, w, h)?;
            io::write_png(dir.join("dominant.png"), &frame.color)?;
            io::write_pfm(dir.join("dominant_depth.pfm"), &io::depth_to_pfm(&frame.depth))?;
            frame.depth
        }
    };
    let m = math::reprojection_matrix(
        &math::view_projection(&dom, &cfg.projection),
        &math::view_projection(&other, &cfg.projection),
    )?;
    let opts = stereosynth::ReprojectOptions {
        downsample: cfg.downsample,
        dominant: cfg.rig.dominant,
    };
    let imb = stage2_scan(&stage1_reproject(&depth, &m, &opts)?);
    io::write_pfm(dir.join("source_buffer.pfm"), &io::sourcebuffer_to_pfm(&imb))?;
    print_json(&serde_json::json!({
        "width": imb.width(),
        "height": imb.height(),
        "disocclusion_fraction": metrics::disocclusion_fraction(&imb),
    }))
}

fn patch_cmd(a: &PatchArgs) -> Result<()> {
    let cfg = a.common.load(false)?;
    let color = io::read_png(&a.color)?;
    let imb = io::sourcebuffer_from_pfm(&std::fs::read(&a.source_buffer)?, cfg.rig.dominant)?;
    let opts = cfg.patch.options();
    let out = match cfg.patch.patcher {
        Patcher::Yoro => stereosynth::patch(&color, &imb, &opts)?,
        Patcher::Median => stereosynth::median_patch(&color, &imb, cfg.patch.median_window, &opts)?,
    };
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("synthesized.png");
    io::write_png(&path, &out)?;
    println!("{}", path.display());
    Ok(())
}

fn pipeline_cmd(c: &Common) -> Result<()> {
    let cfg = c.load(true)?;
    let out = stereosynth::run_pipeline(&cfg)?;
    print_json(&out.report)
}

fn metrics_cmd(a: &MetricsArgs) -> Result<()> {
    let x = io::read_png(&a.a)?;
    let y = io::read_png(&a.b)?;
    if let Some(p) = &a.error_map {
        io::write_gray_png(p, &metrics::error_map(&x, &y)?)?;
    }
    print_json(&serde_json::json!({
        "ssim": metrics::ssim(&x, &y)?,
        "psnr_db": metrics::psnr(&x, &y)?,
    }))
}

fn bench_cmd(a: &BenchArgs) -> Result<()> {
    let cfg = a.common.load(false)?;
    let opts = stereosynth::BenchOptions {
        threads: a.threads,
        repeats: a.repeats,
        triangle_size: a.triangle_size,
    };
    let rows = stereosynth::bench_complexity(&a.counts, &cfg, &opts)?;
    match &a.common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("bench.csv");
            write_bench_csv(&rows, std::fs::File::create(&path)?)?;
            println!("{}", path.display());
        }
        None => write_bench_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn stream_size_cmd(a: &StreamArgs) -> Result<()> {
    let est = stereosynth::stream_size_estimate(a.width, a.height, a.color_bits, a.depth_bits.unwrap_or(a.color_bits))
        .map_err(|e| Error::Config {
            field: "stream-size".into(),
            message: e.to_string(),
        })?;
    print_json(&est)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenScene(c) => gen_scene_cmd(c),
        Command::Render(c) => render_cmd(c),
        Command::Reproject(a) => reproject_cmd(a),
        Command::Patch(a) => patch_cmd(a),
        Command::Pipeline(c) => pipeline_cmd(c),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::StreamSize(a) => stream_size_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
