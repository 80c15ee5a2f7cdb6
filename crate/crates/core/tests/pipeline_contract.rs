mod common;

use stereosynth::*;

fn cfg(preset: ScenePreset, w: usize, h: usize) -> PipelineConfig {
    let mut c = PipelineConfig::new(&preset, 7);
    c.resolution = Resolution { width: w, height: h };
    c
}

#[test]
fn flat_plane_reprojects_nearly_perfectly() {
    let mut c = cfg(ScenePreset::Plane { distance: 2.0, pattern: Pattern::Flat }, 256, 256);
    c.rig.ipd = 0.06;
    let out = pipeline::synthesize(&c, &pipeline::build_scene(&c).unwrap()).unwrap();
    assert!(out.report.ssim >= 0.99, "{}", out.report.ssim);
}

#[test]
fn zero_ipd_left_dominant_is_exact() {
    let mut c = cfg(ScenePreset::Boxes { count: 6, d_min: 1.0 }, 96, 64);
    c.rig = StereoRig::new(0.0, Eye::Left);
    c.patch.linear_interp = false;
    let out = pipeline::synthesize(&c, &pipeline::build_scene(&c).unwrap()).unwrap();
    assert_eq!(out.synthesized, out.ground_truth.color);
}

#[test]
fn step_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(ScenePreset::Step { near: 1.2, far: 4.0, strip_width: 0.4 }, 512, 512);
    c.output_dir = dir.path().join("run1");
    let out = run_pipeline(&c).unwrap();
    for f in [
        "synthesized.png",
        "ground_truth.png",
        "dominant.png",
        "dominant_depth.pfm",
        "dominant_depth.png",
        "error_map.png",
        "source_buffer.pfm",
        "config.json",
        "report.json",
    ] {
        assert!(c.output_dir.join(f).is_file(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(c.output_dir.join("report.json")).unwrap()).unwrap();
    for key in ["ssim", "psnr_db", "disocclusion_fraction", "triangle_ops", "pixel_ops", "wall_time_s"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    let sb = io::sourcebuffer_from_pfm(&std::fs::read(c.output_dir.join("source_buffer.pfm")).unwrap(), Eye::Right).unwrap();
    assert_eq!(sb, out.source_buffer);
    let depth = io::depth_from_pfm(&std::fs::read(c.output_dir.join("dominant_depth.pfm")).unwrap()).unwrap();
    assert_eq!(depth, out.dominant.depth);
}

#[test]
fn cost_ledger_excludes_scoring_render() {
    let c = cfg(ScenePreset::RandomTriangles { count: 500, size: 0.1 }, 64, 64);
    let scene = pipeline::build_scene(&c).unwrap();
    let out = pipeline::synthesize(&c, &scene).unwrap();
    assert_eq!(out.report.triangle_ops, 500);
    assert_eq!(out.report.pixel_ops, 3 * 64 * 64);
}

#[test]
fn identical_across_worker_counts() {
    let c = cfg(ScenePreset::Boxes { count: 10, d_min: 1.0 }, 128, 96);
    let scene = pipeline::build_scene(&c).unwrap();
    let run = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| pipeline::synthesize(&c, &scene).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.synthesized, b.synthesized);
    assert_eq!(a.source_buffer, b.source_buffer);
    assert_eq!(a.report.ssim, b.report.ssim);
    assert_eq!((a.report.triangle_ops, a.report.pixel_ops), (b.report.triangle_ops, b.report.pixel_ops));
}

#[test]
fn bench_counters_follow_definition() {
    let mut c = cfg(ScenePreset::Plane { distance: 2.0, pattern: Pattern::Flat }, 64, 64);
    c.scene.seed = 1;
    let opts = BenchOptions { threads: 1, repeats: 1, triangle_size: 0.08 };
    let rows = bench_complexity(&[1000, 2000, 4000], &c, &opts).unwrap();
    assert_eq!(rows.iter().map(|r| r.yoro_triangle_ops).collect::<Vec<_>>(), vec![1000, 2000, 4000]);
    assert_eq!(rows.iter().map(|r| r.conventional_triangle_ops).collect::<Vec<_>>(), vec![2000, 4000, 8000]);
    assert!(rows.iter().all(|r| r.yoro_pixel_ops == rows[0].yoro_pixel_ops));
    let mut csv = Vec::new();
    pipeline::write_bench_csv(&rows, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
}
