mod common;

use rand::Rng;
use stereosynth::math::{eye_poses, project_to_screen, view_projection};
use stereosynth::*;

fn random_scene(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Scene {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..n {
        for _ in 0..3 {
            vertices.push(Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(1.5..5.0),
            ));
            colors.push([rng.random(), rng.random(), rng.random()]);
        }
        let b = 3 * i as u32;
        triangles.push([b, b + 1, b + 2]);
    }
    Scene::new(vec![TriangleMesh::new(vertices, triangles, colors).unwrap()], [0.0; 3]).unwrap()
}

#[test]
fn depth_buffer_keeps_closest_surface() {
    let mut rng = common::rng(21);
    let proj = ProjectionParams::default();
    let (w, h) = (32, 32);
    for _ in 0..20 {
        let scene = random_scene(&mut rng, 6);
        let pose = CameraPose::IDENTITY;
        let frame = rasterize(&scene, &pose, &proj, w, h).unwrap();
        let vp = view_projection(&pose, &proj);
        let mesh = &scene.meshes[0];
        let tris: Vec<[_; 3]> = mesh
            .triangles
            .iter()
            .map(|t| t.map(|i| project_to_screen(&vp, mesh.vertices[i as usize], w, h).unwrap()))
            .collect();
        for py in 0..h {
            'pixel: for px in 0..w {
                let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
                let mut best = 0.0f64;
                for t in &tris {
                    let (a, b, c) = (t[0], t[1], t[2]);
                    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let l1 = ((x - a.x) * (c.y - a.y) - (c.x - a.x) * (y - a.y)) / det;
                    let l2 = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / det;
                    let l0 = 1.0 - l1 - l2;
                    if [l0, l1, l2].iter().any(|l| l.abs() < 1e-7) {
                        continue 'pixel; // on an edge; fill rule decides
                    }
                    if l0 > 0.0 && l1 > 0.0 && l2 > 0.0 {
                        best = best.max(l0 * a.depth + l1 * b.depth + l2 * c.depth);
                    }
                }
                let got = frame.depth.get(px, py) as f64;
                assert!((got - best).abs() < 1e-5, "({px},{py}): {got} vs {best}");
            }
        }
    }
}

#[test]
fn drawn_position_matches_view_projection() {
    let mut rng = common::rng(99);
    let proj = ProjectionParams::default();
    let (w, h) = (160, 120);
    let proj = match proj {
        ProjectionParams::Perspective { fov_y, near, far, .. } => ProjectionParams::Perspective {
            fov_y,
            aspect: w as f64 / h as f64,
            near,
            far,
        },
        p => p,
    };
    for _ in 0..50 {
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let pose = CameraPose {
            position: Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            rotation: Quaternion::from_axis_angle(axis, rng.random_range(-40.0..40.0)),
        };
        let forward = pose.rotation.rotate(Vec3::Z);
        let right = pose.rotation.rotate(Vec3::X);
        let up = pose.rotation.rotate(Vec3::Y);
        let dist = rng.random_range(1.0..6.0);
        let lateral = dist * 0.3;
        let center = pose.position
            + forward.scale(dist)
            + right.scale(rng.random_range(-lateral..lateral))
            + up.scale(rng.random_range(-lateral..lateral));
        // camera-facing square about 8-16 px across
        let half = dist * rng.random_range(0.04..0.08);
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .map(|(s, t)| center + right.scale(s * half) + up.scale(t * half));
        let mesh = TriangleMesh::new(corners.to_vec(), vec![[0, 1, 2], [0, 2, 3]], vec![[1.0; 3]; 4]).unwrap();
        let scene = Scene::new(vec![mesh], [0.0; 3]).unwrap();
        let f = rasterize(&scene, &pose, &proj, w, h).unwrap();
        let sp = project_to_screen(&view_projection(&pose, &proj), center, w, h).unwrap();
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                if f.depth.get(x, y) > 0.0 {
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                    n += 1.0;
                }
            }
        }
        assert!(n > 0.0);
        assert!((sx / n - sp.x).abs() <= 0.5, "x {} vs {}", sx / n, sp.x);
        assert!((sy / n - sp.y).abs() <= 0.5, "y {} vs {}", sy / n, sp.y);
    }
}

#[test]
fn plane_disparity_matches_analytic() {
    let proj = ProjectionParams::default();
    let rig = StereoRig::default();
    let (w, h) = (256, 256);
    // a small flat quad 1 m ahead on an empty background
    let corner = Vec3::new(-0.1, -0.1, 1.0);
    let v = vec![corner, Vec3::new(0.1, -0.1, 1.0), Vec3::new(0.1, 0.1, 1.0), Vec3::new(-0.1, 0.1, 1.0)];
    let mesh = TriangleMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], vec![[1.0; 3]; 4]).unwrap();
    let scene = Scene::new(vec![mesh], [0.0; 3]).unwrap();
    let (l, r) = render_stereo_gt(&scene, &rig, &CameraPose::IDENTITY, &proj, w, h).unwrap();
    let first = |f: &Frame| (0..w).find(|&x| f.depth.get(x, h / 2) > 0.0).unwrap() as f64;
    let measured = first(&l) - first(&r);
    let (lp, rp) = eye_poses(&rig, &CameraPose::IDENTITY);
    let pl = project_to_screen(&view_projection(&lp, &proj), corner, w, h).unwrap();
    let pr = project_to_screen(&view_projection(&rp, &proj), corner, w, h).unwrap();
    let focal = (w as f64 / 2.0) / (30f64.to_radians()).tan();
    let analytic = rig.ipd * focal / 1.0;
    assert!((measured - analytic).abs() <= 1.0, "{measured} vs {analytic}");
    assert!(((pl.x - pr.x) - analytic).abs() < 1e-9);
    assert_eq!(l.triangles_processed + r.triangles_processed, 2 * scene.triangle_count() as u64);
}

#[test]
fn render_is_deterministic_across_thread_counts() {
    let scene = gen_scene(&ScenePreset::RandomTriangles { count: 3000, size: 0.1 }, 5).unwrap();
    let proj = ProjectionParams::default();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| rasterize(&scene, &CameraPose::IDENTITY, &proj, 96, 80).unwrap());
    let b = four.install(|| rasterize(&scene, &CameraPose::IDENTITY, &proj, 96, 80).unwrap());
    assert_eq!(a, b);
}
