//! Procedural test scenes and OBJ import.
//!
//! All presets place geometry in front of a head at the origin looking down
//! world +z with +y up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::images::Rgb;
use crate::math::Vec3;
use crate::raster::{Scene, TriangleMesh};

pub const BACKGROUND: Rgb = [0.05, 0.06, 0.09];

const MAX_TRIANGLES: usize = 20_000_000;

/// Surface coloring for planar presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    Flat,
    #[default]
    Checker,
    Stripes,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenePreset {
    /// One wall filling the view at `distance`.
    Plane {
        distance: f64,
        #[serde(default)]
        pattern: Pattern,
    },
    /// A vertical foreground strip in front of a far wall.
    Step {
        near: f64,
        far: f64,
        #[serde(default = "default_strip_width")]
        strip_width: f64,
    },
    /// Axis-aligned boxes, none closer than `d_min`, over a back wall.
    Boxes { count: usize, d_min: f64 },
    /// Random triangles between 2 and 8 m, for complexity benchmarks.
    RandomTriangles {
        count: usize,
        #[serde(default = "default_triangle_size")]
        size: f64,
    },
    /// A single striped sphere centered at `distance`.
    NearObject { distance: f64 },
    /// Wavefront OBJ file, positions and faces.
    Obj { path: String },
}

fn default_strip_width() -> f64 {
    0.4
}

fn default_triangle_size() -> f64 {
    0.08
}

impl ScenePreset {
    /// Looks a preset up by name with JSON parameters.
    pub fn from_name(name: &str, params: serde_json::Value) -> Result<Self> {
        let v = serde_json::json!({ "preset": name, "params": params });
        serde_json::from_value(v).map_err(|e| Error::config("scene", e.to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenePreset::Plane { .. } => "plane",
            ScenePreset::Step { .. } => "step",
            ScenePreset::Boxes { .. } => "boxes",
            ScenePreset::RandomTriangles { .. } => "random-triangles",
            ScenePreset::NearObject { .. } => "near-object",
            ScenePreset::Obj { .. } => "obj",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("scene.params.{field}"), "must be a positive finite number"))
            }
        };
        match *self {
            ScenePreset::Plane { distance, .. } => positive("distance", distance),
            ScenePreset::Step { near, far, strip_width } => {
                positive("near", near)?;
                positive("far", far)?;
                positive("strip_width", strip_width)?;
                if far <= near {
                    return Err(Error::config("scene.params.far", "must be greater than near"));
                }
                Ok(())
            }
            ScenePreset::Boxes { count, d_min } => {
                positive("d_min", d_min)?;
                if count == 0 || count > MAX_TRIANGLES / 12 {
                    return Err(Error::config("scene.params.count", "out of range"));
                }
                Ok(())
            }
            ScenePreset::RandomTriangles { count, size } => {
                positive("size", size)?;
                if count == 0 || count > MAX_TRIANGLES {
                    return Err(Error::config("scene.params.count", "out of range"));
                }
                Ok(())
            }
            ScenePreset::NearObject { distance } => positive("distance", distance),
            ScenePreset::Obj { ref path } => {
                if path.is_empty() {
                    return Err(Error::config("scene.params.path", "must not be empty"));
                }
                Ok(())
            }
        }
    }
}

pub fn gen_scene(preset: &ScenePreset, seed: u64) -> Result<Scene> {
    preset.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meshes = match *preset {
        ScenePreset::Plane { distance, pattern } => {
            let half = distance * 0.9;
            vec![wall(distance, half, 16, pattern, palette(&mut rng))]
        }
        ScenePreset::Step { near, far, strip_width } => {
            let back = wall(far, far * 0.9, 24, Pattern::Checker, palette(&mut rng));
            let h = near * 0.9;
            let strip = grid(
                Vec3::new(-strip_width / 2.0, -h, near),
                Vec3::new(strip_width, 0.0, 0.0),
                Vec3::new(0.0, 2.0 * h, 0.0),
                (4, 16),
                Pattern::Stripes,
                palette(&mut rng),
            );
            vec![back, strip]
        }
        ScenePreset::Boxes { count, d_min } => {
            let back_z = d_min + 6.0;
            let mut meshes = vec![wall(back_z, back_z * 0.9, 16, Pattern::Gradient, palette(&mut rng))];
            for _ in 0..count {
                let s = rng.random_range(0.15..0.5);
                let z0 = rng.random_range(d_min + 0.1..d_min + 4.0);
                let spread = z0 * 0.45;
                let cx = rng.random_range(-spread..spread);
                let cy = rng.random_range(-spread..spread);
                let color = random_color(&mut rng);
                meshes.push(cuboid(Vec3::new(cx - s / 2.0, cy - s / 2.0, z0), Vec3::new(s, s, s), color));
            }
            meshes
        }
        ScenePreset::RandomTriangles { count, size } => vec![random_triangles(count, size, &mut rng)],
        ScenePreset::NearObject { distance } => vec![sphere(Vec3::new(0.0, 0.0, distance), 0.15 * distance, 24, 32)],
        ScenePreset::Obj { ref path } => {
            let text = std::fs::read_to_string(path)?;
            vec![parse_obj(&text)?]
        }
    };
    Scene::new(meshes, BACKGROUND)
}

fn palette(rng: &mut ChaCha8Rng) -> [Rgb; 2] {
    [random_color(rng), random_color(rng)]
}

fn random_color(rng: &mut ChaCha8Rng) -> Rgb {
    [rng.random_range(0.1..0.95), rng.random_range(0.1..0.95), rng.random_range(0.1..0.95)]
}

fn wall(z: f64, half: f64, cells: usize, pattern: Pattern, colors: [Rgb; 2]) -> TriangleMesh {
    grid(
        Vec3::new(-half, -half, z),
        Vec3::new(2.0 * half, 0.0, 0.0),
        Vec3::new(0.0, 2.0 * half, 0.0),
        (cells, cells),
        pattern,
        colors,
    )
}

/// Planar grid of `cells.0 × cells.1` quads spanned by `du`, `dv` from
/// `origin`. Checker and stripe cells get private vertices so colors stay
/// flat; gradients share vertices.
fn grid(origin: Vec3, du: Vec3, dv: Vec3, cells: (usize, usize), pattern: Pattern, colors: [Rgb; 2]) -> TriangleMesh {
    let (nu, nv) = cells;
    let at = |i: usize, j: usize| origin + du.scale(i as f64 / nu as f64) + dv.scale(j as f64 / nv as f64);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vc = Vec::new();
    match pattern {
        Pattern::Gradient | Pattern::Flat => {
            for j in 0..=nv {
                for i in 0..=nu {
                    vertices.push(at(i, j));
                    let c = if pattern == Pattern::Flat {
                        colors[0]
                    } else {
                        let t = i as f32 / nu as f32;
                        let s = j as f32 / nv as f32;
                        [
                            colors[0][0] * (1.0 - t) + colors[1][0] * t,
                            colors[0][1] * (1.0 - s) + colors[1][1] * s,
                            (colors[0][2] + colors[1][2]) * 0.5,
                        ]
                    };
                    vc.push(c);
                }
            }
            let idx = |i: usize, j: usize| (j * (nu + 1) + i) as u32;
            for j in 0..nv {
                for i in 0..nu {
                    triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                    triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                }
            }
        }
        Pattern::Checker | Pattern::Stripes => {
            for j in 0..nv {
                for i in 0..nu {
                    let pick = match pattern {
                        Pattern::Checker => (i + j) % 2,
                        _ => i % 2,
                    };
                    let base = vertices.len() as u32;
                    vertices.extend([at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
                    vc.extend([colors[pick]; 4]);
                    triangles.push([base, base + 1, base + 2]);
                    triangles.push([base, base + 2, base + 3]);
                }
            }
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        colors: vc,
    }
}

fn cuboid(min: Vec3, size: Vec3, color: Rgb) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut colors = Vec::new();
    let shade = |c: Rgb, k: f32| [c[0] * k, c[1] * k, c[2] * k];
    let faces = [
        (min, Vec3::new(size.x, 0.0, 0.0), Vec3::new(0.0, size.y, 0.0), 1.0),
        (min + Vec3::new(0.0, 0.0, size.z), Vec3::new(size.x, 0.0, 0.0), Vec3::new(0.0, size.y, 0.0), 0.6),
        (min, Vec3::new(0.0, 0.0, size.z), Vec3::new(0.0, size.y, 0.0), 0.8),
        (min + Vec3::new(size.x, 0.0, 0.0), Vec3::new(0.0, 0.0, size.z), Vec3::new(0.0, size.y, 0.0), 0.75),
        (min, Vec3::new(size.x, 0.0, 0.0), Vec3::new(0.0, 0.0, size.z), 0.65),
        (min + Vec3::new(0.0, size.y, 0.0), Vec3::new(size.x, 0.0, 0.0), Vec3::new(0.0, 0.0, size.z), 0.9),
    ];
    for (o, a, b, k) in faces {
        let base = vertices.len() as u32;
        vertices.extend([o, o + a, o + a + b, o + b]);
        colors.extend([shade(color, k); 4]);
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }
    TriangleMesh {
        vertices,
        triangles,
        colors,
    }
}

fn sphere(center: Vec3, radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    for r in 0..=rings {
        let phi = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..=segments {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            vertices.push(
                center
                    + Vec3::new(
                        phi.sin() * theta.cos(),
                        phi.cos(),
                        phi.sin() * theta.sin(),
                    )
                    .scale(radius),
            );
            colors.push(if (s / 2) % 2 == 0 {
                [0.85, 0.35, 0.2]
            } else {
                [0.95, 0.85, 0.5]
            });
        }
    }
    let idx = |r: usize, s: usize| (r * (segments + 1) + s) as u32;
    let mut triangles = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            if r > 0 {
                triangles.push([idx(r, s), idx(r + 1, s), idx(r, s + 1)]);
            }
            if r + 1 < rings {
                triangles.push([idx(r, s + 1), idx(r + 1, s), idx(r + 1, s + 1)]);
            }
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        colors,
    }
}

fn random_triangles(count: usize, size: f64, rng: &mut ChaCha8Rng) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(count * 3);
    let mut colors = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    for i in 0..count {
        let z = rng.random_range(2.0..8.0);
        let spread = z * 0.6;
        let c = Vec3::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread), z);
        let base = random_color(rng);
        for _ in 0..3 {
            let off = Vec3::new(
                rng.random_range(-size..size),
                rng.random_range(-size..size),
                rng.random_range(-size..size) * 0.2,
            );
            let mut v = c + off;
            v.z = v.z.clamp(2.0, 8.0);
            vertices.push(v);
            let j: f32 = rng.random_range(0.8..1.0);
            colors.push([base[0] * j, base[1] * j, base[2] * j]);
        }
        let b = (3 * i) as u32;
        triangles.push([b, b + 1, b + 2]);
    }
    TriangleMesh {
        vertices,
        triangles,
        colors,
    }
}

const OBJ_DEFAULT_COLOR: Rgb = [0.8, 0.8, 0.8];

/// Parses `v` and `f` records. Faces with more than three corners are
/// fanned; `v/vt/vn` references and negative indices are accepted. An
/// optional `r g b` after a vertex position sets its color.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let err = |m: &str| Error::parse("OBJ", format!("line {}: {m}", lineno + 1));
        match it.next() {
            Some("v") => {
                let nums: Vec<f64> = it
                    .map(|t| t.parse::<f64>().map_err(|_| err("bad number")))
                    .collect::<Result<_>>()?;
                if nums.len() < 3 || nums.iter().any(|n| !n.is_finite()) {
                    return Err(err("vertex needs three finite coordinates"));
                }
                vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
                colors.push(if nums.len() >= 6 {
                    [nums[3] as f32, nums[4] as f32, nums[5] as f32].map(|c| c.clamp(0.0, 1.0))
                } else {
                    OBJ_DEFAULT_COLOR
                });
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| err("bad face index"))?;
                    let n = vertices.len() as i64;
                    let resolved = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || resolved < 0 || resolved >= n || resolved > u32::MAX as i64 {
                        return Err(err("face index out of range"));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(err("face needs at least three vertices"));
                }
                if triangles.len() + idx.len() > MAX_TRIANGLES {
                    return Err(err("too many triangles"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles, colors).map_err(|e| Error::parse("OBJ", e.to_string()))
}

/// Writes all meshes as one OBJ with per-vertex colors after positions.
pub fn to_obj(scene: &Scene) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let mut base = 1usize;
    for m in &scene.meshes {
        for (v, c) in m.vertices.iter().zip(&m.colors) {
            let _ = writeln!(out, "v {} {} {} {} {} {}", v.x, v.y, v.z, c[0], c[1], c[2]);
        }
        for t in &m.triangles {
            let _ = writeln!(
                out,
                "f {} {} {}",
                t[0] as usize + base,
                t[1] as usize + base,
                t[2] as usize + base
            );
        }
        base += m.vertices.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{eye_poses, CameraPose, StereoRig};

    #[test]
    fn deterministic_for_seed() {
        let p = ScenePreset::RandomTriangles { count: 1000, size: 0.1 };
        let a = gen_scene(&p, 7).unwrap();
        assert_eq!(a, gen_scene(&p, 7).unwrap());
        assert_eq!(a.triangle_count(), 1000);
        assert_ne!(a, gen_scene(&p, 8).unwrap());
    }

    #[test]
    fn boxes_respect_d_min_for_both_eyes() {
        let d_min = 1.3;
        let scene = gen_scene(&ScenePreset::Boxes { count: 20, d_min }, 3).unwrap();
        let (l, r) = eye_poses(&StereoRig::default(), &CameraPose::IDENTITY);
        for v in scene.vertices() {
            assert!((v - l.position).length() >= d_min);
            assert!((v - r.position).length() >= d_min);
        }
    }

    #[test]
    fn near_object_centroid() {
        let scene = gen_scene(&ScenePreset::NearObject { distance: 0.5 }, 0).unwrap();
        let m = &scene.meshes[0];
        assert!((m.centroid().length() - 0.5).abs() <= m.extent());
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(ScenePreset::from_name("teapot", serde_json::json!({})).is_err());
        let p = ScenePreset::from_name("plane", serde_json::json!({"distance": 2.0})).unwrap();
        assert_eq!(p, ScenePreset::Plane { distance: 2.0, pattern: Pattern::Checker });
    }

    #[test]
    fn bad_params_rejected() {
        assert!(gen_scene(&ScenePreset::Plane { distance: -1.0, pattern: Pattern::Flat }, 0).is_err());
        assert!(gen_scene(&ScenePreset::Step { near: 3.0, far: 2.0, strip_width: 0.3 }, 0).is_err());
        assert!(gen_scene(&ScenePreset::RandomTriangles { count: 0, size: 0.1 }, 0).is_err());
    }

    #[test]
    fn obj_export_round_trips() {
        let scene = gen_scene(&ScenePreset::Boxes { count: 3, d_min: 1.0 }, 2).unwrap();
        let m = parse_obj(&to_obj(&scene)).unwrap();
        assert_eq!(m.triangle_count(), scene.triangle_count());
        let verts: Vec<Vec3> = scene.vertices().collect();
        assert_eq!(m.vertices, verts);
    }

    #[test]
    fn obj_parses_quads_and_negative_indices() {
        let text = "# cube face\nv 0 0 1\nv 1 0 1 1 0 0\nv 1 1 1\nv 0 1 1\nf 1/1 2/2 3/3 4/4\nf -4 -3 -2\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3], [0, 1, 2]]);
        assert_eq!(m.colors[1], [1.0, 0.0, 0.0]);
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("").is_err());
    }
}
