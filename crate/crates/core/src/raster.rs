//! Software triangle rasterizer used as the ground-truth oracle.
//!
//! Edge functions with a top-left fill rule, pixel centers at half-integer
//! coordinates, a depth buffer keeping the largest (closest) depth, and
//! perspective-correct Gouraud color. Triangles are clipped against the near
//! plane; fragments past the far plane are discarded.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::images::{ColorImage, DepthImage, Rgb};
use crate::math::{
    depth_from_ndc, eye_poses, projection_matrix, view_matrix, CameraPose, ProjectionParams, StereoRig, Vec3,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub colors: Vec<Rgb>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>, colors: Vec<Rgb>) -> Result<Self> {
        let mesh = TriangleMesh {
            vertices,
            triangles,
            colors,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::invalid("mesh needs at least one triangle"));
        }
        if self.colors.len() != self.vertices.len() {
            return Err(Error::invalid("mesh needs one color per vertex"));
        }
        let n = self.vertices.len();
        if self.triangles.iter().flatten().any(|&i| i as usize >= n) {
            return Err(Error::invalid("triangle index out of range"));
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mesh vertices must be finite"));
        }
        Ok(())
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn centroid(&self) -> Vec3 {
        let sum = self.vertices.iter().fold(Vec3::ZERO, |a, &v| a + v);
        sum.scale(1.0 / self.vertices.len() as f64)
    }

    /// Largest vertex distance from the centroid.
    pub fn extent(&self) -> f64 {
        let c = self.centroid();
        self.vertices
            .iter()
            .map(|&v| (v - c).length())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub meshes: Vec<TriangleMesh>,
    pub background: Rgb,
}

impl Scene {
    pub fn new(meshes: Vec<TriangleMesh>, background: Rgb) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::invalid("scene needs at least one mesh"));
        }
        for m in &meshes {
            m.validate()?;
        }
        Ok(Scene { meshes, background })
    }

    pub fn triangle_count(&self) -> usize {
        self.meshes.iter().map(TriangleMesh::triangle_count).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.meshes.iter().flat_map(|m| m.vertices.iter().copied())
    }
}

/// One eye's render: the color and depth G-buffers plus the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub color: ColorImage,
    pub depth: DepthImage,
    pub pose: CameraPose,
    pub proj: ProjectionParams,
    /// Triangles submitted to the rasterizer for this frame.
    pub triangles_processed: u64,
}

#[derive(Clone, Copy)]
struct ClipVertex {
    cam: Vec3,
    color: Rgb,
}

struct Setup {
    // screen-space positions
    p: [[f64; 2]; 3],
    z_ndc: [f64; 3],
    inv_w: [f64; 3],
    color: [Rgb; 3],
    area: f64,
    y_min: usize,
    y_max: usize,
    x_min: usize,
    x_max: usize,
}

const BAND: usize = 16;

pub fn rasterize(
    scene: &Scene,
    pose: &CameraPose,
    proj: &ProjectionParams,
    width: usize,
    height: usize,
) -> Result<Frame> {
    proj.validate()?;
    pose.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::invalid("render size must be >= 1"));
    }
    let view = view_matrix(pose);
    let projection = projection_matrix(proj);
    let (near, _) = proj.near_far();

    let tris: Vec<(&TriangleMesh, [u32; 3])> = scene
        .meshes
        .iter()
        .flat_map(|m| m.triangles.iter().map(move |&t| (m, t)))
        .collect();

    let setups: Vec<Setup> = tris
        .par_iter()
        .flat_map_iter(|(mesh, t)| {
            let verts = t.map(|i| ClipVertex {
                cam: {
                    let c = view.transform_point(mesh.vertices[i as usize]);
                    Vec3::new(c[0], c[1], c[2])
                },
                color: mesh.colors[i as usize],
            });
            let poly = clip_near(&verts, near);
            let mut out = Vec::new();
            for i in 1..poly.len().saturating_sub(1) {
                if let Some(s) = setup([poly[0], poly[i], poly[i + 1]], &projection, width, height) {
                    out.push(s);
                }
            }
            out.into_iter()
        })
        .collect();

    let bands = height.div_ceil(BAND);
    let mut binned: Vec<Vec<u32>> = vec![Vec::new(); bands];
    for (i, s) in setups.iter().enumerate() {
        for band in binned.iter_mut().take(s.y_max / BAND + 1).skip(s.y_min / BAND) {
            band.push(i as u32);
        }
    }

    let mut color = vec![scene.background; width * height];
    let mut depth = vec![-1.0f32; width * height];
    color
        .par_chunks_mut(width * BAND)
        .zip(depth.par_chunks_mut(width * BAND))
        .zip(binned.par_iter())
        .enumerate()
        .for_each(|(band, ((c_band, d_band), list))| {
            let y0 = band * BAND;
            let rows = c_band.len() / width;
            for &i in list {
                draw(&setups[i as usize], y0, rows, width, c_band, d_band);
            }
        });

    let depth: Vec<f32> = depth.into_iter().map(|d| d.max(0.0)).collect();
    Ok(Frame {
        color: ColorImage::from_pixels(width, height, color)?,
        depth: DepthImage::from_values(width, height, depth)?,
        pose: *pose,
        proj: *proj,
        triangles_processed: tris.len() as u64,
    })
}

/// Conventional binocular rendering: one rasterization per eye.
pub fn render_stereo_gt(
    scene: &Scene,
    rig: &StereoRig,
    head: &CameraPose,
    proj: &ProjectionParams,
    width: usize,
    height: usize,
) -> Result<(Frame, Frame)> {
    let (left, right) = eye_poses(rig, head);
    Ok((
        rasterize(scene, &left, proj, width, height)?,
        rasterize(scene, &right, proj, width, height)?,
    ))
}

/// Sutherland-Hodgman against the plane `z = -near` (view space looks down
/// -z).
fn clip_near(tri: &[ClipVertex; 3], near: f64) -> Vec<ClipVertex> {
    let inside = |v: &ClipVertex| v.cam.z <= -near;
    if tri.iter().all(inside) {
        return tri.to_vec();
    }
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let (ia, ib) = (inside(&a), inside(&b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let t = (-near - a.cam.z) / (b.cam.z - a.cam.z);
            let lerp = |x: f64, y: f64| x + (y - x) * t;
            let lerp32 = |x: f32, y: f32| x + (y - x) * t as f32;
            out.push(ClipVertex {
                cam: Vec3::new(lerp(a.cam.x, b.cam.x), lerp(a.cam.y, b.cam.y), -near),
                color: [
                    lerp32(a.color[0], b.color[0]),
                    lerp32(a.color[1], b.color[1]),
                    lerp32(a.color[2], b.color[2]),
                ],
            });
        }
    }
    out
}

fn setup(v: [ClipVertex; 3], projection: &crate::math::Mat4, width: usize, height: usize) -> Option<Setup> {
    let mut p = [[0.0; 2]; 3];
    let mut z_ndc = [0.0; 3];
    let mut inv_w = [0.0; 3];
    let mut color = [[0.0f32; 3]; 3];
    for i in 0..3 {
        let c = projection.transform_point(v[i].cam);
        if c[3] <= 0.0 {
            return None;
        }
        let iw = 1.0 / c[3];
        p[i] = [
            (c[0] * iw + 1.0) * 0.5 * width as f64,
            (1.0 - c[1] * iw) * 0.5 * height as f64,
        ];
        z_ndc[i] = c[2] * iw;
        inv_w[i] = iw;
        color[i] = v[i].color;
    }
    let mut area = edge(p[0], p[1], p[2]);
    if area == 0.0 || !area.is_finite() {
        return None;
    }
    if area < 0.0 {
        p.swap(1, 2);
        z_ndc.swap(1, 2);
        inv_w.swap(1, 2);
        color.swap(1, 2);
        area = -area;
    }
    let xs = [p[0][0], p[1][0], p[2][0]];
    let ys = [p[0][1], p[1][1], p[2][1]];
    let fmin = |a: [f64; 3]| a[0].min(a[1]).min(a[2]);
    let fmax = |a: [f64; 3]| a[0].max(a[1]).max(a[2]);
    // pixels whose centers can fall inside
    let x_lo = (fmin(xs) - 0.5).ceil().max(0.0);
    let x_hi = (fmax(xs) - 0.5).floor().min(width as f64 - 1.0);
    let y_lo = (fmin(ys) - 0.5).ceil().max(0.0);
    let y_hi = (fmax(ys) - 0.5).floor().min(height as f64 - 1.0);
    if x_lo > x_hi || y_lo > y_hi {
        return None;
    }
    Some(Setup {
        p,
        z_ndc,
        inv_w,
        color,
        area,
        x_min: x_lo as usize,
        x_max: x_hi as usize,
        y_min: y_lo as usize,
        y_max: y_hi as usize,
    })
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Edges whose zero set is owned by the triangle under the top-left rule
/// (y grows downward).
#[inline]
fn owns_edge(a: [f64; 2], b: [f64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn draw(s: &Setup, y0: usize, rows: usize, width: usize, color: &mut [Rgb], depth: &mut [f32]) {
    let y_start = s.y_min.max(y0);
    let y_end = s.y_max.min(y0 + rows - 1);
    if y_start > y_end {
        return;
    }
    let edges = [(1, 2), (2, 0), (0, 1)];
    let owns = edges.map(|(i, j)| owns_edge(s.p[i], s.p[j]));
    for y in y_start..=y_end {
        let py = y as f64 + 0.5;
        for x in s.x_min..=s.x_max {
            let pt = [x as f64 + 0.5, py];
            let mut lambda = [0.0; 3];
            let mut inside = true;
            for (k, &(i, j)) in edges.iter().enumerate() {
                let e = edge(s.p[i], s.p[j], pt);
                if e < 0.0 || (e == 0.0 && !owns[k]) {
                    inside = false;
                    break;
                }
                lambda[k] = e / s.area;
            }
            if !inside {
                continue;
            }
            let z = lambda[0] * s.z_ndc[0] + lambda[1] * s.z_ndc[1] + lambda[2] * s.z_ndc[2];
            let d = depth_from_ndc(z);
            if d < 0.0 {
                continue;
            }
            let d = d.min(1.0) as f32;
            let idx = (y - y0) * width + x;
            if d <= depth[idx] {
                continue;
            }
            let pw = [
                lambda[0] * s.inv_w[0],
                lambda[1] * s.inv_w[1],
                lambda[2] * s.inv_w[2],
            ];
            let norm = 1.0 / (pw[0] + pw[1] + pw[2]);
            let mut c = [0.0f32; 3];
            for (ch, out) in c.iter_mut().enumerate() {
                let v = pw[0] * s.color[0][ch] as f64
                    + pw[1] * s.color[1][ch] as f64
                    + pw[2] * s.color[2][ch] as f64;
                *out = (v * norm) as f32;
            }
            depth[idx] = d;
            color[idx] = c;
        }
    }
}
