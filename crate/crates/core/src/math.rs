//! Camera math: rotations, view/projection matrices, the reprojection
//! matrix between two eyes, and stereo rig helpers.
//!
//! Convention used everywhere in the crate: homogeneous column vectors with
//! matrices applied on the left, `clip = P * V * world`. Normalized device
//! coordinates span `[-1, 1]` on every axis; NDC `z = -1` is the near plane.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance accepted by [`rotation_matrix`] for the quaternion norm.
pub const UNIT_TOLERANCE: f64 = 1e-4;

pub const DEFAULT_NEAR: f64 = 0.3;
pub const DEFAULT_FAR: f64 = 1000.0;
pub const DEFAULT_FOV_Y: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rotation quaternion with scalar part `s` and vector part `(x, y, z)`.
///
/// Serialized as `[s, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(s: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { s, x, y, z }
    }

    /// Rotation of `degrees` about `axis` (right-hand rule).
    pub fn from_axis_angle(axis: Vec3, degrees: f64) -> Self {
        let axis = axis.scale(1.0 / axis.length());
        let half = degrees.to_radians() * 0.5;
        let (sin, cos) = half.sin_cos();
        Quaternion::new(cos, axis.x * sin, axis.y * sin, axis.z * sin)
    }

    pub fn norm(self) -> f64 {
        (self.s * self.s + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Quaternion::new(self.s / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Self {
        Quaternion::new(self.s, -self.x, -self.y, -self.z)
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        rotation_block(self).transform_vector(v)
    }
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.s, q.x, q.y, q.z]
    }
}

/// Row-major 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);

    pub fn translation(t: Vec3) -> Mat4 {
        let mut m = Mat4::IDENTITY;
        m.0[0][3] = t.x;
        m.0[1][3] = t.y;
        m.0[2][3] = t.z;
        m
    }

    /// Negates the third axis.
    pub fn z_flip() -> Mat4 {
        let mut m = Mat4::IDENTITY;
        m.0[2][2] = -1.0;
        m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }

    pub fn transpose(&self) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.0[c][r];
            }
        }
        Mat4(out)
    }

    pub fn transform(&self, v: [f64; 4]) -> [f64; 4] {
        let m = &self.0;
        let mut out = [0.0; 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
        out
    }

    pub fn transform_point(&self, p: Vec3) -> [f64; 4] {
        self.transform([p.x, p.y, p.z, 1.0])
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        let o = self.transform([v.x, v.y, v.z, 0.0]);
        Vec3::new(o[0], o[1], o[2])
    }

    pub fn determinant3(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Mat4> {
        let mut a = self.0;
        let mut inv = Mat4::IDENTITY.0;
        let scale = a
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::SingularMatrix);
        }
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            if a[pivot][col].abs() <= scale * 1e-12 {
                return Err(Error::SingularMatrix);
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col];
            for k in 0..4 {
                a[col][k] /= p;
                inv[col][k] /= p;
            }
            for row in 0..4 {
                if row == col {
                    continue;
                }
                let f = a[row][col];
                if f != 0.0 {
                    for k in 0..4 {
                        a[row][k] -= f * a[col][k];
                        inv[row][k] -= f * inv[col][k];
                    }
                }
            }
        }
        Ok(Mat4(inv))
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        Mat4(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub rotation: Quaternion,
}

impl CameraPose {
    pub const IDENTITY: CameraPose = CameraPose {
        position: Vec3::ZERO,
        rotation: Quaternion::IDENTITY,
    };

    pub fn new(position: Vec3, rotation: Quaternion) -> Result<Self> {
        let pose = CameraPose { position, rotation };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::invalid("camera position must be finite"));
        }
        if !self.rotation.is_unit(UNIT_TOLERANCE) {
            return Err(Error::invalid(format!(
                "camera rotation must be a unit quaternion (norm {})",
                self.rotation.norm()
            )));
        }
        Ok(())
    }

    /// Camera-local +x axis in world space.
    pub fn right_axis(&self) -> Vec3 {
        self.rotation.rotate(Vec3::X)
    }
}

impl Default for CameraPose {
    fn default() -> Self {
        CameraPose::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionParams {
    /// The orthographic-style matrix with `size` the half height of the
    /// view frustum.
    PaperLiteral {
        aspect: f64,
        size: f64,
        near: f64,
        far: f64,
    },
    /// Symmetric perspective frustum; `fov_y` in degrees.
    Perspective {
        fov_y: f64,
        aspect: f64,
        near: f64,
        far: f64,
    },
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams::Perspective {
            fov_y: DEFAULT_FOV_Y,
            aspect: 1.0,
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
        }
    }
}

impl ProjectionParams {
    pub fn perspective(fov_y: f64, aspect: f64) -> Self {
        ProjectionParams::Perspective {
            fov_y,
            aspect,
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
        }
    }

    pub fn near_far(&self) -> (f64, f64) {
        match *self {
            ProjectionParams::PaperLiteral { near, far, .. }
            | ProjectionParams::Perspective { near, far, .. } => (near, far),
        }
    }

    pub fn aspect(&self) -> f64 {
        match *self {
            ProjectionParams::PaperLiteral { aspect, .. }
            | ProjectionParams::Perspective { aspect, .. } => aspect,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (near, far) = self.near_far();
        if !(near > 0.0 && near < far && far.is_finite()) {
            return Err(Error::invalid(format!(
                "projection requires 0 < near < far (near {near}, far {far})"
            )));
        }
        if !(self.aspect() > 0.0 && self.aspect().is_finite()) {
            return Err(Error::invalid("projection aspect must be > 0"));
        }
        match *self {
            ProjectionParams::PaperLiteral { size, .. } if !(size > 0.0 && size.is_finite()) => {
                Err(Error::invalid("projection size must be > 0"))
            }
            ProjectionParams::Perspective { fov_y, .. } if !(fov_y > 0.0 && fov_y < 180.0) => {
                Err(Error::invalid("projection fov_y must lie in (0, 180) degrees"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub fn other(self) -> Eye {
        match self {
            Eye::Left => Eye::Right,
            Eye::Right => Eye::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    /// Interpupillary distance in meters.
    pub ipd: f64,
    /// The eye that is actually rendered.
    pub dominant: Eye,
}

impl StereoRig {
    pub fn new(ipd: f64, dominant: Eye) -> Self {
        StereoRig { ipd, dominant }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ipd >= 0.0 && self.ipd.is_finite()) {
            return Err(Error::invalid("ipd must be a finite value >= 0"));
        }
        Ok(())
    }
}

impl Default for StereoRig {
    fn default() -> Self {
        StereoRig::new(0.063, Eye::Right)
    }
}

/// Rotation matrix of a unit quaternion, entry for entry in the layout with
/// `(r_x, r_y, r_z, r_w) = (s, x, y, z)`.
pub fn rotation_matrix(q: Quaternion) -> Result<Mat4> {
    if !q.is_unit(UNIT_TOLERANCE) {
        return Err(Error::invalid(format!(
            "rotation requires a unit quaternion (norm {})",
            q.norm()
        )));
    }
    Ok(rotation_block(q))
}

fn rotation_block(q: Quaternion) -> Mat4 {
    let (rx, ry, rz, rw) = (q.s, q.x, q.y, q.z);
    Mat4([
        [
            1.0 - 2.0 * rz * rz - 2.0 * rw * rw,
            2.0 * ry * rz - 2.0 * rx * rw,
            2.0 * ry * rw + 2.0 * rx * rz,
            0.0,
        ],
        [
            2.0 * ry * rz + 2.0 * rx * rw,
            1.0 - 2.0 * ry * ry - 2.0 * rw * rw,
            2.0 * rz * rw - 2.0 * rx * ry,
            0.0,
        ],
        [
            2.0 * ry * rw - 2.0 * rx * rz,
            2.0 * rz * rw + 2.0 * rx * ry,
            1.0 - 2.0 * ry * ry - 2.0 * rz * rz,
            0.0,
        ],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

/// `Flip * R * T` from a rotation and a translation column, exactly as the
/// block product is written (the flip keeps its homogeneous 1).
pub fn view_matrix_from_parts(rotation: Quaternion, translation: Vec3) -> Mat4 {
    Mat4::z_flip() * rotation_block(rotation) * Mat4::translation(translation)
}

/// World-to-camera matrix of a camera placed at `pose.position` with
/// orientation `pose.rotation`; camera looks along its local +z in world
/// space, which the flip turns into -z in view space.
pub fn view_matrix(pose: &CameraPose) -> Mat4 {
    let q = rotation_inverse(pose.rotation);
    Mat4::z_flip() * rotation_block(q) * Mat4::translation(-pose.position)
}

fn rotation_inverse(q: Quaternion) -> Quaternion {
    let n2 = q.s * q.s + q.x * q.x + q.y * q.y + q.z * q.z;
    let c = q.conjugate();
    Quaternion::new(c.s / n2, c.x / n2, c.y / n2, c.z / n2)
}

pub fn projection_matrix(p: &ProjectionParams) -> Mat4 {
    match *p {
        ProjectionParams::PaperLiteral {
            aspect,
            size,
            near,
            far,
        } => Mat4([
            [1.0 / (aspect * size), 0.0, 0.0, 0.0],
            [0.0, 1.0 / size, 0.0, 0.0],
            [0.0, 0.0, -2.0 / (far - near), -(far + near) / (far - near)],
            [0.0, 0.0, 0.0, 1.0],
        ]),
        ProjectionParams::Perspective {
            fov_y,
            aspect,
            near,
            far,
        } => {
            let f = 1.0 / (fov_y.to_radians() * 0.5).tan();
            Mat4([
                [f / aspect, 0.0, 0.0, 0.0],
                [0.0, f, 0.0, 0.0],
                [
                    0.0,
                    0.0,
                    (far + near) / (near - far),
                    2.0 * far * near / (near - far),
                ],
                [0.0, 0.0, -1.0, 0.0],
            ])
        }
    }
}

pub fn view_projection(pose: &CameraPose, proj: &ProjectionParams) -> Mat4 {
    projection_matrix(proj) * view_matrix(pose)
}

/// Matrix taking the source eye's clip coordinates to the destination eye's:
/// `M * (VP_src * p) = VP_dst * p` for every world point `p`.
pub fn reprojection_matrix(vp_src: &Mat4, vp_dst: &Mat4) -> Result<Mat4> {
    Ok(*vp_dst * vp_src.inverse()?)
}

/// Left and right eye poses of a rig worn at `head`.
pub fn eye_poses(rig: &StereoRig, head: &CameraPose) -> (CameraPose, CameraPose) {
    let offset = head.right_axis().scale(rig.ipd * 0.5);
    let left = CameraPose {
        position: head.position - offset,
        rotation: head.rotation,
    };
    let right = CameraPose {
        position: head.position + offset,
        rotation: head.rotation,
    };
    (left, right)
}

/// Minimum object distance `(ipd / 2) * cot(fov_y / 2)`, meters.
pub fn min_object_distance(ipd: f64, fov_y_degrees: f64) -> f64 {
    ipd * 0.5 / (fov_y_degrees.to_radians() * 0.5).tan()
}

/// Depth-buffer value of an NDC depth: 1 at the near plane, 0 at the far
/// plane.
#[inline]
pub fn depth_from_ndc(z_ndc: f64) -> f64 {
    (1.0 - z_ndc) * 0.5
}

#[inline]
pub fn ndc_from_depth(depth: f64) -> f64 {
    1.0 - 2.0 * depth
}

/// A world point mapped to continuous pixel coordinates (pixel centers at
/// half-integers, row 0 at the top).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenPoint {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
    pub w: f64,
}

pub fn project_to_screen(vp: &Mat4, p: Vec3, width: usize, height: usize) -> Option<ScreenPoint> {
    let c = vp.transform_point(p);
    if c[3].abs() < 1e-12 {
        return None;
    }
    let (nx, ny, nz) = (c[0] / c[3], c[1] / c[3], c[2] / c[3]);
    Some(ScreenPoint {
        x: (nx + 1.0) * 0.5 * width as f64,
        y: (1.0 - ny) * 0.5 * height as f64,
        depth: depth_from_ndc(nz),
        w: c[3],
    })
}
