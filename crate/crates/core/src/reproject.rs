//! Two-stage reprojector.
//!
//! Stage 1 is a per-pixel matrix transform of the dominant eye's depth map
//! into a [`ShiftBuffer`] ("where each pixel goes"). Stage 2 scans each row
//! once and inverts it into a [`SourceBuffer`] ("where each pixel comes
//! from"), resolving collisions by depth and recording every disocclusion
//! run with its anchor, right-edge depth and width.
//!
//! Both buffers live at the ImBuffer resolution, `ceil(full / k)` for a
//! downsample factor `k`, and carry normalized horizontal coordinates so
//! the patcher can sample the full-resolution color image directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::images::DepthImage;
use crate::math::{ndc_from_depth, Eye, Mat4};

/// ImBuffer downsample factor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Downsample {
    #[default]
    X1,
    X2,
    X4,
    X8,
    X16,
}

impl Downsample {
    pub const ALL: [Downsample; 5] = [
        Downsample::X1,
        Downsample::X2,
        Downsample::X4,
        Downsample::X8,
        Downsample::X16,
    ];

    pub fn factor(self) -> usize {
        match self {
            Downsample::X1 => 1,
            Downsample::X2 => 2,
            Downsample::X4 => 4,
            Downsample::X8 => 8,
            Downsample::X16 => 16,
        }
    }

    /// ImBuffer size for a full-resolution image.
    pub fn reduce(self, width: usize, height: usize) -> (usize, usize) {
        let k = self.factor();
        (width.div_ceil(k), height.div_ceil(k))
    }
}

impl TryFrom<u32> for Downsample {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Downsample::X1),
            2 => Ok(Downsample::X2),
            4 => Ok(Downsample::X4),
            8 => Ok(Downsample::X8),
            16 => Ok(Downsample::X16),
            _ => Err(Error::invalid(format!(
                "downsample factor must be one of 1, 2, 4, 8, 16 (got {k})"
            ))),
        }
    }
}

impl From<Downsample> for u32 {
    fn from(d: Downsample) -> u32 {
        d.factor() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReprojectOptions {
    pub downsample: Downsample,
    /// The rendered eye; the target is the other one.
    pub dominant: Eye,
}

impl Default for ReprojectOptions {
    fn default() -> Self {
        ReprojectOptions {
            downsample: Downsample::X1,
            dominant: Eye::Right,
        }
    }
}

/// Stage-1 output: for every ImBuffer pixel, the normalized destination
/// column it lands on and its depth in the destination view.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftBuffer {
    width: usize,
    height: usize,
    dominant: Eye,
    target_u: Vec<f32>,
    depth: Vec<f32>,
}

impl ShiftBuffer {
    pub fn from_parts(
        width: usize,
        height: usize,
        dominant: Eye,
        target_u: Vec<f32>,
        depth: Vec<f32>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("shift buffer dimensions must be >= 1"));
        }
        if target_u.len() != width * height || depth.len() != width * height {
            return Err(Error::invalid("shift buffer planes have the wrong length"));
        }
        Ok(ShiftBuffer {
            width,
            height,
            dominant,
            target_u,
            depth,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dominant(&self) -> Eye {
        self.dominant
    }

    pub fn target_u(&self) -> &[f32] {
        &self.target_u
    }

    pub fn depth(&self) -> &[f32] {
        &self.depth
    }

    pub fn len(&self) -> usize {
        self.target_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_u.is_empty()
    }
}

/// One ImBuffer texel after stage 2.
///
/// Filled: `a` is the normalized source location, `b` the reprojected depth,
/// `c == 0`. Disocclusion: `a` is the normalized center of the anchor
/// column (the filled column on the scan-origin side of the run), `b` the
/// depth of the column just past the run, `c` the run width as a fraction of
/// the row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceTexel {
    pub a: f32,
    pub b: f32,
    pub c: f32,
}

impl SourceTexel {
    #[inline]
    pub fn is_filled(&self) -> bool {
        self.c == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceBuffer {
    width: usize,
    height: usize,
    dominant: Eye,
    texels: Vec<SourceTexel>,
}

impl SourceBuffer {
    pub fn from_texels(
        width: usize,
        height: usize,
        dominant: Eye,
        texels: Vec<SourceTexel>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("source buffer dimensions must be >= 1"));
        }
        if texels.len() != width * height {
            return Err(Error::invalid("source buffer has the wrong number of texels"));
        }
        if texels
            .iter()
            .any(|t| t.c < 0.0 || !t.a.is_finite() || !t.b.is_finite() || !t.c.is_finite())
        {
            return Err(Error::invalid(
                "source buffer texels must be finite with width c >= 0",
            ));
        }
        Ok(SourceBuffer {
            width,
            height,
            dominant,
            texels,
        })
    }

    /// Every texel maps to its own column center.
    pub fn identity(width: usize, height: usize, dominant: Eye) -> Result<Self> {
        let texels = (0..height)
            .flat_map(|_| {
                (0..width).map(move |x| SourceTexel {
                    a: center_u(x as isize, width) as f32,
                    b: 1.0,
                    c: 0.0,
                })
            })
            .collect();
        Self::from_texels(width, height, dominant, texels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn dominant(&self) -> Eye {
        self.dominant
    }

    pub fn texels(&self) -> &[SourceTexel] {
        &self.texels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> SourceTexel {
        self.texels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[SourceTexel] {
        &self.texels[y * self.width..(y + 1) * self.width]
    }

    pub fn disoccluded_count(&self) -> usize {
        self.texels.iter().filter(|t| !t.is_filled()).count()
    }

    /// Maximal runs of disoccluded texels in row `y`, as inclusive column
    /// ranges in left-to-right order.
    pub fn runs_in_row(&self, y: usize) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (x, t) in self.row(y).iter().enumerate() {
            match (t.is_filled(), start) {
                (false, None) => start = Some(x),
                (true, Some(s)) => {
                    runs.push((s, x - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.width - 1));
        }
        runs
    }
}

/// Normalized center of column `x` (which may lie outside the row).
#[inline]
pub fn center_u(x: isize, width: usize) -> f64 {
    (x as f64 + 0.5) / width as f64
}

/// Destination column for a normalized target, or `None` when it falls
/// outside `[0, 1)`.
#[inline]
pub fn target_column(target_u: f32, width: usize) -> Option<usize> {
    if !(0.0..1.0).contains(&target_u) {
        return None;
    }
    let x = (target_u as f64 * width as f64).floor() as usize;
    Some(x.min(width - 1))
}

/// Source location that lands on the destination column's center, assuming
/// unit local slope around the winning source pixel.
#[inline]
pub fn filled_source_u(source_x: usize, target_u: f32, dest_x: usize, width: usize) -> f32 {
    // f32 throughout so an exact hit leaves the source center untouched
    let src = center_u(source_x as isize, width) as f32;
    src + (center_u(dest_x as isize, width) as f32 - target_u)
}

/// Full-resolution row sampled for ImBuffer row `y`.
#[inline]
pub fn source_row(y: usize, imb_height: usize, full_height: usize) -> usize {
    let v = (y as f64 + 0.5) / imb_height as f64;
    ((v * full_height as f64).floor() as usize).min(full_height - 1)
}

/// Stage 1: per-pixel transform of the depth map by `m`.
pub fn stage1_reproject(depth: &DepthImage, m: &Mat4, opts: &ReprojectOptions) -> Result<ShiftBuffer> {
    if !m.is_finite() {
        return Err(Error::invalid("reprojection matrix must be finite"));
    }
    let (full_w, full_h) = depth.dims();
    let (w, h) = opts.downsample.reduce(full_w, full_h);
    let mut target_u = vec![0.0f32; w * h];
    let mut out_depth = vec![0.0f32; w * h];

    target_u
        .par_chunks_mut(w)
        .zip(out_depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (tu_row, d_row))| {
            let sy = source_row(y, h, full_h);
            let ndc_y = 1.0 - 2.0 * (y as f64 + 0.5) / h as f64;
            for x in 0..w {
                let u = center_u(x as isize, w);
                let sx = crate::images::column_of(u, full_w);
                let d = depth.get(sx, sy) as f64;
                let c = [2.0 * u - 1.0, ndc_y, ndc_from_depth(d), 1.0];
                let mut p = m.transform(c);
                if (p[3] - 1.0).abs() > 1e-9 {
                    let inv_w = 1.0 / p[3];
                    p[0] *= inv_w;
                    p[2] *= inv_w;
                }
                tu_row[x] = ((p[0] + 1.0) * 0.5) as f32;
                d_row[x] = ((1.0 - p[2]) * 0.5) as f32;
            }
        });

    ShiftBuffer::from_parts(w, h, opts.dominant, target_u, out_depth)
}

/// Stage 2: per-row scan turning destinations into sources, with
/// disocclusion tracking. Rows are independent and processed in parallel.
pub fn stage2_scan(shift: &ShiftBuffer) -> SourceBuffer {
    let (w, h) = (shift.width, shift.height);
    let mirror = shift.dominant == Eye::Left;
    let mut texels = vec![SourceTexel::default(); w * h];
    texels
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            let range = y * w..(y + 1) * w;
            scan_row(
                &shift.target_u[range.clone()],
                &shift.depth[range],
                mirror,
                row,
            );
        });
    SourceBuffer {
        width: w,
        height: h,
        dominant: shift.dominant,
        texels,
    }
}

/// Both stages.
pub fn reproject(depth: &DepthImage, m: &Mat4, opts: &ReprojectOptions) -> Result<SourceBuffer> {
    Ok(stage2_scan(&stage1_reproject(depth, m, opts)?))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Empty,
    Filled,
    Gap,
}

/// The scan runs in "scan space": index `i` is column `i` for a right
/// dominant eye and column `w - 1 - i` for a left one, so pixels always move
/// toward increasing `i` and gaps always open behind the scan.
fn scan_row(target_u: &[f32], depth: &[f32], mirror: bool, out: &mut [SourceTexel]) {
    let w = out.len();
    let col = |i: isize| -> isize {
        if mirror {
            w as isize - 1 - i
        } else {
            i
        }
    };
    let mut slot = vec![Slot::Empty; w];
    let mut x0: isize = -1;

    // writes a run [start, end] (scan space) anchored at `anchor`
    let set_run = |out: &mut [SourceTexel], anchor: isize, start: usize, end: usize, b: f32| {
        let a = center_u(col(anchor), w) as f32;
        let c = ((end + 1 - start) as f64 / w as f64) as f32;
        for i in start..=end {
            out[col(i as isize) as usize] = SourceTexel { a, b, c };
        }
    };

    for s in 0..w {
        let xs = col(s as isize) as usize;
        let Some(dest) = target_column(target_u[xs], w) else {
            continue;
        };
        let xi = col(dest as isize) as usize;
        let d = depth[xs];
        let wins = match slot[xi] {
            Slot::Filled => out[dest].b < d,
            Slot::Empty | Slot::Gap => true,
        };
        if wins {
            if xi as isize > x0 + 1 {
                // every column past x0 is still empty
                slot[(x0 + 1) as usize..xi].fill(Slot::Gap);
                set_run(out, x0, (x0 + 1) as usize, xi - 1, d);
            } else if slot[xi] == Slot::Gap {
                let mut rs = xi;
                while rs > 0 && slot[rs - 1] == Slot::Gap {
                    rs -= 1;
                }
                let mut re = xi;
                while re + 1 < w && slot[re + 1] == Slot::Gap {
                    re += 1;
                }
                let old = out[dest];
                let anchor = (old.a as f64 * w as f64).floor() as isize;
                let anchor = if mirror { w as isize - 1 - anchor } else { anchor };
                if rs < xi {
                    set_run(out, anchor, rs, xi - 1, d);
                }
                if xi < re {
                    set_run(out, xi as isize, xi + 1, re, old.b);
                }
            } else if slot[xi] == Slot::Filled && xi > 0 && slot[xi - 1] == Slot::Gap {
                // this column is the right edge of the run before it
                let mut rs = xi - 1;
                while rs > 0 && slot[rs - 1] == Slot::Gap {
                    rs -= 1;
                }
                for i in rs..xi {
                    out[col(i as isize) as usize].b = d;
                }
            }
            slot[xi] = Slot::Filled;
            out[dest] = SourceTexel {
                a: filled_source_u(xs, target_u[xs], dest, w),
                b: d,
                c: 0.0,
            };
        }
        x0 = x0.max(xi as isize);
    }

    if x0 < w as isize - 1 {
        let b = if x0 >= 0 { out[col(x0) as usize].b } else { 0.0 };
        set_run(out, x0, (x0 + 1) as usize, w - 1, b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{eye_poses, reprojection_matrix, view_projection, CameraPose, ProjectionParams, StereoRig};
    use proptest::prelude::*;

    fn shift_from_rows(rows: &[Vec<(f32, f32)>], dominant: Eye) -> ShiftBuffer {
        let w = rows[0].len();
        let tu = rows.iter().flatten().map(|p| p.0).collect();
        let d = rows.iter().flatten().map(|p| p.1).collect();
        ShiftBuffer::from_parts(w, rows.len(), dominant, tu, d).unwrap()
    }

    fn u(x: usize, w: usize) -> f32 {
        center_u(x as isize, w) as f32
    }

    #[test]
    fn downsample_sizes() {
        assert_eq!(Downsample::X1.reduce(512, 300), (512, 300));
        assert_eq!(Downsample::X4.reduce(513, 300), (129, 75));
        assert_eq!(Downsample::X16.reduce(10, 10), (1, 1));
        assert!(Downsample::try_from(3).is_err());
        assert_eq!(Downsample::try_from(8).unwrap(), Downsample::X8);
    }

    #[test]
    fn identity_matrix_keeps_positions_and_depth() {
        let vals: Vec<f32> = (0..48).map(|i| (i as f32 * 0.37).fract()).collect();
        let depth = DepthImage::from_values(8, 6, vals).unwrap();
        let shift = stage1_reproject(&depth, &Mat4::IDENTITY, &ReprojectOptions::default()).unwrap();
        for y in 0..6 {
            for x in 0..8 {
                let i = y * 8 + x;
                assert!((shift.target_u[i] - u(x, 8)).abs() < 1e-7);
                assert!((shift.depth[i] - depth.get(x, y)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn non_finite_matrix_rejected() {
        let depth = DepthImage::new(4, 4, 0.5).unwrap();
        let mut m = Mat4::IDENTITY;
        m.0[0][0] = f64::NAN;
        assert!(stage1_reproject(&depth, &m, &ReprojectOptions::default()).is_err());
    }

    #[test]
    fn flat_quad_shift_matches_analytic_disparity() {
        let proj = ProjectionParams::default();
        let (left, right) = eye_poses(&StereoRig::new(0.06, Eye::Right), &CameraPose::IDENTITY);
        let vp_r = view_projection(&right, &proj);
        let vp_l = view_projection(&left, &proj);
        let m = reprojection_matrix(&vp_r, &vp_l).unwrap();
        // depth value of a fronto-parallel plane at 1 m, computed through the
        // right eye's projection
        let c = vp_r.transform_point(crate::math::Vec3::new(0.03, 0.0, 1.0));
        let plane_depth = crate::math::depth_from_ndc(c[2] / c[3]) as f32;
        let w = 64;
        let depth = DepthImage::new(w, 8, plane_depth).unwrap();
        let shift = stage1_reproject(&depth, &m, &ReprojectOptions::default()).unwrap();
        // corner of the quad through both VP matrices
        let corner = crate::math::Vec3::new(0.2, 0.1, 1.0);
        let pr = vp_r.transform_point(corner);
        let pl = vp_l.transform_point(corner);
        let analytic = ((pl[0] / pl[3]) - (pr[0] / pr[3])) * 0.5;
        for (i, &t) in shift.target_u.iter().enumerate() {
            let x = i % w;
            let du = t as f64 - center_u(x as isize, w);
            assert!((du - analytic).abs() < 0.5 / w as f64, "{du} vs {analytic}");
        }
    }

    #[test]
    fn identity_shift_gives_identity_sources() {
        let w = 7;
        let rows: Vec<Vec<(f32, f32)>> = (0..3).map(|_| (0..w).map(|x| (u(x, w), 0.4)).collect()).collect();
        for dominant in [Eye::Right, Eye::Left] {
            let sb = stage2_scan(&shift_from_rows(&rows, dominant));
            for t in sb.texels() {
                assert_eq!(t.c, 0.0);
            }
            for x in 0..w {
                assert_eq!(sb.get(x, 1).a, u(x, w));
            }
        }
    }

    #[test]
    fn closer_depth_wins_collision() {
        let w = 4;
        // sources 0 and 1 both land on column 2
        let row = vec![(u(2, w), 0.3), (u(2, w), 0.7), (u(3, w), 0.2), (u(3, w), 0.1)];
        let sb = stage2_scan(&shift_from_rows(std::slice::from_ref(&row), Eye::Right));
        assert_eq!(sb.get(2, 0).b, 0.7);
        assert_eq!(sb.get(2, 0).a, u(1, w) + (u(2, w) - u(2, w)));
        // equal depth keeps the earlier writer
        assert_eq!(sb.get(3, 0).b, 0.2);
        // columns 0 and 1 form a boundary gap
        assert_eq!(sb.runs_in_row(0), vec![(0, 1)]);
        let g = sb.get(0, 0);
        assert_eq!(g.c, 2.0 / 4.0);
        assert_eq!(g.b, 0.7);
        assert!(g.a < 0.0);
    }

    #[test]
    fn step_gap_width_equals_disparity_difference() {
        // background shifts by 2, foreground strip (cols 8..12) by 6
        let w = 32;
        let row: Vec<(f32, f32)> = (0..w)
            .map(|x| {
                if (8..12).contains(&x) {
                    (u(x + 6, w), 0.8)
                } else {
                    (u((x + 2).min(w + 5), w).min(1.5), 0.2)
                }
            })
            .collect();
        let sb = stage2_scan(&shift_from_rows(&[row], Eye::Right));
        let runs = sb.runs_in_row(0);
        assert_eq!(runs, vec![(0, 1), (10, 13)]);
        let t = sb.get(11, 0);
        assert_eq!((t.c * w as f32).round() as usize, 4);
        assert_eq!(t.b, 0.8);
        assert_eq!(t.a, u(9, w));
        assert_eq!(sb.get(14, 0).b, 0.8);
    }

    #[test]
    fn left_dominant_mirrors_the_scan() {
        let w = 32;
        let row: Vec<(f32, f32)> = (0..w)
            .map(|x| {
                if (20..24).contains(&x) {
                    (u(x - 6, w), 0.8)
                } else if x >= 2 {
                    (u(x - 2, w), 0.2)
                } else {
                    (-0.01, 0.2)
                }
            })
            .collect();
        let sb = stage2_scan(&shift_from_rows(&[row], Eye::Left));
        assert_eq!(sb.runs_in_row(0), vec![(18, 21), (30, 31)]);
        let t = sb.get(20, 0);
        assert_eq!(t.a, u(22, w));
        assert_eq!(t.b, 0.8);
    }

    #[test]
    fn late_write_splits_a_gap() {
        let w = 10;
        // 0 -> 0, 1 -> 6 (gap 1..5), 2 -> 3 (closer, splits), rest continue
        let row = vec![
            (u(0, w), 0.5),
            (u(6, w), 0.5),
            (u(3, w), 0.9),
            (u(7, w), 0.5),
            (u(8, w), 0.5),
            (u(9, w), 0.5),
            (1.2, 0.5),
            (1.3, 0.5),
            (1.4, 0.5),
            (1.5, 0.5),
        ];
        let sb = stage2_scan(&shift_from_rows(&[row], Eye::Right));
        assert_eq!(sb.runs_in_row(0), vec![(1, 2), (4, 5)]);
        assert_eq!(sb.get(1, 0).b, 0.9);
        assert_eq!(sb.get(1, 0).c, 0.2);
        assert_eq!(sb.get(4, 0).a, u(3, w));
        assert_eq!(sb.get(4, 0).b, 0.5);
    }

    proptest! {
        #[test]
        fn gap_runs_are_consistent(
            w in 1usize..40,
            seed in prop::collection::vec((-0.2f32..1.2, 0.0f32..1.0), 40),
            left in any::<bool>(),
        ) {
            let row: Vec<(f32, f32)> = seed.into_iter().take(w).collect();
            prop_assume!(row.len() == w);
            let dominant = if left { Eye::Left } else { Eye::Right };
            let sb = stage2_scan(&shift_from_rows(&[row], dominant));
            for (s, e) in sb.runs_in_row(0) {
                let t0 = sb.get(s, 0);
                prop_assert!(t0.c > 0.0);
                prop_assert_eq!((t0.c * w as f32).round() as usize, e - s + 1);
                for x in s..=e {
                    prop_assert_eq!(sb.get(x, 0), t0);
                }
                let next = if left { s.checked_sub(1) } else { Some(e + 1).filter(|&n| n < w) };
                if let Some(n) = next {
                    prop_assert_eq!(sb.get(n, 0).b, t0.b);
                }
            }
        }
    }
}
