//! Patcher: resolves every output pixel of the synthesized eye from the
//! dominant eye's color image and the stage-2 [`SourceBuffer`].
//!
//! Filled texels sample the color image at their source location.
//! Disoccluded texels run a background-only kernel that starts at the run's
//! anchor and extends away from the run, as wide as the run and
//! `kernel_height` rows tall. Candidates nearer than the run's far-edge depth
//! are skipped, the rest are blended with a running-remainder weight and
//! renormalized at the end.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::images::{ColorImage, Rgb, BLACK};
use crate::math::Eye;
use crate::reproject::{center_u, Downsample, SourceBuffer, SourceTexel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatchOptions {
    pub kernel_height: usize,
    pub linear_interp: bool,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            kernel_height: 3,
            linear_interp: true,
        }
    }
}

impl PatchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_height == 0 || self.kernel_height.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel height must be odd and >= 1 (got {})",
                self.kernel_height
            )));
        }
        Ok(())
    }
}

/// Remaining-weight kernel weight: `w/2 + 0.3 * w * (u - r.a) / r.c`.
pub fn weight(u: f64, r: &SourceTexel, w_rem: f64) -> Result<f64> {
    if r.c == 0.0 {
        return Err(Error::invalid("weight needs a disocclusion texel (c > 0)"));
    }
    Ok(weight_unchecked(u, r, w_rem))
}

#[inline]
fn weight_unchecked(u: f64, r: &SourceTexel, w_rem: f64) -> f64 {
    w_rem / 2.0 + 0.3 * w_rem * ((u - r.a as f64) / r.c as f64)
}

/// A kernel sample that contributed to a disoccluded output pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub out_x: usize,
    pub out_y: usize,
    /// ImBuffer column/row of the candidate.
    pub imb_x: usize,
    pub imb_y: usize,
    pub candidate_depth: f32,
    /// Depth of the run's far edge; admissible candidates are not nearer.
    pub threshold: f32,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PatchStats {
    /// ImBuffer and color fetches across all output pixels.
    pub reads: u64,
    pub pixels: u64,
    pub disoccluded_pixels: u64,
    /// Disoccluded pixels with the most reads any one of them needed.
    pub max_disoccluded_reads: u64,
    /// Disoccluded pixels whose kernel had no admissible sample.
    pub fallback_pixels: u64,
    /// Fallback pixels with no edge pixel either; written black.
    pub black_pixels: u64,
}

impl PatchStats {
    fn merge(mut self, o: PatchStats) -> PatchStats {
        self.reads += o.reads;
        self.pixels += o.pixels;
        self.disoccluded_pixels += o.disoccluded_pixels;
        self.max_disoccluded_reads = self.max_disoccluded_reads.max(o.max_disoccluded_reads);
        self.fallback_pixels += o.fallback_pixels;
        self.black_pixels += o.black_pixels;
        self
    }

    pub fn mean_reads(&self) -> f64 {
        if self.pixels == 0 {
            0.0
        } else {
            self.reads as f64 / self.pixels as f64
        }
    }
}

pub fn patch(color: &ColorImage, imb: &SourceBuffer, opts: &PatchOptions) -> Result<ColorImage> {
    patch_observed(color, imb, opts, |_| {}).map(|(img, _)| img)
}

pub fn patch_with_stats(
    color: &ColorImage,
    imb: &SourceBuffer,
    opts: &PatchOptions,
) -> Result<(ColorImage, PatchStats)> {
    patch_observed(color, imb, opts, |_| {})
}

/// [`patch`] with every contributing kernel sample reported to `observer`.
pub fn patch_observed<F>(
    color: &ColorImage,
    imb: &SourceBuffer,
    opts: &PatchOptions,
    observer: F,
) -> Result<(ColorImage, PatchStats)>
where
    F: Fn(&KernelSample) + Sync,
{
    opts.validate()?;
    let k = downsample_between(color, imb)?;
    let ctx = Ctx {
        color,
        imb,
        k,
        linear: opts.linear_interp,
    };
    let (w, h) = color.dims();
    let mut out = ColorImage::new(w, h, BLACK)?;
    let stats = out
        .pixels_mut()
        .par_chunks_mut(w)
        .enumerate()
        .map(|(py, row)| {
            let mut stats = PatchStats::default();
            for (px, dst) in row.iter_mut().enumerate() {
                *dst = ctx.patch_pixel(px, py, opts.kernel_height, &mut stats, &observer);
            }
            stats
        })
        .reduce(PatchStats::default, PatchStats::merge);
    Ok((out, stats))
}

/// Baseline: disoccluded pixels take the per-channel median of the filled
/// output pixels in a `window`-sized square around them.
pub fn median_patch(
    color: &ColorImage,
    imb: &SourceBuffer,
    window: usize,
    opts: &PatchOptions,
) -> Result<ColorImage> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "median window must be odd and >= 3 (got {window})"
        )));
    }
    let k = downsample_between(color, imb)?;
    let ctx = Ctx {
        color,
        imb,
        k,
        linear: opts.linear_interp,
    };
    let (w, h) = color.dims();

    let mut filled: Vec<Option<Rgb>> = vec![None; w * h];
    filled.par_chunks_mut(w).enumerate().for_each(|(py, row)| {
        let mut scratch = PatchStats::default();
        for (px, dst) in row.iter_mut().enumerate() {
            let (x, y) = ctx.imb_coords(px, py);
            let t = imb.get(x, y);
            if t.is_filled() {
                *dst = Some(ctx.resolve_filled(px, py, x, y, &mut scratch));
            }
        }
    });

    let r = window / 2;
    let mut out = ColorImage::new(w, h, BLACK)?;
    out.pixels_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(py, row)| {
            let mut chans: [Vec<f32>; 3] = Default::default();
            for (px, dst) in row.iter_mut().enumerate() {
                if let Some(c) = filled[py * w + px] {
                    *dst = c;
                    continue;
                }
                chans.iter_mut().for_each(Vec::clear);
                for y in py.saturating_sub(r)..=(py + r).min(h - 1) {
                    for x in px.saturating_sub(r)..=(px + r).min(w - 1) {
                        if let Some(c) = filled[y * w + x] {
                            for ch in 0..3 {
                                chans[ch].push(c[ch]);
                            }
                        }
                    }
                }
                *dst = if chans[0].is_empty() {
                    let line = &filled[py * w..(py + 1) * w];
                    line[..px]
                        .iter()
                        .rev()
                        .chain(line[px + 1..].iter())
                        .find_map(|c| *c)
                        .unwrap_or(BLACK)
                } else {
                    let mut m = [0.0f32; 3];
                    for ch in 0..3 {
                        let v = &mut chans[ch];
                        v.sort_by(f32::total_cmp);
                        m[ch] = v[(v.len() - 1) / 2];
                    }
                    m
                };
            }
        });
    Ok(out)
}

/// The downsample factor relating a full-resolution image to an ImBuffer.
pub fn downsample_between(color: &ColorImage, imb: &SourceBuffer) -> Result<usize> {
    let (w, h) = color.dims();
    Downsample::ALL
        .iter()
        .find(|d| d.reduce(w, h) == imb.dims())
        .map(|d| d.factor())
        .ok_or(Error::DimensionMismatch {
            expected: (w, h),
            actual: imb.dims(),
        })
}

struct Ctx<'a> {
    color: &'a ColorImage,
    imb: &'a SourceBuffer,
    k: usize,
    linear: bool,
}

impl Ctx<'_> {
    #[inline]
    fn imb_coords(&self, px: usize, py: usize) -> (usize, usize) {
        (
            (px / self.k).min(self.imb.width() - 1),
            (py / self.k).min(self.imb.height() - 1),
        )
    }

    #[inline]
    fn sample(&self, u: f64, row: usize) -> Rgb {
        if self.linear {
            self.color.sample_linear(u, row)
        } else {
            self.color.sample_nearest(u, row)
        }
    }

    fn resolve_filled(&self, px: usize, py: usize, x: usize, y: usize, stats: &mut PatchStats) -> Rgb {
        let t = self.imb.get(x, y);
        stats.reads += 1;
        if self.k == 1 {
            return self.sample(t.a as f64, py);
        }
        let iw = self.imb.width();
        let u_full = center_u(px as isize, self.color.width());
        let u_center = center_u(x as isize, iw);
        let mut shift = u_center - t.a as f64;
        if self.linear {
            let neighbor = if u_full > u_center {
                Some(x + 1).filter(|&n| n < iw)
            } else if u_full < u_center {
                x.checked_sub(1)
            } else {
                None
            };
            if let Some(n) = neighbor {
                stats.reads += 1;
                let tn = self.imb.get(n, y);
                if tn.is_filled() {
                    let frac = (u_full - u_center).abs() * iw as f64;
                    let shift_n = center_u(n as isize, iw) - tn.a as f64;
                    shift = (1.0 - frac) * shift + frac * shift_n;
                }
            }
        }
        self.sample(u_full - shift, py)
    }

    fn patch_pixel<F>(&self, px: usize, py: usize, kernel_height: usize, stats: &mut PatchStats, observer: &F) -> Rgb
    where
        F: Fn(&KernelSample),
    {
        stats.pixels += 1;
        let (x, y) = self.imb_coords(px, py);
        let r = self.imb.get(x, y);
        if r.is_filled() {
            return self.resolve_filled(px, py, x, y, stats);
        }

        stats.disoccluded_pixels += 1;
        let mut reads = 1u64;
        let iw = self.imb.width() as isize;
        let ih = self.imb.height() as isize;
        let full_h = self.color.height();
        let anchor = (r.a as f64 * iw as f64).floor() as isize;
        let g = ((r.c as f64 * iw as f64).round() as isize).max(1);
        let mirrored = self.imb.dominant() == Eye::Left;
        let half = (kernel_height / 2) as isize;

        let mut acc = [0.0f64; 3];
        let mut w_rem = 1.0f64;
        let mut any = false;
        for step in 0..g {
            // far end of the kernel first
            let j = if mirrored {
                anchor + g - 1 - step
            } else {
                anchor - g + 1 + step
            };
            if j < 0 || j >= iw {
                continue;
            }
            for dy in -half..=half {
                let row = (y as isize + dy).clamp(0, ih - 1);
                reads += 1;
                let cand = self.imb.get(j as usize, row as usize);
                if !cand.is_filled() || cand.b > r.b {
                    continue;
                }
                let u_c = center_u(j, iw as usize);
                let u = if mirrored { 2.0 * r.a as f64 - u_c } else { u_c };
                let wgt = weight_unchecked(u, &r, w_rem);
                let cy = (py as isize + (row - y as isize) * self.k as isize).clamp(0, full_h as isize - 1);
                let c = self.sample(cand.a as f64, cy as usize);
                for ch in 0..3 {
                    acc[ch] += c[ch] as f64 * wgt;
                }
                w_rem -= wgt;
                any = true;
                observer(&KernelSample {
                    out_x: px,
                    out_y: py,
                    imb_x: j as usize,
                    imb_y: row as usize,
                    candidate_depth: cand.b,
                    threshold: r.b,
                    weight: wgt,
                });
            }
        }

        let out = if any {
            let norm = 1.0 - w_rem;
            [
                (acc[0] / norm) as f32,
                (acc[1] / norm) as f32,
                (acc[2] / norm) as f32,
            ]
        } else {
            stats.fallback_pixels += 1;
            let edge = if mirrored { anchor - g - 1 } else { anchor + g + 1 };
            let edge_texel = (0..iw)
                .contains(&edge)
                .then(|| self.imb.get(edge as usize, y))
                .filter(SourceTexel::is_filled);
            match edge_texel {
                Some(t) => {
                    reads += 1;
                    self.sample(t.a as f64, py)
                }
                None => {
                    stats.black_pixels += 1;
                    BLACK
                }
            }
        };
        stats.reads += reads;
        stats.max_disoccluded_reads = stats.max_disoccluded_reads.max(reads);
        out
    }
}
