//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereosynth::*;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cu(x: isize, w: usize) -> f64 {
    (x as f64 + 0.5) / w as f64
}

/// Forward splat with a max-depth test (earliest scan position wins ties),
/// then one texel per maximal unfilled run: anchored on the scan-order
/// predecessor, far depth from the scan-order successor.
pub fn stage2_oracle(shift: &ShiftBuffer) -> Vec<SourceTexel> {
    let (w, h) = (shift.width(), shift.height());
    let mirror = shift.dominant() == Eye::Left;
    let col = |i: isize| if mirror { w as isize - 1 - i } else { i };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let tu = &shift.target_u()[y * w..(y + 1) * w];
        let dp = &shift.depth()[y * w..(y + 1) * w];
        // per destination column: (depth, source column)
        let mut best: Vec<Option<(f32, usize)>> = vec![None; w];
        for s in 0..w {
            let xs = col(s as isize) as usize;
            let t = tu[xs];
            if !(0.0..1.0).contains(&t) {
                continue;
            }
            let dest = ((t as f64 * w as f64).floor() as usize).min(w - 1);
            match best[dest] {
                Some((d, _)) if d >= dp[xs] => {}
                _ => best[dest] = Some((dp[xs], xs)),
            }
        }
        let mut row = vec![SourceTexel::default(); w];
        for (dest, b) in best.iter().enumerate() {
            if let Some((d, xs)) = *b {
                let a = cu(xs as isize, w) as f32 + (cu(dest as isize, w) as f32 - tu[xs]);
                row[dest] = SourceTexel { a, b: d, c: 0.0 };
            }
        }
        let filled = |i: isize| best[col(i) as usize].is_some();
        let depth_at = |i: isize| best[col(i) as usize].unwrap().0;
        let mut i = 0isize;
        while i < w as isize {
            if filled(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < w as isize && !filled(i) {
                i += 1;
            }
            let end = i - 1;
            let anchor = start - 1;
            let b = if end + 1 < w as isize {
                depth_at(end + 1)
            } else if anchor >= 0 {
                depth_at(anchor)
            } else {
                0.0
            };
            let t = SourceTexel {
                a: cu(col(anchor), w) as f32,
                b,
                c: ((end - start + 1) as f64 / w as f64) as f32,
            };
            for j in start..=end {
                row[col(j) as usize] = t;
            }
        }
        out.extend(row);
    }
    out
}

/// Sequential patcher with each kernel weight written in closed form:
/// `w_i = f_i * prod_{j<i} (1 - f_j)` with `f = 1/2 + 0.3 (u - a) / c`.
pub fn patch_oracle(color: &ColorImage, imb: &SourceBuffer, kernel_height: usize, linear: bool) -> Vec<[f64; 3]> {
    let (w, h) = color.dims();
    let (iw, ih) = imb.dims();
    let k = Downsample::ALL
        .iter()
        .find(|d| d.reduce(w, h) == (iw, ih))
        .unwrap()
        .factor();
    let mirrored = imb.dominant() == Eye::Left;
    let sample = |u: f64, row: usize| -> [f64; 3] {
        let c = if linear {
            color.sample_linear(u, row)
        } else {
            color.sample_nearest(u, row)
        };
        c.map(|v| v as f64)
    };
    let mut out = Vec::with_capacity(w * h);
    for py in 0..h {
        for px in 0..w {
            let x = (px / k).min(iw - 1);
            let y = (py / k).min(ih - 1);
            let r = imb.get(x, y);
            if r.c == 0.0 {
                if k == 1 {
                    out.push(sample(r.a as f64, py));
                    continue;
                }
                let uf = cu(px as isize, w);
                let uc = cu(x as isize, iw);
                let mut shift = uc - r.a as f64;
                if linear && uf != uc {
                    let n = if uf > uc { x as isize + 1 } else { x as isize - 1 };
                    if n >= 0 && (n as usize) < iw {
                        let tn = imb.get(n as usize, y);
                        if tn.c == 0.0 {
                            let frac = (uf - uc).abs() * iw as f64;
                            shift = (1.0 - frac) * shift + frac * (cu(n, iw) - tn.a as f64);
                        }
                    }
                }
                out.push(sample(uf - shift, py));
                continue;
            }

            let anchor = (r.a as f64 * iw as f64).floor() as isize;
            let g = ((r.c as f64 * iw as f64).round() as isize).max(1);
            let cols: Vec<isize> = if mirrored {
                (anchor..anchor + g).rev().collect()
            } else {
                (anchor - g + 1..=anchor).collect()
            };
            let half = (kernel_height / 2) as isize;
            let mut cands: Vec<(f64, [f64; 3])> = Vec::new();
            for j in cols {
                if j < 0 || j >= iw as isize {
                    continue;
                }
                for dy in -half..=half {
                    let row = (y as isize + dy).clamp(0, ih as isize - 1);
                    let cand = imb.get(j as usize, row as usize);
                    if cand.c != 0.0 || cand.b > r.b {
                        continue;
                    }
                    let uc = cu(j, iw);
                    let u = if mirrored { 2.0 * r.a as f64 - uc } else { uc };
                    let cy = (py as isize + (row - y as isize) * k as isize).clamp(0, h as isize - 1);
                    cands.push((u, sample(cand.a as f64, cy as usize)));
                }
            }
            if cands.is_empty() {
                let edge = if mirrored { anchor - g - 1 } else { anchor + g + 1 };
                let t = (edge >= 0 && edge < iw as isize).then(|| imb.get(edge as usize, y));
                out.push(match t {
                    Some(t) if t.c == 0.0 => sample(t.a as f64, py),
                    _ => [0.0; 3],
                });
                continue;
            }
            let f: Vec<f64> = cands
                .iter()
                .map(|(u, _)| 0.5 + 0.3 * (u - r.a as f64) / r.c as f64)
                .collect();
            let mut num = [0.0; 3];
            let mut den = 0.0;
            for i in 0..cands.len() {
                let wi = f[i] * f[..i].iter().map(|fj| 1.0 - fj).product::<f64>();
                for (n, c) in num.iter_mut().zip(cands[i].1) {
                    *n += wi * c;
                }
                den += wi;
            }
            out.push(num.map(|v| v / den));
        }
    }
    out
}

/// Random shift buffer: mostly layered disparity fields with occlusions,
/// sometimes arbitrary targets.
pub fn random_shift(rng: &mut ChaCha8Rng, max_side: usize) -> ShiftBuffer {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let dominant = if rng.random_bool(0.5) { Eye::Left } else { Eye::Right };
    let sign = if dominant == Eye::Right { 1.0 } else { -1.0 };
    let structured = rng.random_bool(0.7);
    let levels = [0.0f32, 0.25, 0.5, 0.75, 1.0];
    let gain = rng.random_range(0.0..0.3);
    let mut tu = Vec::with_capacity(w * h);
    let mut dp = Vec::with_capacity(w * h);
    for _ in 0..h {
        let mut d = levels[rng.random_range(0..levels.len())];
        for x in 0..w {
            if rng.random_bool(0.15) {
                d = levels[rng.random_range(0..levels.len())];
            }
            let t = if structured {
                cu(x as isize, w) + sign * gain * d as f64
            } else {
                rng.random_range(-0.2..1.2)
            };
            tu.push(t as f32);
            dp.push(d);
        }
    }
    ShiftBuffer::from_parts(w, h, dominant, tu, dp).unwrap()
}

pub fn random_color(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ColorImage {
    let data = (0..w * h)
        .map(|_| [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()])
        .collect();
    ColorImage::from_pixels(w, h, data).unwrap()
}

/// Quality suite: six presets, all geometry at least 1 m from the eyes.
pub fn quality_suite() -> Vec<(ScenePreset, u64)> {
    vec![
        (ScenePreset::Plane { distance: 1.5, pattern: Pattern::Checker }, 1),
        (ScenePreset::Plane { distance: 3.0, pattern: Pattern::Gradient }, 2),
        (ScenePreset::Plane { distance: 2.0, pattern: Pattern::Stripes }, 3),
        (ScenePreset::Step { near: 1.2, far: 4.0, strip_width: 0.4 }, 4),
        (ScenePreset::Boxes { count: 8, d_min: 1.0 }, 5),
        (ScenePreset::NearObject { distance: 2.0 }, 6),
    ]
}

/// Step and box scenes, where disocclusions are widest.
pub fn disocclusion_suite() -> Vec<(ScenePreset, u64)> {
    vec![
        (ScenePreset::Step { near: 1.2, far: 4.0, strip_width: 0.4 }, 4),
        (ScenePreset::Step { near: 1.0, far: 6.0, strip_width: 0.6 }, 11),
        (ScenePreset::Boxes { count: 8, d_min: 1.0 }, 5),
        (ScenePreset::Boxes { count: 20, d_min: 1.2 }, 12),
    ]
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
