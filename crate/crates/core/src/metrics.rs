//! SSIM, PSNR, error maps and run reports.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::images::{ColorImage, DepthImage};
use crate::reproject::SourceBuffer;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const RANGE: f64 = 255.0;

fn check_dims(a: &ColorImage, b: &ColorImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    Ok(())
}

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let r = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

/// Separable valid-mode Gaussian filter.
fn filter_valid(data: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Local SSIM for every valid window position.
fn ssim_map(a: &ColorImage, b: &ColorImage) -> Result<(Vec<f64>, usize, usize)> {
    check_dims(a, b)?;
    let (w, h) = a.dims();
    if w < WINDOW || h < WINDOW {
        return Err(Error::invalid(format!("SSIM needs images of at least {WINDOW}x{WINDOW}")));
    }
    let la = a.luma();
    let lb = b.luma();
    let k = gaussian_kernel();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let mu_a = filter_valid(&la, w, h, &k);
    let mu_b = filter_valid(&lb, w, h, &k);
    let aa = filter_valid(&prod(&la, &la), w, h, &k);
    let bb = filter_valid(&prod(&lb, &lb), w, h, &k);
    let ab = filter_valid(&prod(&la, &lb), w, h, &k);
    let c1 = (K1 * RANGE).powi(2);
    let c2 = (K2 * RANGE).powi(2);
    let map = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect();
    Ok((map, w - WINDOW + 1, h - WINDOW + 1))
}

/// Mean SSIM on Rec. 601 luma of the 8-bit images.
pub fn ssim(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    let (map, _, _) = ssim_map(a, b)?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}

/// Per-pixel `1 - local SSIM` clamped to `[0, 1]`. Border pixels reuse the
/// nearest full window.
pub fn error_map(a: &ColorImage, b: &ColorImage) -> Result<DepthImage> {
    let (map, mw, mh) = ssim_map(a, b)?;
    let (w, h) = a.dims();
    let r = WINDOW / 2;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let my = y.clamp(r, r + mh - 1) - r;
        for x in 0..w {
            let mx = x.clamp(r, r + mw - 1) - r;
            out.push((1.0 - map[my * mw + mx]).clamp(0.0, 1.0) as f32);
        }
    }
    DepthImage::from_values(w, h, out)
}

/// PSNR in dB, or a distinguished value for identical images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Identical,
}

impl Psnr {
    /// Finite value, with identical images mapped to `cap`.
    pub fn value_or(self, cap: f64) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Identical => cap,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.3}"),
            Psnr::Identical => f.write_str("identical"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => s.serialize_f64(*v),
            Psnr::Identical => s.serialize_str("identical"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Psnr::Finite(v)),
            Raw::Str(s) if s == "identical" => Ok(Psnr::Identical),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected PSNR value {s:?}"))),
        }
    }
}

/// `10 log10(255² / MSE)` over all channels of the 8-bit images.
pub fn psnr(a: &ColorImage, b: &ColorImage) -> Result<Psnr> {
    check_dims(a, b)?;
    let (pa, pb) = (a.to_rgb8(), b.to_rgb8());
    let sse: u64 = pa
        .iter()
        .zip(&pb)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(Psnr::Identical);
    }
    let mse = sse as f64 / pa.len() as f64;
    Ok(Psnr::Finite(10.0 * (RANGE * RANGE / mse).log10()))
}

pub fn disocclusion_fraction(imb: &SourceBuffer) -> f64 {
    imb.disoccluded_count() as f64 / (imb.width() * imb.height()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ssim: f64,
    pub psnr_db: Psnr,
    pub disocclusion_fraction: f64,
    pub triangle_ops: u64,
    pub pixel_ops: u64,
    pub wall_time_s: f64,
}
