//! Image file formats: PFM for float buffers, PNG for color and depth
//! previews.

use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma, RgbImage};

use crate::error::{Error, Result};
use crate::images::{ColorImage, DepthImage};
use crate::math::Eye;
use crate::reproject::{SourceBuffer, SourceTexel};

/// Decoded PFM data with rows stored top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    /// 1 (`Pf`) or 3 (`PF`).
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Largest decoded payload accepted, in bytes.
pub const MAX_PFM_BYTES: usize = 1 << 31;

fn pfm_err(msg: impl Into<String>) -> Error {
    Error::parse("PFM", msg)
}

/// Reads whitespace-delimited header token starting at `*pos`.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
        if *pos - start > 64 {
            return Err(pfm_err("header token too long"));
        }
    }
    if start == *pos {
        return Err(pfm_err("truncated header"));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| pfm_err("header is not ASCII"))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Pfm> {
    let mut pos = 0;
    let channels = match header_token(bytes, &mut pos)? {
        "PF" => 3,
        "Pf" => 1,
        m => return Err(pfm_err(format!("bad magic {m:?}"))),
    };
    let width: usize = header_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| pfm_err("bad width"))?;
    let height: usize = header_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| pfm_err("bad height"))?;
    let scale: f32 = header_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| pfm_err("bad scale"))?;
    if width == 0 || height == 0 {
        return Err(pfm_err("zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(pfm_err("scale must be nonzero and finite"));
    }
    // exactly one whitespace byte separates header and payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(pfm_err("missing payload separator"));
    }
    pos += 1;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| pfm_err("dimensions overflow"))?;
    let len = count.checked_mul(4).ok_or_else(|| pfm_err("dimensions overflow"))?;
    if len > MAX_PFM_BYTES {
        return Err(pfm_err("image too large"));
    }
    let payload = &bytes[pos..];
    if payload.len() != len {
        return Err(pfm_err(format!("expected {len} payload bytes, found {}", payload.len())));
    }
    let little = scale < 0.0;
    let row_len = width * channels;
    let mut data = vec![0.0f32; count];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // file rows run bottom to top
        let (file_row, col) = (i / row_len, i % row_len);
        data[(height - 1 - file_row) * row_len + col] = v;
    }
    Ok(Pfm {
        width,
        height,
        channels,
        data,
    })
}

/// Little-endian PFM encoding.
pub fn encode_pfm(pfm: &Pfm) -> Result<Vec<u8>> {
    let magic = match pfm.channels {
        1 => "Pf",
        3 => "PF",
        n => return Err(Error::invalid(format!("PFM supports 1 or 3 channels, not {n}"))),
    };
    let row_len = pfm.width * pfm.channels;
    if pfm.data.len() != row_len * pfm.height {
        return Err(Error::invalid("PFM data length does not match dimensions"));
    }
    let mut out = format!("{magic}\n{} {}\n-1.0\n", pfm.width, pfm.height).into_bytes();
    out.reserve(pfm.data.len() * 4);
    for row in pfm.data.chunks_exact(row_len).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn depth_to_pfm(depth: &DepthImage) -> Pfm {
    Pfm {
        width: depth.width(),
        height: depth.height(),
        channels: 1,
        data: depth.values().to_vec(),
    }
}

pub fn depth_from_pfm(bytes: &[u8]) -> Result<DepthImage> {
    let pfm = decode_pfm(bytes)?;
    if pfm.channels != 1 {
        return Err(pfm_err("depth needs a single-channel PFM"));
    }
    DepthImage::from_values(pfm.width, pfm.height, pfm.data)
}

/// SourceBuffer as a 3-channel float image with channels `(a, b, c)`.
pub fn sourcebuffer_to_pfm(imb: &SourceBuffer) -> Pfm {
    Pfm {
        width: imb.width(),
        height: imb.height(),
        channels: 3,
        data: imb.texels().iter().flat_map(|t| [t.a, t.b, t.c]).collect(),
    }
}

pub fn sourcebuffer_from_pfm(bytes: &[u8], dominant: Eye) -> Result<SourceBuffer> {
    let pfm = decode_pfm(bytes)?;
    if pfm.channels != 3 {
        return Err(pfm_err("SourceBuffer needs a 3-channel PFM"));
    }
    let texels = pfm
        .data
        .chunks_exact(3)
        .map(|p| SourceTexel {
            a: p[0],
            b: p[1],
            c: p[2],
        })
        .collect();
    SourceBuffer::from_texels(pfm.width, pfm.height, dominant, texels)
}

pub fn write_pfm(path: impl AsRef<Path>, pfm: &Pfm) -> Result<()> {
    std::fs::write(path, encode_pfm(pfm)?)?;
    Ok(())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Pfm> {
    decode_pfm(&std::fs::read(path)?)
}

pub fn write_png(path: impl AsRef<Path>, img: &ColorImage) -> Result<()> {
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, img.to_rgb8())
        .ok_or_else(|| Error::invalid("image too large for PNG"))?;
    buf.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

pub fn read_png(path: impl AsRef<Path>) -> Result<ColorImage> {
    let img = image::open(path)?.to_rgb8();
    ColorImage::from_rgb8(img.width() as usize, img.height() as usize, img.as_raw())
}

/// 16-bit grayscale depth preview.
pub fn write_depth_png16(path: impl AsRef<Path>, depth: &DepthImage) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, depth.to_gray16())
            .ok_or_else(|| Error::invalid("image too large for PNG"))?;
    buf.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

/// 8-bit grayscale, used for error maps.
pub fn write_gray_png(path: impl AsRef<Path>, img: &DepthImage) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.to_gray8())
            .ok_or_else(|| Error::invalid("image too large for PNG"))?;
    buf.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}
