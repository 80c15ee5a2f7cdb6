//! Color and depth images.

use crate::error::{Error, Result};

/// Linear RGB color with channels in `[0, 1]`.
pub type Rgb = [f32; 3];

pub const BLACK: Rgb = [0.0, 0.0, 0.0];

/// RGB image stored as linear floats; 8-bit at the I/O boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Result<Self> {
        check_dims(width, height)?;
        Ok(ColorImage {
            width,
            height,
            data: vec![fill; width * height],
        })
    }

    pub fn from_pixels(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(ColorImage {
            width,
            height,
            data,
        })
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::invalid("RGB8 buffer has the wrong length"));
        }
        let data = bytes
            .chunks_exact(3)
            .map(|p| [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0])
            .collect();
        Self::from_pixels(width, height, data)
    }

    /// Quantizes to 8 bits, rounding half away from zero.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|p| p.iter().map(|&c| quantize(c)))
            .collect()
    }

    /// Round-trips through 8 bits so the float data equals what a PNG holds.
    pub fn quantized(&self) -> ColorImage {
        let data = self
            .data
            .iter()
            .map(|p| p.map(|c| quantize(c) as f32 / 255.0))
            .collect();
        ColorImage {
            width: self.width,
            height: self.height,
            data,
        }
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

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.data[y * self.width + x] = c;
    }

    pub fn row(&self, y: usize) -> &[Rgb] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Pixel containing normalized coordinate `u` in row `y`, clamped.
    pub fn sample_nearest(&self, u: f64, y: usize) -> Rgb {
        let x = column_of(u, self.width);
        self.get(x, y)
    }

    /// Linear interpolation between horizontal neighbors around `u`; edges
    /// clamp.
    pub fn sample_linear(&self, u: f64, y: usize) -> Rgb {
        let pos = u * self.width as f64 - 0.5;
        let mut x0 = pos.floor();
        let mut t = (pos - x0) as f32;
        // snap sub-1e-4 px offsets left by f32 storage of pixel centers
        if t < 1e-4 {
            t = 0.0;
        } else if t > 1.0 - 1e-4 {
            x0 += 1.0;
            t = 0.0;
        }
        let last = self.width as isize - 1;
        let i0 = (x0 as isize).clamp(0, last) as usize;
        let i1 = (x0 as isize + 1).clamp(0, last) as usize;
        let (a, b) = (self.get(i0, y), self.get(i1, y));
        if t == 0.0 {
            return a;
        }
        [
            a[0] + (b[0] - a[0]) * t,
            a[1] + (b[1] - a[1]) * t,
            a[2] + (b[2] - a[2]) * t,
        ]
    }

    /// Rec. 601 luma of each pixel, in 8-bit units.
    pub fn luma(&self) -> Vec<f64> {
        self.to_rgb8()
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }
}

#[inline]
pub fn quantize(c: f32) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Column index containing normalized coordinate `u`, clamped to the row.
#[inline]
pub fn column_of(u: f64, width: usize) -> usize {
    let x = (u * width as f64).floor();
    if x <= 0.0 {
        0
    } else {
        (x as usize).min(width - 1)
    }
}

/// Single-channel image with values in `[0, 1]`. As a depth map, larger
/// values are closer to the camera and 0 means nothing was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, fill: f32) -> Result<Self> {
        Self::from_values(width, height, vec![fill; width * height])
    }

    pub fn from_values(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("depth value {bad} outside [0, 1]")));
        }
        Ok(DepthImage {
            width,
            height,
            data,
        })
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

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// 16-bit grayscale for viewing.
    pub fn to_gray16(&self) -> Vec<u16> {
        self.data
            .iter()
            .map(|&v| (v * 65535.0).round().clamp(0.0, 65535.0) as u16)
            .collect()
    }

    pub fn to_gray8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("image dimensions must be >= 1"));
    }
    width
        .checked_mul(height)
        .ok_or_else(|| Error::invalid("image dimensions overflow"))?;
    Ok(())
}
