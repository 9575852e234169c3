//! Row-major multi-channel rasters with values in `[0,1]`, and the paired
//! edge/corner maps that the warp operates on.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![value.clamp(0.0, 1.0); width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::shape("non-empty raster", format!("{width}x{height}x{channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::shape(
                format!("{} values", width * height * channels),
                format!("{} values", data.len()),
            ));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidLayout(format!("raster value {v} outside [0,1]")));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize, ch: usize) -> f64 {
        self.data[self.index(col, row, ch)]
    }

    /// Stores `value` clamped into `[0,1]`.
    #[inline]
    pub fn set(&mut self, col: usize, row: usize, ch: usize, value: f64) {
        let i = self.index(col, row, ch);
        self.data[i] = value.clamp(0.0, 1.0);
    }

    /// Keeps the larger of the stored and the new value.
    #[inline]
    pub fn set_max(&mut self, col: usize, row: usize, ch: usize, value: f64) {
        let i = self.index(col, row, ch);
        self.data[i] = self.data[i].max(value.clamp(0.0, 1.0));
    }

    pub fn channel(&self, ch: usize) -> Raster {
        let data = self.data.iter().skip(ch).step_by(self.channels).copied().collect();
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Sum of all values.
    pub fn mass(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Horizontal roll: output column `c` takes input column `c - shift`.
    pub fn roll_x(&self, shift: isize) -> Raster {
        let w = self.width as isize;
        let mut out = Raster::zeros(self.width, self.height, self.channels);
        for r in 0..self.height {
            for c in 0..self.width {
                let src = (c as isize - shift).rem_euclid(w) as usize;
                for ch in 0..self.channels {
                    let v = self.get(src, r, ch);
                    let i = out.index(c, r, ch);
                    out.data[i] = v;
                }
            }
        }
        out
    }

    /// Box-averages `factor × factor` blocks. Dimensions must be divisible.
    pub fn downsample(&self, factor: usize) -> Result<Raster> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::shape(
                format!("dimensions divisible by {factor}"),
                self.shape_string(),
            ));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = Raster::zeros(w, h, self.channels);
        let norm = 1.0 / (factor * factor) as f64;
        for r in 0..h {
            for c in 0..w {
                for ch in 0..self.channels {
                    let mut acc = 0.0;
                    for dr in 0..factor {
                        for dc in 0..factor {
                            acc += self.get(c * factor + dc, r * factor + dr, ch);
                        }
                    }
                    let i = out.index(c, r, ch);
                    out.data[i] = acc * norm;
                }
            }
        }
        Ok(out)
    }

    /// Separable Gaussian blur, wrapping horizontally and clamping vertically.
    pub fn gaussian_blur(&self, sigma: f64) -> Raster {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let kernel: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let ksum: f64 = kernel.iter().sum();
        let kernel: Vec<f64> = kernel.iter().map(|k| k / ksum).collect();
        let (w, h) = (self.width as isize, self.height as isize);
        let mut tmp = Raster::zeros(self.width, self.height, self.channels);
        for r in 0..self.height {
            for c in 0..self.width {
                for ch in 0..self.channels {
                    let mut acc = 0.0;
                    for (k, kv) in kernel.iter().enumerate() {
                        let cc = (c as isize + k as isize - radius).rem_euclid(w) as usize;
                        acc += kv * self.get(cc, r, ch);
                    }
                    let i = tmp.index(c, r, ch);
                    tmp.data[i] = acc;
                }
            }
        }
        let mut out = Raster::zeros(self.width, self.height, self.channels);
        for r in 0..self.height {
            for c in 0..self.width {
                for ch in 0..self.channels {
                    let mut acc = 0.0;
                    for (k, kv) in kernel.iter().enumerate() {
                        let rr = (r as isize + k as isize - radius).clamp(0, h - 1) as usize;
                        acc += kv * tmp.get(c, rr, ch);
                    }
                    let i = out.index(c, r, ch);
                    out.data[i] = acc.clamp(0.0, 1.0);
                }
            }
        }
        out
    }
}

/// RGB edge map (red wall–wall, green wall–ceiling, blue wall–floor) and the
/// grayscale corner map of one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutMaps {
    pub edge: Raster,
    pub corner: Raster,
}

pub const RED: usize = 0;
pub const GREEN: usize = 1;
pub const BLUE: usize = 2;

impl LayoutMaps {
    pub fn new(edge: Raster, corner: Raster) -> Result<Self> {
        if edge.channels() != 3 || corner.channels() != 1 {
            return Err(Error::shape(
                "3-channel edge map and 1-channel corner map",
                format!("{} and {}", edge.shape_string(), corner.shape_string()),
            ));
        }
        if edge.width() != corner.width() || edge.height() != corner.height() {
            return Err(Error::shape(edge.shape_string(), corner.shape_string()));
        }
        Ok(LayoutMaps { edge, corner })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        LayoutMaps {
            edge: Raster::zeros(width, height, 3),
            corner: Raster::zeros(width, height, 1),
        }
    }

    pub fn width(&self) -> usize {
        self.edge.width()
    }

    pub fn height(&self) -> usize {
        self.edge.height()
    }

    pub fn same_shape(&self, other: &LayoutMaps) -> bool {
        self.edge.same_shape(&other.edge) && self.corner.same_shape(&other.corner)
    }

    pub fn downsample(&self, factor: usize) -> Result<LayoutMaps> {
        Ok(LayoutMaps {
            edge: self.edge.downsample(factor)?,
            corner: self.corner.downsample(factor)?,
        })
    }

    pub fn gaussian_blur(&self, sigma: f64) -> LayoutMaps {
        LayoutMaps {
            edge: self.edge.gaussian_blur(sigma),
            corner: self.corner.gaussian_blur(sigma),
        }
    }

    pub fn roll_x(&self, shift: isize) -> LayoutMaps {
        LayoutMaps {
            edge: self.edge.roll_x(shift),
            corner: self.corner.roll_x(shift),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_values() {
        assert!(Raster::from_data(1, 1, 1, vec![1.5]).is_err());
        assert!(Raster::from_data(2, 1, 1, vec![0.5]).is_err());
        assert!(Raster::from_data(1, 1, 1, vec![0.5]).is_ok());
    }

    #[test]
    fn blur_preserves_mass_horizontally() {
        let mut r = Raster::zeros(32, 16, 1);
        r.set(0, 8, 0, 1.0);
        let b = r.gaussian_blur(2.0);
        assert!((b.mass() - 1.0).abs() < 1e-12);
        // Wrapped: the seam neighbour receives the same weight as the inner one.
        assert!((b.get(31, 8, 0) - b.get(1, 8, 0)).abs() < 1e-15);
    }

    #[test]
    fn downsample_averages_blocks() {
        let r = Raster::from_data(4, 2, 1, vec![1.0, 0.0, 0.5, 0.5, 1.0, 0.0, 0.5, 0.5]).unwrap();
        let d = r.downsample(2).unwrap();
        assert_eq!(d.data(), &[0.5, 0.5]);
        assert!(r.downsample(3).is_err());
    }

    #[test]
    fn roll_wraps() {
        let r = Raster::from_data(3, 1, 1, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(r.roll_x(1).data(), &[0.3, 0.1, 0.2]);
        assert_eq!(r.roll_x(-4).data(), &[0.2, 0.3, 0.1]);
    }
}
