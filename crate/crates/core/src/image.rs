//! Multi-channel image container shared by every module.
//!
//! Pixels are stored row-major with channels interleaved, so sample
//! `(x, y, c)` lives at `(y * width + x) * channels + c`. The physical
//! domain is the square `[-1, 1]²` with row 0 at the top (`y = +1`).

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageShape {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
        }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel pitch along x and y in physical units.
    pub fn pitch(&self) -> (f64, f64) {
        (2.0 / self.width as f64, 2.0 / self.height as f64)
    }

    /// Physical coordinates of the center of pixel `(x, y)`.
    pub fn pixel_center(&self, x: usize, y: usize) -> (f64, f64) {
        let (hx, hy) = self.pitch();
        (-1.0 + hx * (x as f64 + 0.5), 1.0 - hy * (y as f64 + 0.5))
    }

    /// Continuous pixel coordinates of a physical point (inverse of `pixel_center`).
    pub fn to_pixel_coords(&self, px: f64, py: f64) -> (f64, f64) {
        let (hx, hy) = self.pitch();
        ((px + 1.0) / hx - 0.5, (1.0 - py) / hy - 0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    shape: ImageShape,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(shape: ImageShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn filled(shape: ImageShape, value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: ImageShape, data: Vec<f64>) -> Result<Self> {
        if shape.width == 0 || shape.height == 0 || shape.channels == 0 {
            return Err(Error::invalid(format!("degenerate image shape {shape:?}")));
        }
        if data.len() != shape.len() {
            return Err(Error::shape(format!(
                "image data has {} samples, shape {:?} needs {}",
                data.len(),
                shape,
                shape.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { shape, data })
    }

    /// Builds a single-channel image by evaluating `f` at every pixel center.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let shape = ImageShape::new(width, height, 1);
        let mut data = Vec::with_capacity(shape.len());
        for y in 0..height {
            for x in 0..width {
                let (px, py) = shape.pixel_center(x, y);
                data.push(f(px, py));
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.shape.width + x) * self.shape.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        let idx = (y * self.shape.width + x) * self.shape.channels + c;
        self.data[idx] = value;
    }

    /// All channel values of pixel index `p = y * width + x`.
    pub fn pixel(&self, p: usize) -> &[f64] {
        let c = self.shape.channels;
        &self.data[p * c..(p + 1) * c]
    }

    pub fn pixel_mut(&mut self, p: usize) -> &mut [f64] {
        let c = self.shape.channels;
        &mut self.data[p * c..(p + 1) * c]
    }

    /// Extracts channel `c` as a single-channel image.
    pub fn channel(&self, c: usize) -> Image {
        let shape = ImageShape::new(self.shape.width, self.shape.height, 1);
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.shape.channels)
            .copied()
            .collect();
        Image { shape, data }
    }

    /// Interleaves single-channel images into one multi-channel image.
    pub fn stack(channels: &[Image]) -> Result<Image> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("cannot stack zero channels"))?;
        let (w, h) = (first.width(), first.height());
        if channels
            .iter()
            .any(|im| im.width() != w || im.height() != h || im.channels() != 1)
        {
            return Err(Error::shape("stacked channels must share a 1-channel shape"));
        }
        let shape = ImageShape::new(w, h, channels.len());
        let mut data = Vec::with_capacity(shape.len());
        for p in 0..w * h {
            for im in channels {
                data.push(im.data[p]);
            }
        }
        Ok(Image { shape, data })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Image) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn distance(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Image) {
        axpy(&mut self.data, alpha, &other.data);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        debug_assert_eq!(self.shape, other.shape);
        Image {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub(crate) fn check_shape(&self, expected: ImageShape, what: &str) -> Result<()> {
        if self.shape != expected {
            return Err(Error::shape(format!(
                "{what}: expected image {:?}, got {:?}",
                expected, self.shape
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_coordinates_round_trip() {
        let shape = ImageShape::new(8, 4, 1);
        let (px, py) = shape.pixel_center(3, 2);
        let (fx, fy) = shape.to_pixel_coords(px, py);
        assert!((fx - 3.0).abs() < 1e-12 && (fy - 2.0).abs() < 1e-12);
        let (x0, y0) = shape.pixel_center(0, 0);
        assert!((x0 + 0.875).abs() < 1e-12 && (y0 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_buffers() {
        let shape = ImageShape::new(2, 2, 1);
        assert!(Image::from_vec(shape, vec![0.0; 3]).is_err());
        assert!(matches!(
            Image::from_vec(shape, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn stack_and_split_channels() {
        let a = Image::from_fn(3, 2, |x, _| x);
        let b = Image::from_fn(3, 2, |_, y| y);
        let s = Image::stack(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.channels(), 2);
        assert_eq!(s.channel(0), a);
        assert_eq!(s.channel(1), b);
    }
}
