//! Forward operators and their exact adjoints.
//!
//! Every operator maps an [`Image`] to a [`DataVolume`]; `adjoint` is the
//! algebraic transpose of `apply` with respect to the plain Euclidean inner
//! products on both sides.

mod convolution;
mod radon;
mod spherical;

pub use convolution::{Convolution, ConvolutionKernel, KernelKind};
pub use radon::{RadonGeometry, RadonTransform};
pub use spherical::{SphericalGeometry, SphericalMeanTransform};

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::image::{axpy, dot, norm, Image, ImageShape};

/// Angles processed by one parallel task in scatter-style adjoints. Fixed so
/// the reduction order does not depend on the thread count.
pub(crate) const ADJOINT_CHUNK: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Radon,
    Spherical,
    Image,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataShape {
    pub kind: DataKind,
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
}

impl DataShape {
    pub fn len(&self) -> usize {
        self.rows * self.cols * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(shape: ImageShape) -> Self {
        Self {
            kind: DataKind::Image,
            rows: shape.height,
            cols: shape.width,
            channels: shape.channels,
        }
    }
}

/// Element of the data space: a sinogram, spherical means, or an
/// image-shaped observation. Rows are angles (or image rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataVolume {
    shape: DataShape,
    data: Vec<f64>,
}

impl DataVolume {
    pub fn zeros(shape: DataShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn from_vec(shape: DataShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::shape(format!(
                "data volume has {} samples, shape {:?} needs {}",
                data.len(),
                shape,
                shape.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { shape, data })
    }

    pub fn from_image(image: Image) -> Self {
        let shape = DataShape::image(image.shape());
        Self {
            shape,
            data: image.into_vec(),
        }
    }

    /// Reinterprets image-shaped data as an image.
    pub fn to_image(&self) -> Result<Image> {
        if self.shape.kind != DataKind::Image {
            return Err(Error::shape("only image-shaped data converts to an image"));
        }
        Image::from_vec(
            ImageShape::new(self.shape.cols, self.shape.rows, self.shape.channels),
            self.data.clone(),
        )
    }

    pub fn shape(&self) -> DataShape {
        self.shape
    }

    pub fn kind(&self) -> DataKind {
        self.shape.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.shape.cols * self.shape.channels;
        &self.data[r * w..(r + 1) * w]
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

    pub fn dot(&self, other: &DataVolume) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn axpy(&mut self, alpha: f64, other: &DataVolume) {
        axpy(&mut self.data, alpha, &other.data);
    }

    /// `self − other`
    pub fn sub(&self, other: &DataVolume) -> DataVolume {
        DataVolume {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub(crate) fn check_shape(&self, expected: DataShape, what: &str) -> Result<()> {
        if self.shape != expected {
            return Err(Error::shape(format!(
                "{what}: expected data {:?}, got {:?}",
                expected, self.shape
            )));
        }
        Ok(())
    }
}

/// A linear map from images to data with its transpose.
pub trait ForwardOperator: Send + Sync {
    fn domain(&self) -> ImageShape;
    fn range(&self) -> DataShape;
    fn apply(&self, u: &Image) -> Result<DataVolume>;
    fn adjoint(&self, f: &DataVolume) -> Result<Image>;

    /// `A*A u`
    fn normal(&self, u: &Image) -> Result<Image> {
        self.adjoint(&self.apply(u)?)
    }
}

/// The identity on image space.
#[derive(Clone, Debug)]
pub struct Identity {
    shape: ImageShape,
}

impl Identity {
    pub fn new(shape: ImageShape) -> Self {
        Self { shape }
    }
}

impl ForwardOperator for Identity {
    fn domain(&self) -> ImageShape {
        self.shape
    }

    fn range(&self) -> DataShape {
        DataShape::image(self.shape)
    }

    fn apply(&self, u: &Image) -> Result<DataVolume> {
        u.check_shape(self.shape, "identity")?;
        Ok(DataVolume::from_image(u.clone()))
    }

    fn adjoint(&self, f: &DataVolume) -> Result<Image> {
        f.check_shape(self.range(), "identity adjoint")?;
        f.to_image()
    }
}

/// An explicit `rows × cols` matrix acting on `cols`-pixel single-row images.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        check_finite(&entries)?;
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

impl ForwardOperator for DenseMatrix {
    fn domain(&self) -> ImageShape {
        ImageShape::new(self.cols, 1, 1)
    }

    fn range(&self) -> DataShape {
        DataShape {
            kind: DataKind::Image,
            rows: 1,
            cols: self.rows,
            channels: 1,
        }
    }

    fn apply(&self, u: &Image) -> Result<DataVolume> {
        u.check_shape(self.domain(), "dense matrix")?;
        let data = self
            .entries
            .chunks(self.cols)
            .map(|row| dot(row, u.data()))
            .collect();
        DataVolume::from_vec(self.range(), data)
    }

    fn adjoint(&self, f: &DataVolume) -> Result<Image> {
        f.check_shape(self.range(), "dense matrix adjoint")?;
        let mut out = vec![0.0; self.cols];
        for (row, &fi) in self.entries.chunks(self.cols).zip(f.data()) {
            axpy(&mut out, fi, row);
        }
        Image::from_vec(self.domain(), out)
    }
}

/// Accumulates `weight` spread bilinearly at continuous pixel coordinates
/// `(fx, fy)`; taps outside the grid are dropped. The callback receives the
/// pixel index and the tap weight.
#[inline]
pub(crate) fn bilinear_taps(
    width: usize,
    height: usize,
    fx: f64,
    fy: f64,
    mut tap: impl FnMut(usize, f64),
) {
    let x0 = fx.floor();
    let y0 = fy.floor();
    let ax = fx - x0;
    let ay = fy - y0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let (w, h) = (width as i64, height as i64);
    if x0 < -1 || y0 < -1 || x0 >= w || y0 >= h {
        return;
    }
    let xs = [(x0, 1.0 - ax), (x0 + 1, ax)];
    let ys = [(y0, 1.0 - ay), (y0 + 1, ay)];
    for &(y, wy) in &ys {
        if y < 0 || y >= h || wy == 0.0 {
            continue;
        }
        for &(x, wx) in &xs {
            if x < 0 || x >= w || wx == 0.0 {
                continue;
            }
            tap((y * w + x) as usize, wx * wy);
        }
    }
}

/// Sums per-chunk images in chunk order.
pub(crate) fn reduce_in_order(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for part in parts {
        axpy(&mut out, 1.0, &part);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matrix_transpose() {
        let m = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let u = Image::from_vec(ImageShape::new(3, 1, 1), vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(m.apply(&u).unwrap().data(), &[-2.0, -2.0]);
        let f = DataVolume::from_vec(m.range(), vec![1.0, 1.0]).unwrap();
        assert_eq!(m.adjoint(&f).unwrap().data(), &[5.0, 7.0, 9.0]);
    }

    #[test]
    fn bilinear_taps_partition_unity_inside() {
        let mut total = 0.0;
        bilinear_taps(4, 4, 1.3, 2.6, |_, w| total += w);
        assert!((total - 1.0).abs() < 1e-15);
        let mut outside = 0.0;
        bilinear_taps(4, 4, -3.0, 1.0, |_, w| outside += w);
        assert_eq!(outside, 0.0);
    }
}
