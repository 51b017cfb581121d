//! Ray-driven discrete Radon transform.
//!
//! `R u(θ, s)` integrates `u` along the line `{sθ + tθ⊥}` with samples one
//! pixel apart in `t`; each sample reads the image by bilinear
//! interpolation and carries the physical step length as quadrature weight.
//! The adjoint scatters with the same weights.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bilinear_taps, reduce_in_order, DataKind, DataShape, DataVolume, ForwardOperator, ADJOINT_CHUNK};
use crate::error::{Error, Result};
use crate::image::{Image, ImageShape};

/// Projection angles in `[0, π)` and a uniform detector grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonGeometry {
    pub angles: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl RadonGeometry {
    pub fn new(angles: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        let g = Self { angles, offsets };
        g.validate()?;
        Ok(g)
    }

    /// `n_angles` equispaced angles `kπ/n` and an odd number of detectors,
    /// one pixel apart, covering the diagonal of `[-1, 1]²`.
    pub fn for_image(shape: ImageShape, n_angles: usize) -> Result<Self> {
        let (hx, hy) = shape.pitch();
        let ds = hx.min(hy);
        let half = (SQRT_2 / ds).ceil() as usize;
        Self::uniform(n_angles, 2 * half + 1, half as f64 * ds)
    }

    /// Equispaced angles and `n_offsets` detectors spanning `[-max_offset, max_offset]`.
    pub fn uniform(n_angles: usize, n_offsets: usize, max_offset: f64) -> Result<Self> {
        if n_angles == 0 || n_offsets < 2 {
            return Err(Error::invalid("need at least one angle and two detectors"));
        }
        let angles = (0..n_angles).map(|k| PI * k as f64 / n_angles as f64).collect();
        let ds = 2.0 * max_offset / (n_offsets - 1) as f64;
        let mid = (n_offsets - 1) as f64 / 2.0;
        let offsets = (0..n_offsets).map(|j| (j as f64 - mid) * ds).collect();
        Self::new(angles, offsets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() || self.offsets.len() < 2 {
            return Err(Error::invalid("need at least one angle and two detectors"));
        }
        if self
            .angles
            .iter()
            .any(|a| !a.is_finite() || *a < 0.0 || *a >= PI)
        {
            return Err(Error::invalid("angles must lie in [0, π)"));
        }
        if self.angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("angles must be strictly increasing"));
        }
        let ds = self.detector_spacing();
        if ds.is_nan() || ds <= 0.0 {
            return Err(Error::invalid("detector offsets must be increasing"));
        }
        let n = self.offsets.len();
        for (j, s) in self.offsets.iter().enumerate() {
            let expected = self.offsets[0] + j as f64 * ds;
            if (s - expected).abs() > 1e-9 * ds || (s + self.offsets[n - 1 - j]).abs() > 1e-9 * ds {
                return Err(Error::invalid("detector offsets must be uniform and symmetric about 0"));
            }
        }
        Ok(())
    }

    pub fn detector_spacing(&self) -> f64 {
        (self.offsets[self.offsets.len() - 1] - self.offsets[0]) / (self.offsets.len() - 1) as f64
    }

    pub fn data_shape(&self) -> DataShape {
        DataShape {
            kind: DataKind::Radon,
            rows: self.angles.len(),
            cols: self.offsets.len(),
            channels: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RadonTransform {
    geometry: RadonGeometry,
    shape: ImageShape,
    step: f64,
    half_samples: i64,
    // (cos θ, sin θ) per angle
    trig: Vec<(f64, f64)>,
}

impl RadonTransform {
    pub fn new(geometry: RadonGeometry, shape: ImageShape) -> Result<Self> {
        geometry.validate()?;
        if shape.channels != 1 {
            return Err(Error::invalid("the Radon transform acts on single-channel images"));
        }
        let (hx, hy) = shape.pitch();
        let step = hx.min(hy);
        let half_samples = (SQRT_2 / step).ceil() as i64 + 1;
        let trig = geometry.angles.iter().map(|a| (a.cos(), a.sin())).collect();
        Ok(Self {
            geometry,
            shape,
            step,
            half_samples,
            trig,
        })
    }

    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    /// Quadrature weight of one sample along a ray.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Visits every interpolation tap of ray `(angle, offset)`.
    #[inline]
    fn walk_ray(&self, angle: usize, offset: usize, mut tap: impl FnMut(usize, f64)) {
        let (c, s) = self.trig[angle];
        let sd = self.geometry.offsets[offset];
        let (hx, hy) = self.shape.pitch();
        let (w, h) = (self.shape.width, self.shape.height);
        // Pixel coordinates of the foot point sθ and per-step increments along θ⊥.
        let (fx0, fy0) = self.shape.to_pixel_coords(sd * c, sd * s);
        let dfx = -s * self.step / hx;
        let dfy = -c * self.step / hy;
        let (lo, hi) = clip_range(fx0, dfx, w, self.half_samples)
            .and_then(|a| clip_range(fy0, dfy, h, self.half_samples).map(|b| (a.0.max(b.0), a.1.min(b.1))))
            .unwrap_or((1, 0));
        for m in lo..=hi {
            let t = m as f64;
            bilinear_taps(w, h, fx0 + t * dfx, fy0 + t * dfy, |p, wt| tap(p, wt * self.step));
        }
    }
}

/// Range of sample indices `m ∈ [-half, half]` for which `f0 + m·df` lies in
/// `(-1, n)`, the support of the bilinear interpolant.
fn clip_range(f0: f64, df: f64, n: usize, half: i64) -> Option<(i64, i64)> {
    let (lo_bound, hi_bound) = (-1.0, n as f64);
    if df.abs() < 1e-14 {
        return if f0 > lo_bound && f0 < hi_bound {
            Some((-half, half))
        } else {
            None
        };
    }
    let (a, b) = ((lo_bound - f0) / df, (hi_bound - f0) / df);
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    let lo = (a.floor() as i64).max(-half);
    let hi = (b.ceil() as i64).min(half);
    (lo <= hi).then_some((lo, hi))
}

impl ForwardOperator for RadonTransform {
    fn domain(&self) -> ImageShape {
        self.shape
    }

    fn range(&self) -> DataShape {
        self.geometry.data_shape()
    }

    fn apply(&self, u: &Image) -> Result<DataVolume> {
        u.check_shape(self.shape, "radon")?;
        let n_off = self.geometry.offsets.len();
        let pixels = u.data();
        let rows: Vec<Vec<f64>> = (0..self.geometry.angles.len())
            .into_par_iter()
            .map(|a| {
                (0..n_off)
                    .map(|j| {
                        let mut acc = 0.0;
                        self.walk_ray(a, j, |p, wt| acc += wt * pixels[p]);
                        acc
                    })
                    .collect()
            })
            .collect();
        DataVolume::from_vec(self.range(), rows.concat())
    }

    fn adjoint(&self, f: &DataVolume) -> Result<Image> {
        f.check_shape(self.range(), "radon adjoint")?;
        let n_angles = self.geometry.angles.len();
        let n_off = self.geometry.offsets.len();
        let len = self.shape.len();
        let parts: Vec<Vec<f64>> = (0..n_angles)
            .collect::<Vec<_>>()
            .par_chunks(ADJOINT_CHUNK)
            .map(|angles| {
                let mut img = vec![0.0; len];
                for &a in angles {
                    let row = f.row(a);
                    for (j, &value) in row.iter().enumerate().take(n_off) {
                        if value != 0.0 {
                            self.walk_ray(a, j, |p, wt| img[p] += wt * value);
                        }
                    }
                }
                img
            })
            .collect();
        Image::from_vec(self.shape, reduce_in_order(parts, len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_validation() {
        assert!(RadonGeometry::new(vec![0.0, 0.0], vec![-1.0, 0.0, 1.0]).is_err());
        assert!(RadonGeometry::new(vec![0.0, 4.0], vec![-1.0, 0.0, 1.0]).is_err());
        assert!(RadonGeometry::new(vec![0.0], vec![-1.0, 0.0, 2.0]).is_err());
        assert!(RadonGeometry::new(vec![0.0], vec![-1.0, 0.0, 1.0]).is_ok());
        let g = RadonGeometry::for_image(ImageShape::new(64, 64, 1), 7).unwrap();
        assert_eq!(g.offsets.len() % 2, 1);
        assert!(g.offsets[g.offsets.len() - 1] >= SQRT_2);
        assert!((g.detector_spacing() - 2.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_color_images() {
        let g = RadonGeometry::for_image(ImageShape::new(8, 8, 1), 2).unwrap();
        assert!(RadonTransform::new(g, ImageShape::new(8, 8, 3)).is_err());
    }

    #[test]
    fn zero_image_gives_zero_sinogram() {
        let shape = ImageShape::new(16, 16, 1);
        let r = RadonTransform::new(RadonGeometry::for_image(shape, 5).unwrap(), shape).unwrap();
        let f = r.apply(&Image::zeros(shape)).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
        let back = r.adjoint(&DataVolume::zeros(r.range())).unwrap();
        assert!(back.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_image_projects_to_chord_length() {
        let shape = ImageShape::new(64, 64, 1);
        let r = RadonTransform::new(RadonGeometry::for_image(shape, 4).unwrap(), shape).unwrap();
        let f = r.apply(&Image::filled(shape, 1.0)).unwrap();
        let centre = f.shape().cols / 2;
        // θ = 0: the ray through the origin crosses the full square (length 2).
        assert!((f.row(0)[centre] - 2.0).abs() < 2.0 * 2.0 / 64.0);
    }
}
