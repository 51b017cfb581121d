//! Spherical mean Radon transform with detectors on the unit circle.
//!
//! `M u(θ(φ), t) = ∫_{S¹} u(θ(φ) + tζ) dζ` with `θ(φ) = (cos φ, sin φ)`.
//! The integral is over the unit circle measure, so a constant function
//! `c` whose support contains the whole circle maps to `2πc` (no `1/2π`
//! mean normalization). Each circle is sampled at roughly one pixel of arc
//! length; every sample carries the weight `2π/K` for `K` samples.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bilinear_taps, reduce_in_order, DataKind, DataShape, DataVolume, ForwardOperator, ADJOINT_CHUNK};
use crate::error::{Error, Result};
use crate::image::{Image, ImageShape};

const MIN_CIRCLE_SAMPLES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalGeometry {
    /// Detector angles φ in `[0, 2π)`.
    pub center_angles: Vec<f64>,
    /// Radii in `(0, 2]`.
    pub radii: Vec<f64>,
}

impl SphericalGeometry {
    pub fn new(center_angles: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let g = Self {
            center_angles,
            radii,
        };
        g.validate()?;
        Ok(g)
    }

    /// `n_angles` equispaced detectors and radii `2(j + 1)/n_radii`.
    pub fn uniform(n_angles: usize, n_radii: usize) -> Result<Self> {
        if n_angles == 0 || n_radii == 0 {
            return Err(Error::invalid("need at least one angle and one radius"));
        }
        let center_angles = (0..n_angles).map(|k| TAU * k as f64 / n_angles as f64).collect();
        let radii = (0..n_radii).map(|j| 2.0 * (j + 1) as f64 / n_radii as f64).collect();
        Self::new(center_angles, radii)
    }

    pub fn validate(&self) -> Result<()> {
        if self.center_angles.is_empty() || self.radii.is_empty() {
            return Err(Error::invalid("need at least one angle and one radius"));
        }
        if self
            .center_angles
            .iter()
            .any(|a| !a.is_finite() || *a < 0.0 || *a >= TAU)
        {
            return Err(Error::invalid("center angles must lie in [0, 2π)"));
        }
        if self.radii.iter().any(|t| !(t.is_finite() && *t > 0.0 && *t <= 2.0)) {
            return Err(Error::invalid("radii must lie in (0, 2]"));
        }
        Ok(())
    }

    pub fn data_shape(&self) -> DataShape {
        DataShape {
            kind: DataKind::Spherical,
            rows: self.center_angles.len(),
            cols: self.radii.len(),
            channels: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SphericalMeanTransform {
    geometry: SphericalGeometry,
    shape: ImageShape,
    // unit-circle sample directions per radius
    circles: Vec<Vec<(f64, f64)>>,
}

impl SphericalMeanTransform {
    pub fn new(geometry: SphericalGeometry, shape: ImageShape) -> Result<Self> {
        geometry.validate()?;
        if shape.channels != 1 {
            return Err(Error::invalid("the spherical mean transform acts on single-channel images"));
        }
        let (hx, hy) = shape.pitch();
        let h = hx.min(hy);
        let circles = geometry
            .radii
            .iter()
            .map(|t| {
                let k = ((TAU * t / h).ceil() as usize).max(MIN_CIRCLE_SAMPLES);
                (0..k)
                    .map(|i| {
                        let a = TAU * i as f64 / k as f64;
                        (a.cos(), a.sin())
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            geometry,
            shape,
            circles,
        })
    }

    pub fn geometry(&self) -> &SphericalGeometry {
        &self.geometry
    }

    /// Number of quadrature samples on the circle of radius index `j`.
    pub fn circle_samples(&self, j: usize) -> usize {
        self.circles[j].len()
    }

    #[inline]
    fn walk_circle(&self, angle: usize, radius: usize, mut tap: impl FnMut(usize, f64)) {
        let phi = self.geometry.center_angles[angle];
        let (cx, cy) = (phi.cos(), phi.sin());
        let t = self.geometry.radii[radius];
        let circle = &self.circles[radius];
        let weight = TAU / circle.len() as f64;
        let (w, h) = (self.shape.width, self.shape.height);
        for &(zx, zy) in circle {
            let (px, py) = (cx + t * zx, cy + t * zy);
            if px.abs() > 1.0 + 1e-12 || py.abs() > 1.0 + 1e-12 {
                continue;
            }
            let (fx, fy) = self.shape.to_pixel_coords(px, py);
            bilinear_taps(w, h, fx, fy, |p, wt| tap(p, wt * weight));
        }
    }
}

impl ForwardOperator for SphericalMeanTransform {
    fn domain(&self) -> ImageShape {
        self.shape
    }

    fn range(&self) -> DataShape {
        self.geometry.data_shape()
    }

    fn apply(&self, u: &Image) -> Result<DataVolume> {
        u.check_shape(self.shape, "spherical mean")?;
        let pixels = u.data();
        let n_radii = self.geometry.radii.len();
        let rows: Vec<Vec<f64>> = (0..self.geometry.center_angles.len())
            .into_par_iter()
            .map(|a| {
                (0..n_radii)
                    .map(|j| {
                        let mut acc = 0.0;
                        self.walk_circle(a, j, |p, wt| acc += wt * pixels[p]);
                        acc
                    })
                    .collect()
            })
            .collect();
        DataVolume::from_vec(self.range(), rows.concat())
    }

    fn adjoint(&self, f: &DataVolume) -> Result<Image> {
        f.check_shape(self.range(), "spherical mean adjoint")?;
        let len = self.shape.len();
        let angles: Vec<usize> = (0..self.geometry.center_angles.len()).collect();
        let parts: Vec<Vec<f64>> = angles
            .par_chunks(ADJOINT_CHUNK)
            .map(|chunk| {
                let mut img = vec![0.0; len];
                for &a in chunk {
                    for (j, &value) in f.row(a).iter().enumerate() {
                        if value != 0.0 {
                            self.walk_circle(a, j, |p, wt| img[p] += wt * value);
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
    fn radii_must_be_in_range() {
        assert!(SphericalGeometry::new(vec![0.0], vec![0.0]).is_err());
        assert!(SphericalGeometry::new(vec![0.0], vec![2.5]).is_err());
        assert!(SphericalGeometry::new(vec![7.0], vec![1.0]).is_err());
        let g = SphericalGeometry::uniform(7, 8).unwrap();
        assert_eq!(g.radii[7], 2.0);
    }

    #[test]
    fn full_circle_of_ones_has_measure_two_pi() {
        let shape = ImageShape::new(64, 64, 1);
        let phi = std::f64::consts::FRAC_PI_4;
        let g = SphericalGeometry::new(vec![phi], vec![0.2]).unwrap();
        let m = SphericalMeanTransform::new(g, shape).unwrap();
        let f = m.apply(&Image::filled(shape, 1.0)).unwrap();
        assert!((f.data()[0] - TAU).abs() < 1e-12);
    }

    #[test]
    fn zero_image_gives_zero_data() {
        let shape = ImageShape::new(16, 16, 1);
        let m = SphericalMeanTransform::new(SphericalGeometry::uniform(3, 10).unwrap(), shape).unwrap();
        assert!(m.apply(&Image::zeros(shape)).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
