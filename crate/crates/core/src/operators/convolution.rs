//! Periodic convolution with separable blur kernels.
//!
//! Each channel is convolved independently. Kernels are separable,
//! `k(x, y) = kx(x)·ky(y)`; the Gaussian uses `exp(−d²/2σ²)` taps truncated
//! at `⌈3σ⌉` and the motion blur is a horizontal moving average.

use serde::{Deserialize, Serialize};

use super::{DataShape, DataVolume, ForwardOperator};
use crate::error::{Error, Result};
use crate::image::{Image, ImageShape};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    /// Isotropic Gaussian, σ in pixels.
    Gaussian { sigma: f64 },
    /// Horizontal moving average over `length` pixels.
    Motion { length: usize },
    /// The unit impulse.
    Delta,
}

/// 1D taps `(offset, weight)` along each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionKernel {
    kind: KernelKind,
    x_taps: Vec<(i64, f64)>,
    y_taps: Vec<(i64, f64)>,
}

impl ConvolutionKernel {
    pub fn new(kind: KernelKind) -> Result<Self> {
        let (x_taps, y_taps) = match kind {
            KernelKind::Gaussian { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::invalid(format!("gaussian sigma must be positive, got {sigma}")));
                }
                let taps = gaussian_taps(sigma);
                (taps.clone(), taps)
            }
            KernelKind::Motion { length } => {
                if length == 0 {
                    return Err(Error::invalid("motion blur length must be positive"));
                }
                let start = -((length as i64 - 1) / 2);
                let w = 1.0 / length as f64;
                ((0..length as i64).map(|i| (start + i, w)).collect(), vec![(0, 1.0)])
            }
            KernelKind::Delta => (vec![(0, 1.0)], vec![(0, 1.0)]),
        };
        Ok(Self {
            kind,
            x_taps,
            y_taps,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn x_taps(&self) -> &[(i64, f64)] {
        &self.x_taps
    }

    pub fn y_taps(&self) -> &[(i64, f64)] {
        &self.y_taps
    }

    /// Kernel footprint `(width, height)` in pixels.
    pub fn extent(&self) -> (usize, usize) {
        let span = |t: &[(i64, f64)]| (t[t.len() - 1].0 - t[0].0 + 1) as usize;
        (span(&self.x_taps), span(&self.y_taps))
    }

    pub fn sum(&self) -> f64 {
        let sx: f64 = self.x_taps.iter().map(|t| t.1).sum();
        let sy: f64 = self.y_taps.iter().map(|t| t.1).sum();
        sx * sy
    }

    /// The kernel wrapped onto a `width × height` periodic grid (tap at
    /// offset `(dx, dy)` lands on pixel `(dx mod width, dy mod height)`).
    pub fn periodic_image(&self, width: usize, height: usize) -> Vec<f64> {
        let mut out = vec![0.0; width * height];
        for &(dy, wy) in &self.y_taps {
            let y = dy.rem_euclid(height as i64) as usize;
            for &(dx, wx) in &self.x_taps {
                let x = dx.rem_euclid(width as i64) as usize;
                out[y * width + x] += wx * wy;
            }
        }
        out
    }
}

fn gaussian_taps(sigma: f64) -> Vec<(i64, f64)> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<(i64, f64)> = (-radius..=radius)
        .map(|d| (d, (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()))
        .collect();
    let total: f64 = raw.iter().map(|t| t.1).sum();
    raw.into_iter().map(|(d, w)| (d, w / total)).collect()
}

#[derive(Clone, Debug)]
pub struct Convolution {
    kernel: ConvolutionKernel,
    shape: ImageShape,
}

impl Convolution {
    pub fn new(kernel: ConvolutionKernel, shape: ImageShape) -> Result<Self> {
        let (kw, kh) = kernel.extent();
        if kw > shape.width || kh > shape.height {
            return Err(Error::invalid(format!(
                "kernel footprint {kw}x{kh} exceeds image {}x{}",
                shape.width, shape.height
            )));
        }
        Ok(Self { kernel, shape })
    }

    pub fn kernel(&self) -> &ConvolutionKernel {
        &self.kernel
    }

    /// `sign = 1` convolves, `sign = -1` correlates (the transpose).
    fn filter(&self, input: &[f64], sign: i64) -> Vec<f64> {
        let ImageShape {
            width: w,
            height: h,
            channels: c,
        } = self.shape;
        let (wi, hi) = (w as i64, h as i64);
        let mut tmp = vec![0.0; input.len()];
        for y in 0..h {
            let row = &input[y * w * c..(y + 1) * w * c];
            let out = &mut tmp[y * w * c..(y + 1) * w * c];
            for x in 0..w {
                for &(d, wt) in &self.kernel.x_taps {
                    let sx = (x as i64 - sign * d).rem_euclid(wi) as usize;
                    for k in 0..c {
                        out[x * c + k] += wt * row[sx * c + k];
                    }
                }
            }
        }
        let mut out = vec![0.0; input.len()];
        for y in 0..h {
            for &(d, wt) in &self.kernel.y_taps {
                let sy = (y as i64 - sign * d).rem_euclid(hi) as usize;
                let src = &tmp[sy * w * c..(sy + 1) * w * c];
                let dst = &mut out[y * w * c..(y + 1) * w * c];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += wt * s;
                }
            }
        }
        out
    }
}

impl ForwardOperator for Convolution {
    fn domain(&self) -> ImageShape {
        self.shape
    }

    fn range(&self) -> DataShape {
        DataShape::image(self.shape)
    }

    fn apply(&self, u: &Image) -> Result<DataVolume> {
        u.check_shape(self.shape, "convolution")?;
        DataVolume::from_vec(self.range(), self.filter(u.data(), 1))
    }

    fn adjoint(&self, f: &DataVolume) -> Result<Image> {
        f.check_shape(self.range(), "convolution adjoint")?;
        Image::from_vec(self.shape, self.filter(f.data(), -1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_are_normalized() {
        for kind in [
            KernelKind::Gaussian { sigma: 1.7 },
            KernelKind::Motion { length: 15 },
            KernelKind::Motion { length: 4 },
        ] {
            let k = ConvolutionKernel::new(kind).unwrap();
            assert!((k.sum() - 1.0).abs() < 1e-12);
            assert!(k.x_taps().iter().chain(k.y_taps()).all(|t| t.1 >= 0.0));
        }
        assert_eq!(ConvolutionKernel::new(KernelKind::Gaussian { sigma: 1.0 }).unwrap().extent(), (7, 7));
        assert_eq!(ConvolutionKernel::new(KernelKind::Motion { length: 15 }).unwrap().extent(), (15, 1));
    }

    #[test]
    fn delta_is_identity_and_constants_are_preserved() {
        let shape = ImageShape::new(9, 8, 2);
        let u = Image::from_vec(shape, (0..shape.len()).map(|i| (i as f64).sin()).collect()).unwrap();
        let id = Convolution::new(ConvolutionKernel::new(KernelKind::Delta).unwrap(), shape).unwrap();
        assert_eq!(id.apply(&u).unwrap().data(), u.data());

        let blur = Convolution::new(ConvolutionKernel::new(KernelKind::Gaussian { sigma: 0.8 }).unwrap(), shape).unwrap();
        let out = blur.apply(&Image::filled(shape, 3.0)).unwrap();
        assert!(out.data().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let k = ConvolutionKernel::new(KernelKind::Motion { length: 15 }).unwrap();
        assert!(Convolution::new(k, ImageShape::new(8, 8, 1)).is_err());
    }

    #[test]
    fn motion_blur_shifts_periodically() {
        let shape = ImageShape::new(5, 1, 1);
        let k = ConvolutionKernel::new(KernelKind::Motion { length: 3 }).unwrap();
        let op = Convolution::new(k, shape).unwrap();
        let u = Image::from_vec(shape, vec![3.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let f = op.apply(&u).unwrap();
        assert_eq!(f.data(), &[1.0, 1.0, 0.0, 0.0, 1.0]);
    }
}
