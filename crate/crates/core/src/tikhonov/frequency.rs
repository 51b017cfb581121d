//! Exact Tikhonov deconvolution for periodic convolutions:
//! `v̂ = (conj(K̂) f̂ + (w/2) ẑ) / (|K̂|² + w/2)` per frequency and channel.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::fft::fft2;
use crate::error::{Error, Result};
use crate::image::{Image, ImageShape};
use crate::operators::{ConvolutionKernel, DataShape, DataVolume};

pub struct FrequencySolver {
    shape: ImageShape,
    transfer: Vec<Complex64>,
}

impl FrequencySolver {
    pub fn new(kernel: &ConvolutionKernel, shape: ImageShape) -> Result<Self> {
        let (w, h) = (shape.width, shape.height);
        let (kw, kh) = kernel.extent();
        if kw > w || kh > h {
            return Err(Error::invalid(format!("kernel footprint {kw}x{kh} exceeds image {w}x{h}")));
        }
        let mut transfer: Vec<Complex64> = kernel
            .periodic_image(w, h)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        fft2(&mut FftPlanner::new(), &mut transfer, w, h, false);
        Ok(Self { shape, transfer })
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn solve(&self, data: &DataVolume, anchor: &Image, weight: f64) -> Result<Image> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid(format!("Tikhonov weight must be positive, got {weight}")));
        }
        data.check_shape(DataShape::image(self.shape), "frequency solver data")?;
        anchor.check_shape(self.shape, "frequency solver anchor")?;
        let ImageShape {
            width: w,
            height: h,
            channels: c,
        } = self.shape;
        let half = 0.5 * weight;
        let scale = 1.0 / (w * h) as f64;
        let mut planner = FftPlanner::new();
        let mut out = vec![0.0; self.shape.len()];
        let mut fb = vec![Complex64::new(0.0, 0.0); w * h];
        let mut zb = fb.clone();
        for k in 0..c {
            for p in 0..w * h {
                fb[p] = Complex64::new(data.data()[p * c + k], 0.0);
                zb[p] = Complex64::new(anchor.data()[p * c + k], 0.0);
            }
            fft2(&mut planner, &mut fb, w, h, false);
            fft2(&mut planner, &mut zb, w, h, false);
            for ((fv, zv), kv) in fb.iter_mut().zip(&zb).zip(&self.transfer) {
                *fv = (kv.conj() * *fv + *zv * half) / (kv.norm_sqr() + half);
            }
            fft2(&mut planner, &mut fb, w, h, true);
            for p in 0..w * h {
                out[p * c + k] = fb[p].re * scale;
            }
        }
        Image::from_vec(self.shape, out)
    }
}

/// One-shot convenience wrapper around [`FrequencySolver`].
pub fn solve_deconv_frequency(
    kernel: &ConvolutionKernel,
    data: &DataVolume,
    anchor: &Image,
    weight: f64,
) -> Result<Image> {
    FrequencySolver::new(kernel, anchor.shape())?.solve(data, anchor, weight)
}
