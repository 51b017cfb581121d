//! Filtered-backprojection-type Tikhonov solver for densely sampled Radon
//! data.
//!
//! In the continuous setting, `argmin_v ‖Rv − f‖² + α‖v − z‖²` (data norm
//! over the whole circle of directions) is `z + R* H_α (f − Rz)` where `H_α`
//! filters each projection along `s` with `h_α(r) = |r|/(4π + α|r|)`. The
//! discrete problem `‖Av − f‖² + (w/2)‖v − z‖²` is mapped onto it by the
//! quadrature of sums: with `Nθ` angles over `[0, π)`, detector spacing `ds`
//! and pixel pitch `hx × hy`,
//!
//! ```text
//! α_c = (w/2) · 2π ds / (Nθ hx hy),     R* ≈ (2π ds / (Nθ hx hy)) · Aᵀ.
//! ```
//!
//! The routine takes the discrete coefficient `α = w/2` and converts it
//! internally. Its accuracy degrades quickly for sparse angular sampling.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{Image, ImageShape};
use crate::operators::{DataVolume, ForwardOperator, RadonGeometry, RadonTransform};

/// Frequency oversampling used when building the band-limited spatial
/// filter kernel.
const KERNEL_OVERSAMPLING: usize = 16;

/// `h_α(r) = |r| / (4π + α|r|)`
pub fn filter_response(r: f64, alpha: f64) -> f64 {
    r.abs() / (4.0 * PI + alpha * r.abs())
}

pub struct RadonFilterSolver {
    transform: RadonTransform,
    padded: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RadonFilterSolver {
    pub fn new(geometry: RadonGeometry, shape: ImageShape) -> Result<Self> {
        let transform = RadonTransform::new(geometry, shape)?;
        let detectors = transform.geometry().offsets.len();
        let padded = (2 * detectors).next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(padded),
            inverse: planner.plan_fft_inverse(padded),
            transform,
            padded,
        })
    }

    pub fn transform(&self) -> &RadonTransform {
        &self.transform
    }

    /// Factor turning `Aᵀ` into the continuous backprojection over the circle.
    pub fn backprojection_scale(&self) -> f64 {
        let (hx, hy) = self.transform.domain().pitch();
        let g = self.transform.geometry();
        2.0 * PI * g.detector_spacing() / (g.angles.len() as f64 * hx * hy)
    }

    /// Continuous-measure regularization parameter for discrete `α = w/2`.
    pub fn continuous_alpha(&self, alpha: f64) -> f64 {
        alpha * self.backprojection_scale()
    }

    /// DFT (length `padded`) of the band-limited filter kernel, including the
    /// `ds` quadrature factor of the convolution, so multiplying a padded
    /// projection's spectrum by it and inverting (normalized) gives
    /// `∫ k(s − s') g(s') ds'` at the detector positions.
    fn transfer(&self, alpha_c: f64) -> Vec<Complex64> {
        let ds = self.transform.geometry().detector_spacing();
        let p = self.padded;
        let fine = KERNEL_OVERSAMPLING * p;
        let mut spectrum: Vec<Complex64> = (0..fine)
            .map(|k| {
                let idx = if k <= fine / 2 { k as f64 } else { k as f64 - fine as f64 };
                let r = 2.0 * PI * idx / (fine as f64 * ds);
                Complex64::new(filter_response(r, alpha_c), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(fine).process(&mut spectrum);
        // Riemann sum of (1/2π)∫ h(r) e^{irx} dr, times ds for the convolution.
        let norm = 1.0 / fine as f64;
        let mut kernel = vec![Complex64::new(0.0, 0.0); p];
        for (n, slot) in kernel.iter_mut().enumerate() {
            let src = if n < p / 2 { n } else { fine - (p - n) };
            *slot = Complex64::new(spectrum[src].re * norm, 0.0);
        }
        self.forward.process(&mut kernel);
        kernel
    }

    /// Applies `H_α` along the detector axis of every projection, `α` in
    /// continuous units.
    pub fn filter(&self, data: &DataVolume, alpha_c: f64) -> Result<DataVolume> {
        data.check_shape(self.transform.range(), "radon filter")?;
        if !(alpha_c.is_finite() && alpha_c >= 0.0) {
            return Err(Error::invalid(format!("filter parameter must be nonnegative, got {alpha_c}")));
        }
        let transfer = self.transfer(alpha_c);
        let p = self.padded;
        let d = data.shape().cols;
        let rows: Vec<Vec<f64>> = (0..data.shape().rows)
            .into_par_iter()
            .map(|a| {
                let mut buf = vec![Complex64::new(0.0, 0.0); p];
                for (b, &v) in buf.iter_mut().zip(data.row(a)) {
                    b.re = v;
                }
                self.forward.process(&mut buf);
                for (b, t) in buf.iter_mut().zip(&transfer) {
                    *b *= t;
                }
                self.inverse.process(&mut buf);
                buf[..d].iter().map(|c| c.re / p as f64).collect()
            })
            .collect();
        DataVolume::from_vec(data.shape(), rows.concat())
    }

    /// `z + R* H_α (f − Rz)` for the discrete problem with weight `w`
    /// (discrete `α = w/2`).
    pub fn solve(&self, data: &DataVolume, anchor: &Image, weight: f64) -> Result<Image> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid(format!("Tikhonov weight must be positive, got {weight}")));
        }
        let mut v = self.correction(data, anchor, 0.5 * weight)?;
        v.axpy(1.0, anchor);
        Ok(v)
    }

    /// `R* H_α (f − Rz)` without the anchor; `alpha` is the discrete `w/2`.
    pub fn correction(&self, data: &DataVolume, anchor: &Image, alpha: f64) -> Result<Image> {
        let residual = data.sub(&self.transform.apply(anchor)?);
        let filtered = self.filter(&residual, self.continuous_alpha(alpha))?;
        let mut back = self.transform.adjoint(&filtered)?;
        back.scale(self.backprojection_scale());
        Ok(back)
    }

    /// Classical filtered backprojection (`α = 0`, ramp filter `|r|/4π`).
    pub fn fbp(&self, data: &DataVolume) -> Result<Image> {
        let filtered = self.filter(data, 0.0)?;
        let mut back = self.transform.adjoint(&filtered)?;
        back.scale(self.backprojection_scale());
        Ok(back)
    }
}
