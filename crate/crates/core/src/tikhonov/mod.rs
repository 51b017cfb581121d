//! Solvers for the quadratic subproblem
//!
//! ```text
//! min_v ‖Av − f‖² + (w/2)‖v − z‖²
//! ```
//!
//! whose normal equation is `(A*A + (w/2) I) v = A*f + (w/2) z`. The weight
//! `w` is passed fully assembled by the caller.

mod cg;
mod fft;
mod filtered;
mod frequency;

pub use cg::{solve_cg, CgConfig, CgOutcome};
pub use filtered::{filter_response, RadonFilterSolver};
pub use frequency::{solve_deconv_frequency, FrequencySolver};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::{DataVolume, ForwardOperator};

#[derive(Clone, Copy)]
pub struct TikhonovProblem<'a> {
    pub operator: &'a dyn ForwardOperator,
    pub data: &'a DataVolume,
    pub anchor: &'a Image,
    pub weight: f64,
}

impl<'a> TikhonovProblem<'a> {
    pub fn new(
        operator: &'a dyn ForwardOperator,
        data: &'a DataVolume,
        anchor: &'a Image,
        weight: f64,
    ) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid(format!("Tikhonov weight must be positive, got {weight}")));
        }
        anchor.check_shape(operator.domain(), "Tikhonov anchor")?;
        data.check_shape(operator.range(), "Tikhonov data")?;
        Ok(Self {
            operator,
            data,
            anchor,
            weight,
        })
    }

    pub fn objective(&self, v: &Image) -> Result<f64> {
        let residual = self.operator.apply(v)?.sub(self.data);
        Ok(residual.norm_sq() + 0.5 * self.weight * v.distance(self.anchor).powi(2))
    }

    /// `A*f + (w/2) z`
    pub fn rhs(&self) -> Result<Image> {
        let mut b = self.operator.adjoint(self.data)?;
        b.axpy(0.5 * self.weight, self.anchor);
        Ok(b)
    }

    /// `(A*A + (w/2) I) v`
    pub fn apply_normal(&self, v: &Image) -> Result<Image> {
        let mut out = self.operator.normal(v)?;
        out.axpy(0.5 * self.weight, v);
        Ok(out)
    }

    /// `‖b − Mv‖ / ‖b‖`, or `‖Mv‖` when `b = 0`.
    pub fn relative_residual(&self, v: &Image) -> Result<f64> {
        let b = self.rhs()?;
        let mv = self.apply_normal(v)?;
        let r = b.distance(&mv);
        let bn = b.norm();
        Ok(if bn > 0.0 { r / bn } else { r })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageShape;
    use crate::operators::Identity;

    #[test]
    fn rejects_bad_weight_and_shapes() {
        let shape = ImageShape::new(3, 3, 1);
        let op = Identity::new(shape);
        let f = DataVolume::from_image(Image::zeros(shape));
        let z = Image::zeros(shape);
        assert!(TikhonovProblem::new(&op, &f, &z, 0.0).is_err());
        let wrong = Image::zeros(ImageShape::new(2, 3, 1));
        assert!(TikhonovProblem::new(&op, &f, &wrong, 1.0).is_err());
    }

    #[test]
    fn objective_of_anchor_is_data_misfit() {
        let shape = ImageShape::new(2, 2, 1);
        let op = Identity::new(shape);
        let f = DataVolume::from_image(Image::filled(shape, 1.0));
        let z = Image::zeros(shape);
        let p = TikhonovProblem::new(&op, &f, &z, 3.0).unwrap();
        assert_eq!(p.objective(&z).unwrap(), 4.0);
    }
}
