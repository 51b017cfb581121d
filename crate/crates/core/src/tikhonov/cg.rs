use log::warn;
use serde::{Deserialize, Serialize};

use super::TikhonovProblem;
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgConfig {
    pub max_iterations: usize,
    /// Relative normal-equation residual at which to stop.
    pub tolerance: f64,
    /// Start from the supplied initial guess instead of the anchor.
    pub warm_start: bool,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            warm_start: true,
        }
    }
}

impl CgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(format!("CG tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Image,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients on the normal equation.
///
/// Starts from `initial` when warm starts are enabled and a guess is given,
/// otherwise from the anchor. When the iteration budget runs out the best
/// iterate (smallest residual) is returned with `converged = false`.
pub fn solve_cg(problem: &TikhonovProblem, config: &CgConfig, initial: Option<&Image>) -> Result<CgOutcome> {
    config.validate()?;
    let mut x = match initial {
        Some(guess) if config.warm_start => {
            guess.check_shape(problem.operator.domain(), "CG initial guess")?;
            guess.clone()
        }
        _ => problem.anchor.clone(),
    };
    let b = problem.rhs()?;
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: Image::zeros(b.shape()),
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }

    let mut r = b;
    r.axpy(-1.0, &problem.apply_normal(&x)?);
    let mut rr = r.norm_sq();
    let mut best = (rr.sqrt() / b_norm, x.clone());
    let mut p = r.clone();
    let mut iterations = 0;
    while best.0 > config.tolerance && iterations < config.max_iterations {
        let mp = problem.apply_normal(&p)?;
        let curvature = p.dot(&mp);
        if curvature.is_nan() || curvature <= 0.0 {
            break;
        }
        let step = rr / curvature;
        x.axpy(step, &p);
        r.axpy(-step, &mp);
        let rr_next = r.norm_sq();
        iterations += 1;
        let rel = rr_next.sqrt() / b_norm;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        p.scale(rr_next / rr);
        p.axpy(1.0, &r);
        rr = rr_next;
    }
    let converged = best.0 <= config.tolerance;
    if !converged {
        warn!(
            "CG stopped after {iterations} iterations at relative residual {:.3e}",
            best.0
        );
    }
    Ok(CgOutcome {
        solution: best.1,
        iterations,
        relative_residual: best.0,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageShape;
    use crate::operators::{DataVolume, ForwardOperator, Identity};

    #[test]
    fn identity_has_closed_form() {
        let shape = ImageShape::new(4, 3, 1);
        let op = Identity::new(shape);
        let f_img = Image::from_fn(4, 3, |x, y| x - 2.0 * y);
        let z = Image::from_fn(4, 3, |x, y| (x * y).cos());
        let f = DataVolume::from_image(f_img.clone());
        let mu = 0.7;
        let p = TikhonovProblem::new(&op, &f, &z, mu).unwrap();
        let config = CgConfig {
            tolerance: 1e-12,
            ..CgConfig::default()
        };
        let out = solve_cg(&p, &config, None).unwrap();
        assert!(out.converged);
        let expected = f_img.zip_map(&z, |f, z| (f + 0.5 * mu * z) / (1.0 + 0.5 * mu));
        assert!(out.solution.distance(&expected) < 1e-8);
    }

    #[test]
    fn consistent_anchor_is_a_fixed_point() {
        let shape = ImageShape::new(3, 3, 1);
        let op = Identity::new(shape);
        let z = Image::from_fn(3, 3, |x, y| x + y);
        let f = op.apply(&z).unwrap();
        let p = TikhonovProblem::new(&op, &f, &z, 2.0).unwrap();
        let out = solve_cg(&p, &CgConfig::default(), None).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.solution, z);
    }

    #[test]
    fn zero_budget_reports_non_convergence() {
        let shape = ImageShape::new(3, 3, 1);
        let op = Identity::new(shape);
        let f = DataVolume::from_image(Image::filled(shape, 1.0));
        let z = Image::zeros(shape);
        let p = TikhonovProblem::new(&op, &f, &z, 2.0).unwrap();
        let config = CgConfig {
            max_iterations: 0,
            ..CgConfig::default()
        };
        let out = solve_cg(&p, &config, None).unwrap();
        assert!(!out.converged);
        assert_eq!(out.solution, z);
    }
}
