use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{Image, ImageShape};
use crate::operators::{ConvolutionKernel, DataVolume, ForwardOperator, RadonGeometry};
use crate::tikhonov::{solve_cg, CgConfig, FrequencySolver, RadonFilterSolver, TikhonovProblem};

/// Which solver carries out the quadratic v-step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    #[default]
    Cg,
    Frequency,
    RadonFilter,
}

#[derive(Clone, Debug)]
pub struct ProxOutput {
    pub solution: Image,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// `argmin_v d(v, f) + (weight/2) ‖v − anchor‖²`
///
/// `previous` is the last v iterate, available as a warm start.
pub trait DataProx: Sync {
    fn prox(&self, anchor: &Image, weight: f64, previous: &Image) -> Result<ProxOutput>;
}

/// Quadratic data term `‖Av − f‖²` solved by conjugate gradients.
pub struct CgProx<'a> {
    operator: &'a dyn ForwardOperator,
    data: &'a DataVolume,
    config: CgConfig,
}

impl<'a> CgProx<'a> {
    pub fn new(operator: &'a dyn ForwardOperator, data: &'a DataVolume, config: CgConfig) -> Self {
        Self {
            operator,
            data,
            config,
        }
    }
}

impl DataProx for CgProx<'_> {
    fn prox(&self, anchor: &Image, weight: f64, previous: &Image) -> Result<ProxOutput> {
        let problem = TikhonovProblem::new(self.operator, self.data, anchor, weight)?;
        let out = solve_cg(&problem, &self.config, Some(previous))?;
        Ok(ProxOutput {
            solution: out.solution,
            inner_iterations: out.iterations,
            converged: out.converged,
        })
    }
}

/// Exact solve for periodic convolutions.
pub struct FrequencyProx<'a> {
    solver: FrequencySolver,
    data: &'a DataVolume,
}

impl<'a> FrequencyProx<'a> {
    pub fn new(kernel: &ConvolutionKernel, shape: ImageShape, data: &'a DataVolume) -> Result<Self> {
        Ok(Self {
            solver: FrequencySolver::new(kernel, shape)?,
            data,
        })
    }
}

impl DataProx for FrequencyProx<'_> {
    fn prox(&self, anchor: &Image, weight: f64, _previous: &Image) -> Result<ProxOutput> {
        Ok(ProxOutput {
            solution: self.solver.solve(self.data, anchor, weight)?,
            inner_iterations: 1,
            converged: true,
        })
    }
}

/// Filtered backprojection-type solve for densely sampled Radon data.
pub struct RadonFilterProx<'a> {
    solver: RadonFilterSolver,
    data: &'a DataVolume,
}

impl<'a> RadonFilterProx<'a> {
    pub fn new(geometry: RadonGeometry, shape: ImageShape, data: &'a DataVolume) -> Result<Self> {
        Ok(Self {
            solver: RadonFilterSolver::new(geometry, shape)?,
            data,
        })
    }
}

impl DataProx for RadonFilterProx<'_> {
    fn prox(&self, anchor: &Image, weight: f64, _previous: &Image) -> Result<ProxOutput> {
        Ok(ProxOutput {
            solution: self.solver.solve(self.data, anchor, weight)?,
            inner_iterations: 1,
            converged: true,
        })
    }
}
