//! Piecewise-constant reconstruction and segmentation from indirect measurements.
//!
//! The crate provides an exact univariate Potts solver, isotropic
//! finite-difference neighborhood systems, forward operators (Radon,
//! spherical mean, convolution) with exact adjoints, Tikhonov solvers for
//! the quadratic subproblem, the splitting iteration tying them together,
//! phantoms and evaluation metrics.

pub mod admm;
pub mod error;
pub mod image;
pub mod metrics;
pub mod neighborhoods;
pub mod operators;
pub mod phantoms;
pub mod potts1d;
pub mod tikhonov;

pub use admm::{run, Admm, AdmmOutcome, AdmmState, CouplingSchedule, LabelMap, NuMode, PottsConfig};
pub use error::{Error, Result};
pub use image::{Image, ImageShape};
pub use neighborhoods::{build_system, NeighborhoodSystem};
pub use operators::{DataKind, DataShape, DataVolume, ForwardOperator};
pub use potts1d::{solve_potts_1d, PottsSolution1D, Signal1D};
