use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhoods::NeighborhoodSystem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    /// No coupling between the split variables.
    #[default]
    Zero,
    /// `ν_k = μ_k / S`
    MuOverS,
}

/// `μ_k = mu0 · k^tau` for `k = 1, 2, …`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CouplingSchedule {
    pub mu0: f64,
    pub tau: f64,
    pub nu_mode: NuMode,
}

impl Default for CouplingSchedule {
    fn default() -> Self {
        Self {
            mu0: 1e-7,
            tau: 2.01,
            nu_mode: NuMode::Zero,
        }
    }
}

impl CouplingSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0.is_finite() && self.mu0 > 0.0) {
            return Err(Error::invalid(format!("mu0 must be positive, got {}", self.mu0)));
        }
        if !(self.tau.is_finite() && self.tau > 2.0) {
            return Err(Error::invalid(format!("tau must exceed 2, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn mu(&self, k: usize) -> f64 {
        self.mu0 * (k as f64).powf(self.tau)
    }

    pub fn nu(&self, k: usize, directions: usize) -> f64 {
        match self.nu_mode {
            NuMode::Zero => 0.0,
            NuMode::MuOverS => self.mu(k) / directions as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PottsConfig {
    pub gamma: f64,
    pub neighborhood: NeighborhoodSystem,
    /// Threshold on `‖u₁ − u₂‖ / (‖u₁‖ + ‖u₂‖)`.
    pub stop_tolerance: f64,
    pub max_iterations: usize,
    /// Abort when the per-iteration distance bound fails (only with `ν = 0`).
    pub check_certificate: bool,
    /// Label merge tolerance; `None` uses `1e-6 · value range` of the result.
    pub merge_tolerance: Option<f64>,
}

impl PottsConfig {
    pub fn new(gamma: f64, neighborhood: NeighborhoodSystem) -> Self {
        Self {
            gamma,
            neighborhood,
            stop_tolerance: 1e-3,
            max_iterations: 250,
            check_certificate: true,
            merge_tolerance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.stop_tolerance.is_finite() && self.stop_tolerance > 0.0) {
            return Err(Error::invalid(format!(
                "stop tolerance must be positive, got {}",
                self.stop_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        if let Some(t) = self.merge_tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid(format!("merge tolerance must be nonnegative, got {t}")));
            }
        }
        let d = self.neighborhood.displacements();
        if d.len() < 2 || d[0] != [1, 0] || d[1] != [0, 1] {
            return Err(Error::invalid(
                "the neighborhood must start with the axis displacements (1,0), (0,1)",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhoods::build_system;

    #[test]
    fn schedule_defaults() {
        let s = CouplingSchedule::default();
        assert_eq!(s.mu(1), 1e-7);
        assert!(s.mu(3) > s.mu(2));
        assert_eq!(s.nu(5, 4), 0.0);
        let coupled = CouplingSchedule {
            nu_mode: NuMode::MuOverS,
            ..s
        };
        assert_eq!(coupled.nu(2, 4), coupled.mu(2) / 4.0);
        assert!(CouplingSchedule { tau: 2.0, ..s }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        let c = PottsConfig::new(0.5, build_system(1).unwrap());
        assert!(c.validate().is_ok());
        assert!(PottsConfig { gamma: 0.0, ..c.clone() }.validate().is_err());
        let rotated = NeighborhoodSystem::new(vec![[0, 1], [1, 0]], vec![1.0, 1.0]).unwrap();
        assert!(PottsConfig::new(0.5, rotated).validate().is_err());
    }
}
