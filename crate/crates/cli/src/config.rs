//! Run configuration: a TOML file whose fields can be overridden by flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use potts_core::admm::SolverChoice;
use potts_core::operators::{
    Convolution, ConvolutionKernel, Identity, KernelKind, RadonGeometry, RadonTransform, SphericalGeometry,
    SphericalMeanTransform,
};
use potts_core::tikhonov::CgConfig;
use potts_core::{build_system, CouplingSchedule, ForwardOperator, ImageShape, PottsConfig};
use serde::{Deserialize, Serialize};

use crate::formats::Geometry;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorSpec {
    Radon {
        angles: usize,
        /// Defaults to one detector per pixel covering the diagonal.
        #[serde(default)]
        detectors: Option<usize>,
    },
    Spherical {
        angles: usize,
        radii: usize,
    },
    Blur {
        kernel: KernelKind,
    },
    Identity,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec::Radon {
            angles: 7,
            detectors: None,
        }
    }
}

impl OperatorSpec {
    pub fn geometry(&self, shape: ImageShape) -> Result<Geometry> {
        Ok(match *self {
            OperatorSpec::Radon { angles, detectors } => Geometry::Radon(match detectors {
                None => RadonGeometry::for_image(shape, angles)?,
                Some(d) => RadonGeometry::uniform(angles, d, std::f64::consts::SQRT_2)?,
            }),
            OperatorSpec::Spherical { angles, radii } => {
                Geometry::Spherical(SphericalGeometry::uniform(angles, radii)?)
            }
            OperatorSpec::Blur { kernel } => Geometry::Blur { kernel },
            OperatorSpec::Identity => Geometry::Identity,
        })
    }
}

pub fn build_operator(geometry: &Geometry, shape: ImageShape) -> Result<Box<dyn ForwardOperator>> {
    Ok(match geometry {
        Geometry::Radon(g) => Box::new(RadonTransform::new(g.clone(), shape)?),
        Geometry::Spherical(g) => Box::new(SphericalMeanTransform::new(g.clone(), shape)?),
        Geometry::Blur { kernel } => Box::new(Convolution::new(ConvolutionKernel::new(*kernel)?, shape)?),
        Geometry::Identity => Box::new(Identity::new(shape)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PottsSection {
    pub gamma: f64,
    pub neighborhood: u8,
    pub stop_tolerance: f64,
    pub max_iterations: usize,
    pub check_certificate: bool,
    pub merge_tolerance: Option<f64>,
}

impl Default for PottsSection {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            neighborhood: 2,
            stop_tolerance: 1e-3,
            max_iterations: 250,
            check_certificate: true,
            merge_tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverChoice,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let cg = CgConfig::default();
        Self {
            kind: SolverChoice::Cg,
            cg_tolerance: cg.tolerance,
            cg_max_iterations: cg.max_iterations,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub level: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub operator: OperatorSpec,
    pub potts: PottsSection,
    pub schedule: CouplingSchedule,
    pub solver: SolverSection,
    pub noise: NoiseSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    pub fn potts_config(&self) -> Result<PottsConfig> {
        let p = &self.potts;
        let mut config = PottsConfig::new(p.gamma, build_system(p.neighborhood)?);
        config.stop_tolerance = p.stop_tolerance;
        config.max_iterations = p.max_iterations;
        config.check_certificate = p.check_certificate;
        config.merge_tolerance = p.merge_tolerance;
        config.validate()?;
        self.schedule.validate()?;
        Ok(config)
    }

    pub fn cg_config(&self) -> Result<CgConfig> {
        let cg = CgConfig {
            max_iterations: self.solver.cg_max_iterations,
            tolerance: self.solver.cg_tolerance,
            ..CgConfig::default()
        };
        cg.validate()?;
        Ok(cg)
    }

    pub fn validate_noise(&self) -> Result<()> {
        if !(self.noise.level.is_finite() && self.noise.level >= 0.0) {
            bail!("noise level must be nonnegative, got {}", self.noise.level);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let text = r#"
            [operator]
            kind = "blur"
            kernel = { kind = "motion", length = 15 }

            [potts]
            gamma = 0.5
            neighborhood = 1

            [schedule]
            mu0 = 1e-6
            nu_mode = "mu_over_s"

            [solver]
            kind = "frequency"
        "#;
        let c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(
            c.operator,
            OperatorSpec::Blur {
                kernel: KernelKind::Motion { length: 15 }
            }
        );
        assert_eq!(c.potts.gamma, 0.5);
        assert_eq!(c.potts.max_iterations, 250);
        assert_eq!(c.schedule.tau, 2.01);
        assert_eq!(c.solver.kind, SolverChoice::Frequency);
        assert!(c.potts_config().is_ok());
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(toml::from_str::<RunConfig>("[potts]\ngama = 1.0\n").is_err());
    }
}
