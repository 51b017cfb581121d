//! Splitting iteration for the Potts problem
//!
//! ```text
//! min_u γ Σ_s ω_s ‖∇_{p_s} u‖₀ + ‖Au − f‖²
//! ```
//!
//! One split variable `u_s` per displacement carries the jump penalty of its
//! direction and decomposes into independent univariate Potts problems along
//! the chains of `p_s`; `v` carries the data term. An iteration updates the
//! `u_s` in order, then `v` through a proximal (Tikhonov) step with anchor
//! `z = (1/S) Σ_s (u_s − λ_s/μ)` and weight `μS`, then the multipliers.

mod chains;
mod config;
mod labels;
mod prox;

pub use chains::chains_for_displacement;
pub use config::{CouplingSchedule, NuMode, PottsConfig};
pub use labels::{consensus_labels, default_merge_tolerance, extract_labels, piecewise_constant_projection, LabelMap};
pub use prox::{CgProx, DataProx, FrequencyProx, ProxOutput, RadonFilterProx, SolverChoice};

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, ImageShape};
use crate::neighborhoods::{Displacement, NeighborhoodSystem};
use crate::operators::{DataVolume, ForwardOperator};
use crate::potts1d::PottsSolver1D;
use crate::tikhonov::CgConfig;

/// Split variables and multipliers. Everything starts at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub u: Vec<Image>,
    pub v: Image,
    pub lambda: Vec<Image>,
    /// `ρ_{r,t}` for `r < t`, in lexicographic pair order.
    pub rho: Vec<Image>,
    /// Index of the next iteration; starts at 1.
    pub k: usize,
    /// `max_s ‖u_s − v‖` after each iteration.
    pub residual_history: Vec<f64>,
}

impl AdmmState {
    pub fn new(shape: ImageShape, directions: usize) -> Self {
        let zero = Image::zeros(shape);
        Self {
            u: vec![zero.clone(); directions],
            v: zero.clone(),
            lambda: vec![zero.clone(); directions],
            rho: vec![zero; directions * directions.saturating_sub(1) / 2],
            k: 1,
            residual_history: Vec::new(),
        }
    }

    pub fn directions(&self) -> usize {
        self.u.len()
    }

    pub fn pair_index(&self, r: usize, t: usize) -> usize {
        debug_assert!(r < t);
        let s = self.directions();
        r * s - r * (r + 1) / 2 + (t - r - 1)
    }

    /// `‖u₁ − u₂‖ / (‖u₁‖ + ‖u₂‖)`. A zero denominator counts as converged
    /// only when `v` vanishes too.
    pub fn stop_ratio(&self) -> f64 {
        let denom = self.u[0].norm() + self.u[1].norm();
        if denom > 0.0 {
            self.u[0].distance(&self.u[1]) / denom
        } else if self.v.norm() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    /// `‖u_s^{k+1} − (v^k + λ_s^k/μ_k)‖²`
    pub distance_sq: f64,
    /// `γ ω_s L / μ_k`
    pub bound: f64,
}

/// Diagnostics of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mu: f64,
    pub nu: f64,
    pub stop_ratio: f64,
    /// `‖u_s − v‖`
    pub split_residuals: Vec<f64>,
    /// `max_s ‖u_s − v‖ / ‖v‖`
    pub relative_split_residual: f64,
    /// `‖λ_s / μ_k‖`
    pub multiplier_norms: Vec<f64>,
    /// Empty when `ν > 0`.
    pub certificate: Vec<CertificateEntry>,
    /// Jumps of `u_s` along its own chains.
    pub jumps: Vec<usize>,
    /// `‖Av − f‖² + γ Σ_s ω_s · jumps_s`
    pub objective: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

#[derive(Clone, Debug)]
pub struct AdmmOutcome {
    pub v: Image,
    pub u: Vec<Image>,
    pub labels: LabelMap,
    pub iterations: usize,
    pub converged: bool,
    pub records: Vec<IterationRecord>,
}

/// The iteration bound to one problem instance.
pub struct Admm<'a> {
    operator: &'a dyn ForwardOperator,
    data: &'a DataVolume,
    config: &'a PottsConfig,
    schedule: CouplingSchedule,
    prox: &'a dyn DataProx,
    chains: Vec<Vec<Vec<usize>>>,
}

impl<'a> Admm<'a> {
    pub fn new(
        operator: &'a dyn ForwardOperator,
        data: &'a DataVolume,
        config: &'a PottsConfig,
        schedule: CouplingSchedule,
        prox: &'a dyn DataProx,
    ) -> Result<Self> {
        config.validate()?;
        schedule.validate()?;
        data.check_shape(operator.range(), "ADMM data")?;
        let shape = operator.domain();
        let chains = config
            .neighborhood
            .displacements()
            .iter()
            .map(|&p| chains_for_displacement(shape.width, shape.height, p))
            .collect();
        Ok(Self {
            operator,
            data,
            config,
            schedule,
            prox,
            chains,
        })
    }

    pub fn initial_state(&self) -> AdmmState {
        AdmmState::new(self.operator.domain(), self.config.neighborhood.len())
    }

    /// One iteration; failures carry the iteration index.
    pub fn step(&self, state: &mut AdmmState) -> Result<IterationRecord> {
        let k = state.k;
        self.step_inner(state).map_err(|e| Error::Iteration {
            iteration: k,
            source: Box::new(e),
        })
    }

    fn step_inner(&self, state: &mut AdmmState) -> Result<IterationRecord> {
        let shape = self.operator.domain();
        if state.v.shape() != shape || state.directions() != self.config.neighborhood.len() {
            return Err(Error::shape("ADMM state does not match the problem"));
        }
        let system: &NeighborhoodSystem = &self.config.neighborhood;
        let n_dir = system.len();
        let k = state.k;
        let mu = self.schedule.mu(k);
        let nu = self.schedule.nu(k, n_dir);
        let denom = mu + nu * (n_dir - 1) as f64;
        let pixels = shape.pixels() as f64;
        let mut certificate = Vec::new();
        let mut jumps = Vec::with_capacity(n_dir);

        for s in 0..n_dir {
            let mut w = state.v.clone();
            w.scale(mu);
            w.axpy(1.0, &state.lambda[s]);
            if nu > 0.0 {
                for r in 0..s {
                    w.axpy(nu, &state.u[r]);
                    w.axpy(1.0, &state.rho[state.pair_index(r, s)]);
                }
                for t in s + 1..n_dir {
                    w.axpy(nu, &state.u[t]);
                    w.axpy(-1.0, &state.rho[state.pair_index(s, t)]);
                }
            }
            w.scale(1.0 / denom);
            let omega = system.weights()[s];
            let (u_s, count) = solve_chains(&w, &self.chains[s], 2.0 * self.config.gamma * omega / denom);
            if nu == 0.0 {
                let entry = CertificateEntry {
                    distance_sq: u_s.distance(&w).powi(2),
                    bound: self.config.gamma * omega * pixels / mu,
                };
                if self.config.check_certificate && entry.distance_sq > entry.bound {
                    return Err(Error::CertificateViolated {
                        iteration: k,
                        direction: s,
                        distance_sq: entry.distance_sq,
                        bound: entry.bound,
                    });
                }
                certificate.push(entry);
            }
            state.u[s] = u_s;
            jumps.push(count);
        }

        let mut z = Image::zeros(shape);
        for s in 0..n_dir {
            z.axpy(1.0, &state.u[s]);
            z.axpy(-1.0 / mu, &state.lambda[s]);
        }
        z.scale(1.0 / n_dir as f64);
        let prox = self.prox.prox(&z, mu * n_dir as f64, &state.v)?;
        state.v = prox.solution;

        for s in 0..n_dir {
            let diff = state.v.zip_map(&state.u[s], |a, b| a - b);
            state.lambda[s].axpy(mu, &diff);
        }
        if nu > 0.0 {
            for r in 0..n_dir {
                for t in r + 1..n_dir {
                    let diff = state.u[r].zip_map(&state.u[t], |a, b| a - b);
                    let idx = state.pair_index(r, t);
                    state.rho[idx].axpy(nu, &diff);
                }
            }
        }
        state.k += 1;

        let split_residuals: Vec<f64> = state.u.iter().map(|u| u.distance(&state.v)).collect();
        let max_residual = split_residuals.iter().fold(0.0f64, |m, &r| m.max(r));
        state.residual_history.push(max_residual);
        let v_norm = state.v.norm();
        let misfit = self.operator.apply(&state.v)?.sub(self.data).norm_sq();
        let penalty: f64 = jumps
            .iter()
            .zip(system.weights())
            .map(|(&j, w)| j as f64 * w)
            .sum();
        let record = IterationRecord {
            iteration: k,
            mu,
            nu,
            stop_ratio: state.stop_ratio(),
            split_residuals,
            relative_split_residual: if v_norm > 0.0 { max_residual / v_norm } else { max_residual },
            multiplier_norms: state.lambda.iter().map(|l| l.norm() / mu).collect(),
            certificate,
            jumps,
            objective: misfit + self.config.gamma * penalty,
            inner_iterations: prox.inner_iterations,
            inner_converged: prox.converged,
        };
        debug!(
            "iteration {k}: mu {mu:.3e}, stop ratio {:.3e}, objective {:.6e}",
            record.stop_ratio, record.objective
        );
        Ok(record)
    }

    pub fn run(&self) -> Result<AdmmOutcome> {
        self.run_with(|_| {})
    }

    /// Runs to the stopping rule or the iteration limit, handing each
    /// iteration's record to `observer` as soon as it is available.
    pub fn run_with(&self, mut observer: impl FnMut(&IterationRecord)) -> Result<AdmmOutcome> {
        let mut state = self.initial_state();
        let mut records = Vec::new();
        let mut converged = false;
        while records.len() < self.config.max_iterations {
            let record = self.step(&mut state)?;
            observer(&record);
            let done = record.stop_ratio < self.config.stop_tolerance;
            records.push(record);
            if done {
                converged = true;
                break;
            }
        }
        let tolerance = self
            .config
            .merge_tolerance
            .unwrap_or_else(|| default_merge_tolerance(&state.v));
        let labels = consensus_labels(&state.u[0], &state.u[1], &state.v, tolerance);
        Ok(AdmmOutcome {
            iterations: records.len(),
            v: state.v,
            u: state.u,
            labels,
            converged,
            records,
        })
    }
}

/// Solves the univariate Potts problem on every chain of `w` and assembles
/// the result; also returns the total number of jumps.
fn solve_chains(w: &Image, chains: &[Vec<usize>], gamma: f64) -> (Image, usize) {
    let c = w.channels();
    let solved: Vec<(Vec<f64>, usize)> = chains
        .par_iter()
        .map_init(
            || (PottsSolver1D::default(), Vec::new()),
            |(solver, input), chain| {
                input.clear();
                for &p in chain {
                    input.extend_from_slice(w.pixel(p));
                }
                let mut out = vec![0.0; input.len()];
                solver.solve_into(input, c, gamma, &mut out);
                let jumps = (1..chain.len())
                    .filter(|&i| out[i * c..(i + 1) * c] != out[(i - 1) * c..i * c])
                    .count();
                (out, jumps)
            },
        )
        .collect();
    let mut u = Image::zeros(w.shape());
    let mut total = 0;
    for (chain, (values, jumps)) in chains.iter().zip(solved) {
        for (i, &p) in chain.iter().enumerate() {
            u.pixel_mut(p).copy_from_slice(&values[i * c..(i + 1) * c]);
        }
        total += jumps;
    }
    (u, total)
}

/// One iteration on `state` (chains are rebuilt on every call; use
/// [`Admm`] for repeated steps).
pub fn admm_step(
    state: &mut AdmmState,
    operator: &dyn ForwardOperator,
    data: &DataVolume,
    config: &PottsConfig,
    schedule: CouplingSchedule,
    prox: &dyn DataProx,
) -> Result<IterationRecord> {
    Admm::new(operator, data, config, schedule, prox)?.step(state)
}

/// Runs the iteration with the given proximal v-step, or with conjugate
/// gradients on the quadratic data term when `prox` is `None`.
pub fn run(
    operator: &dyn ForwardOperator,
    data: &DataVolume,
    config: &PottsConfig,
    schedule: CouplingSchedule,
    prox: Option<&dyn DataProx>,
) -> Result<AdmmOutcome> {
    let cg = CgProx::new(operator, data, CgConfig::default());
    Admm::new(operator, data, config, schedule, prox.unwrap_or(&cg))?.run()
}

/// Number of pixel pairs `(x, x + p)` inside the grid with different values.
pub fn count_jumps(u: &Image, p: Displacement) -> usize {
    let (w, h) = (u.width() as i64, u.height() as i64);
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            let (nx, ny) = (x + p[0], y + p[1]);
            if nx < 0 || nx >= w || ny < 0 || ny >= h {
                continue;
            }
            if u.pixel((y * w + x) as usize) != u.pixel((ny * w + nx) as usize) {
                count += 1;
            }
        }
    }
    count
}

/// `γ Σ_s ω_s ‖∇_{p_s} u‖₀ + ‖Au − f‖²`
pub fn potts_objective(
    u: &Image,
    operator: &dyn ForwardOperator,
    data: &DataVolume,
    gamma: f64,
    system: &NeighborhoodSystem,
) -> Result<f64> {
    let misfit = operator.apply(u)?.sub(data).norm_sq();
    let penalty: f64 = system
        .displacements()
        .iter()
        .zip(system.weights())
        .map(|(&p, w)| w * count_jumps(u, p) as f64)
        .sum();
    Ok(gamma * penalty + misfit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhoods::build_system;
    use crate::operators::Identity;

    #[test]
    fn first_step_from_zero_keeps_u_at_zero() {
        let shape = ImageShape::new(6, 5, 1);
        let op = Identity::new(shape);
        let f = DataVolume::from_image(Image::from_fn(6, 5, |x, _| if x < 0.0 { 0.0 } else { 1.0 }));
        let config = PottsConfig::new(0.1, build_system(0).unwrap());
        let cg = CgProx::new(&op, &f, CgConfig::default());
        let mut state = AdmmState::new(shape, 2);
        let record = admm_step(&mut state, &op, &f, &config, CouplingSchedule::default(), &cg).unwrap();
        assert!(state.u.iter().all(|u| u.norm() == 0.0));
        assert_eq!(record.iteration, 1);
        assert_eq!(state.k, 2);
        assert!(state.v.norm() > 0.0);
    }

    #[test]
    fn zero_data_gives_zero_image_and_one_segment() {
        let shape = ImageShape::new(8, 8, 1);
        let op = Identity::new(shape);
        let f = DataVolume::from_image(Image::zeros(shape));
        let config = PottsConfig::new(1.0, build_system(1).unwrap());
        let out = run(&op, &f, &config, CouplingSchedule::default(), None).unwrap();
        assert!(out.converged);
        assert_eq!(out.v.norm(), 0.0);
        assert_eq!(out.labels.count(), 1);
    }

    #[test]
    fn pair_indices_are_dense() {
        let state = AdmmState::new(ImageShape::new(2, 2, 1), 4);
        let mut seen = Vec::new();
        for r in 0..4 {
            for t in r + 1..4 {
                seen.push(state.pair_index(r, t));
            }
        }
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        assert_eq!(state.rho.len(), 6);
    }

    #[test]
    fn jump_counting() {
        let u = Image::from_fn(4, 4, |x, _| if x < 0.0 { 0.0 } else { 1.0 });
        assert_eq!(count_jumps(&u, [1, 0]), 4);
        assert_eq!(count_jumps(&u, [0, 1]), 0);
        assert_eq!(count_jumps(&u, [1, 1]), 3);
    }
}
