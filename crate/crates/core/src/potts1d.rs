//! Exact solver for the univariate (vector-valued) Potts problem
//!
//! ```text
//! P_γ(g) = γ · #{i : g_i ≠ g_{i+1}} + Σ_i ‖g_i − f_i‖²
//! ```
//!
//! The minimizer is found by the classical O(n²) dynamic program over
//! prefix energies: the optimal energy of `f[..r]` is the minimum over the
//! start `ℓ` of the last segment of `B[ℓ] + γ + d[ℓ, r)`, where `d` is the
//! squared deviation of `f[ℓ..r]` from its mean and `B[0] = −γ`. Interval
//! deviations are O(1) from a table of first and second moments.
//!
//! Pruning: since `B[ℓ] + γ ≥ 0` for every `ℓ` and `d[ℓ, r)` grows as `ℓ`
//! moves left, the inner scan (right to left) stops as soon as the
//! deviation alone exceeds the best candidate found so far.

use crate::error::{check_finite, Error, Result};

/// A sequence of `len` samples, each a `channels`-dimensional vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal1D {
    channels: usize,
    samples: Vec<f64>,
}

impl Signal1D {
    /// Interleaved samples: sample `i` occupies `samples[i*channels..(i+1)*channels]`.
    pub fn new(channels: usize, samples: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("signal needs at least one channel"));
        }
        if samples.is_empty() || !samples.len().is_multiple_of(channels) {
            return Err(Error::shape(format!(
                "{} values do not form a non-empty signal of {channels}-vectors",
                samples.len()
            )));
        }
        check_finite(&samples)?;
        Ok(Self { channels, samples })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.channels..(i + 1) * self.channels]
    }
}

/// Minimizer of the univariate Potts functional.
///
/// A jump position `j` means that a new segment starts at (0-based) sample
/// `j`; positions are strictly increasing and lie in `1..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct PottsSolution1D {
    pub jump_positions: Vec<usize>,
    pub segment_values: Vec<Vec<f64>>,
    pub energy: f64,
    len: usize,
}

impl PottsSolution1D {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Half-open `(start, end)` sample ranges of the segments.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(self.jump_positions.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(&self.jump_positions);
        bounds.push(self.len);
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Expands the solution into a full-length piecewise-constant signal.
    pub fn reconstruct(&self) -> Signal1D {
        let channels = self.segment_values.first().map_or(1, Vec::len);
        let mut samples = Vec::with_capacity(self.len * channels);
        for ((start, end), value) in self.segments().into_iter().zip(&self.segment_values) {
            for _ in start..end {
                samples.extend_from_slice(value);
            }
        }
        Signal1D { channels, samples }
    }
}

/// Prefix sums of the samples (per channel) and of their squared norms.
#[derive(Clone, Debug, Default)]
pub struct MomentTable {
    channels: usize,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl MomentTable {
    pub fn new(samples: &[f64], channels: usize) -> Self {
        let mut table = Self::default();
        table.rebuild(samples, channels);
        table
    }

    fn rebuild(&mut self, samples: &[f64], channels: usize) {
        let n = samples.len() / channels;
        self.channels = channels;
        self.first.clear();
        self.second.clear();
        self.first.resize((n + 1) * channels, 0.0);
        self.second.resize(n + 1, 0.0);
        for i in 0..n {
            let mut sq = 0.0;
            for c in 0..channels {
                let v = samples[i * channels + c];
                self.first[(i + 1) * channels + c] = self.first[i * channels + c] + v;
                sq += v * v;
            }
            self.second[i + 1] = self.second[i] + sq;
        }
    }

    pub fn len(&self) -> usize {
        self.second.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of squared norms over `[start, end)`.
    pub fn energy(&self, start: usize, end: usize) -> f64 {
        self.second[end] - self.second[start]
    }

    /// Squared deviation from the mean over the half-open range `[start, end)`.
    pub fn deviation(&self, start: usize, end: usize) -> f64 {
        let c = self.channels;
        let inv_len = 1.0 / (end - start) as f64;
        let mut mean_sq = 0.0;
        for k in 0..c {
            let s = self.first[end * c + k] - self.first[start * c + k];
            mean_sq += s * s;
        }
        (self.energy(start, end) - mean_sq * inv_len).max(0.0)
    }

    pub fn mean_into(&self, start: usize, end: usize, out: &mut [f64]) {
        let c = self.channels;
        let inv_len = 1.0 / (end - start) as f64;
        for (k, o) in out.iter_mut().enumerate().take(c) {
            *o = (self.first[end * c + k] - self.first[start * c + k]) * inv_len;
        }
    }
}

/// Reusable solver; keeps its scratch buffers between calls.
#[derive(Clone, Debug)]
pub struct PottsSolver1D {
    pruning: bool,
    moments: MomentTable,
    best: Vec<f64>,
    last_start: Vec<usize>,
}

impl Default for PottsSolver1D {
    fn default() -> Self {
        Self::new(true)
    }
}

impl PottsSolver1D {
    pub fn new(pruning: bool) -> Self {
        Self {
            pruning,
            moments: MomentTable::default(),
            best: Vec::new(),
            last_start: Vec::new(),
        }
    }

    pub fn solve(&mut self, data: &Signal1D, gamma: f64) -> Result<PottsSolution1D> {
        check_gamma(gamma)?;
        let energy = self.run(data.samples(), data.channels(), gamma);
        let n = data.len();
        let mut starts = Vec::new();
        let mut r = n;
        while r > 0 {
            let l = self.last_start[r];
            starts.push(l);
            r = l;
        }
        starts.reverse();
        let mut segment_values = Vec::with_capacity(starts.len());
        for (i, &start) in starts.iter().enumerate() {
            let end = starts.get(i + 1).copied().unwrap_or(n);
            let mut value = vec![0.0; data.channels()];
            self.moments.mean_into(start, end, &mut value);
            segment_values.push(value);
        }
        Ok(PottsSolution1D {
            jump_positions: starts[1..].to_vec(),
            segment_values,
            energy,
            len: n,
        })
    }

    /// Solves in place on raw interleaved samples and writes the minimizer to
    /// `out`. Returns the minimal energy. Inputs are assumed valid.
    pub fn solve_into(&mut self, samples: &[f64], channels: usize, gamma: f64, out: &mut [f64]) -> f64 {
        let energy = self.run(samples, channels, gamma);
        let mut end = samples.len() / channels;
        while end > 0 {
            let start = self.last_start[end];
            let (head, _) = out.split_at_mut(end * channels);
            let segment = &mut head[start * channels..];
            self.moments.mean_into(start, end, &mut segment[..channels]);
            for i in 1..end - start {
                segment.copy_within(0..channels, i * channels);
            }
            end = start;
        }
        energy
    }

    fn run(&mut self, samples: &[f64], channels: usize, gamma: f64) -> f64 {
        let n = samples.len() / channels;
        self.moments.rebuild(samples, channels);
        self.best.clear();
        self.best.resize(n + 1, 0.0);
        self.last_start.clear();
        self.last_start.resize(n + 1, 0);
        self.best[0] = -gamma;

        for r in 1..=n {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            if self.pruning {
                for l in (0..r).rev() {
                    let d = self.moments.deviation(l, r);
                    // Slack covers rounding in the moment differences so the
                    // cut never removes a numerically better candidate.
                    if d - best > 1e-12 * self.moments.energy(l, r) {
                        break;
                    }
                    let candidate = self.best[l] + gamma + d;
                    if candidate <= best {
                        best = candidate;
                        arg = l;
                    }
                }
            } else {
                for l in 0..r {
                    let candidate = self.best[l] + gamma + self.moments.deviation(l, r);
                    if candidate < best {
                        best = candidate;
                        arg = l;
                    }
                }
            }
            self.best[r] = best;
            self.last_start[r] = arg;
        }
        self.best[n]
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive and finite, got {gamma}")));
    }
    Ok(())
}

/// Solves the univariate Potts problem exactly (with pruning).
pub fn solve_potts_1d(data: &Signal1D, gamma: f64) -> Result<PottsSolution1D> {
    PottsSolver1D::new(true).solve(data, gamma)
}

/// Evaluates `γ · jumps(signal) + ‖signal − data‖²`.
pub fn potts_energy_1d(signal: &Signal1D, data: &Signal1D, gamma: f64) -> Result<f64> {
    if signal.len() != data.len() || signal.channels() != data.channels() {
        return Err(Error::shape(format!(
            "signal {}x{} vs data {}x{}",
            signal.len(),
            signal.channels(),
            data.len(),
            data.channels()
        )));
    }
    let jumps = (1..signal.len())
        .filter(|&i| signal.sample(i) != signal.sample(i - 1))
        .count();
    let fidelity: f64 = signal
        .samples()
        .iter()
        .zip(data.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(gamma * jumps as f64 + fidelity)
}
