//! Finite-difference neighborhood systems and their jump weights.
//!
//! A system is a list of integer displacements `p_s` with pairwise distinct
//! slopes and positive weights `ω_s`. The weighted jump count
//! `Σ_s ω_s ‖∇_{p_s} u‖₀` approximates the boundary length; the weights are
//! chosen so that straight edges along every system direction are measured
//! with their Euclidean length.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Displacement = [i64; 2];

/// Tolerance for the weight conditions and the `‖p_s‖_N = ‖p_s‖₂` invariant.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

const COUNT_GRID: usize = 512;
const COUNT_MARGIN: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSystem {
    displacements: Vec<Displacement>,
    weights: Vec<f64>,
}

impl NeighborhoodSystem {
    pub fn new(displacements: Vec<Displacement>, weights: Vec<f64>) -> Result<Self> {
        validate_displacements(&displacements)?;
        if weights.len() != displacements.len() {
            return Err(Error::shape(format!(
                "{} displacements but {} weights",
                displacements.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("weights must be positive, got {w}")));
        }
        let system = Self {
            displacements,
            weights,
        };
        for p in &system.displacements {
            let v = [p[0] as f64, p[1] as f64];
            let induced = induced_norm(&system, v);
            let euclid = v[0].hypot(v[1]);
            if (induced - euclid).abs() > WEIGHT_TOLERANCE * euclid.max(1.0) {
                return Err(Error::UnsupportedNeighborhood(format!(
                    "weights measure {p:?} with length {induced}, expected {euclid}"
                )));
            }
        }
        Ok(system)
    }

    /// Builds a system whose weights are derived by [`derive_weights`].
    pub fn with_derived_weights(displacements: Vec<Displacement>) -> Result<Self> {
        let weights = derive_weights(&displacements)?;
        Self::new(displacements, weights)
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    pub fn displacements(&self) -> &[Displacement] {
        &self.displacements
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn level_displacements(level: u8) -> Result<Vec<Displacement>> {
    let mut d = vec![[1, 0], [0, 1]];
    if level >= 1 {
        d.extend([[1, 1], [1, -1]]);
    }
    if level >= 2 {
        d.extend([[2, 1], [-2, 1], [1, 2], [1, -2]]);
    }
    if level > 2 {
        return Err(Error::invalid(format!(
            "neighborhood level must be 0, 1 or 2, got {level}"
        )));
    }
    Ok(d)
}

/// The axis system (level 0), the system with diagonals (level 1) or the
/// knight-move system (level 2), with closed-form weights.
pub fn build_system(level: u8) -> Result<NeighborhoodSystem> {
    let displacements = level_displacements(level)?;
    let s2 = 2f64.sqrt();
    let s5 = 5f64.sqrt();
    let weights = match level {
        0 => vec![1.0, 1.0],
        1 => vec![s2 - 1.0, s2 - 1.0, 1.0 - s2 / 2.0, 1.0 - s2 / 2.0],
        _ => {
            let knight = 0.5 * (1.0 + s2 - s5);
            vec![
                s5 - 2.0,
                s5 - 2.0,
                s5 - 1.5 * s2,
                s5 - 1.5 * s2,
                knight,
                knight,
                knight,
                knight,
            ]
        }
    };
    NeighborhoodSystem::new(displacements, weights)
}

fn validate_displacements(displacements: &[Displacement]) -> Result<()> {
    if displacements.len() < 2 {
        return Err(Error::invalid("a neighborhood needs at least two displacements"));
    }
    for (i, p) in displacements.iter().enumerate() {
        if *p == [0, 0] {
            return Err(Error::invalid("zero displacement"));
        }
        for q in &displacements[..i] {
            // Same slope iff the vectors are parallel.
            if p[0] * q[1] - p[1] * q[0] == 0 {
                return Err(Error::invalid(format!(
                    "displacements {q:?} and {p:?} share a slope"
                )));
            }
        }
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Derives weights from the jump-counting conditions.
///
/// For every direction `(x, y)` of the system a binary half-plane image with
/// an edge along that direction is drawn on a 512×512 grid. Each
/// displacement's jump count, taken per column over an interior window
/// (per row when `|y/x| > 1`), forms one row of an S×S linear system whose
/// right-hand side is the Euclidean edge length per column,
/// `√(x² + y²)/|x|`. The window width is a multiple of every displacement
/// component so the periodic crossing pattern is counted without
/// truncation.
pub fn derive_weights(displacements: &[Displacement]) -> Result<Vec<f64>> {
    validate_displacements(displacements)?;
    let reach = displacements
        .iter()
        .map(|p| p[0].unsigned_abs().max(p[1].unsigned_abs()) as usize)
        .max()
        .unwrap_or(1);
    if reach >= COUNT_MARGIN {
        return Err(Error::UnsupportedNeighborhood(format!(
            "displacement reach {reach} exceeds the counting margin"
        )));
    }
    let period = displacements
        .iter()
        .flat_map(|p| [p[0].unsigned_abs() as usize, p[1].unsigned_abs() as usize])
        .filter(|&v| v > 0)
        .fold(1, |acc, v| acc / gcd(acc, v) * v);
    let available = COUNT_GRID - 2 * COUNT_MARGIN;
    let window = available - available % period;
    if window == 0 {
        return Err(Error::UnsupportedNeighborhood(format!(
            "crossing period {period} exceeds the counting window"
        )));
    }

    let s = displacements.len();
    let mut matrix = DMatrix::<f64>::zeros(s, s);
    let mut rhs = DVector::<f64>::zeros(s);
    let n = COUNT_GRID as i64;
    let center = n / 2;

    for (row, d) in displacements.iter().enumerate() {
        let (x, y) = (d[0], d[1]);
        let image: Vec<bool> = (0..n * n)
            .map(|idx| {
                let (a, b) = (idx % n - center, idx / n - center);
                x * b - y * a > 0
            })
            .collect();
        let by_column = y.abs() <= x.abs();
        rhs[row] = ((x * x + y * y) as f64).sqrt() / if by_column { x.abs() } else { y.abs() } as f64;

        let lo = COUNT_MARGIN as i64;
        let hi = lo + window as i64;
        let inner = (reach as i64, n - reach as i64);
        let (cols, rows) = if by_column {
            ((lo, hi), inner)
        } else {
            (inner, (lo, hi))
        };
        for (col, p) in displacements.iter().enumerate() {
            let mut count = 0usize;
            for b in rows.0..rows.1 {
                for a in cols.0..cols.1 {
                    let here = image[(b * n + a) as usize];
                    let there = image[((b + p[1]) * n + a + p[0]) as usize];
                    if here != there {
                        count += 1;
                    }
                }
            }
            matrix[(row, col)] = count as f64 / window as f64;
        }
    }

    let solution = matrix
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::UnsupportedNeighborhood("singular weight conditions".into()))?;
    let residual = (&matrix * &solution - &rhs).amax();
    if !residual.is_finite() || residual > WEIGHT_TOLERANCE {
        return Err(Error::UnsupportedNeighborhood(format!(
            "weight conditions not satisfiable (residual {residual:e})"
        )));
    }
    Ok(solution.iter().copied().collect())
}

/// `‖p‖_N = Σ_s ω_s |⟨p, p_s⟩|`
pub fn induced_norm(system: &NeighborhoodSystem, p: [f64; 2]) -> f64 {
    system
        .displacements
        .iter()
        .zip(&system.weights)
        .map(|(q, w)| w * (p[0] * q[0] as f64 + p[1] * q[1] as f64).abs())
        .sum()
}

/// Ratio between the longest and the shortest Euclidean unit vector measured
/// in `‖·‖_N`, sampled on a uniform angle grid over the full circle.
pub fn isotropy_ratio(system: &NeighborhoodSystem, angular_samples: usize) -> Result<f64> {
    if angular_samples < 360 {
        return Err(Error::invalid(format!(
            "need at least 360 angular samples, got {angular_samples}"
        )));
    }
    let (lo, hi) = (0..angular_samples)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / angular_samples as f64;
            induced_norm(system, [phi.cos(), phi.sin()])
        })
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_has_unit_weights() {
        let s = build_system(0).unwrap();
        assert_eq!(s.weights(), &[1.0, 1.0]);
        assert_eq!(s.displacements(), &[[1, 0], [0, 1]]);
    }

    #[test]
    fn unknown_level_is_rejected() {
        assert!(build_system(3).is_err());
    }

    #[test]
    fn axis_norm_gap() {
        let s = build_system(0).unwrap();
        assert_eq!(induced_norm(&s, [0.0, 0.0]), 0.0);
        assert_eq!(induced_norm(&s, [1.0, 1.0]), 2.0);
    }

    #[test]
    fn parallel_displacements_are_rejected() {
        assert!(derive_weights(&[[1, 0], [0, 1], [2, 1], [-2, -1]]).is_err());
        assert!(NeighborhoodSystem::new(vec![[1, 0], [-1, 0]], vec![1.0, 1.0]).is_err());
        assert!(derive_weights(&[[1, 0]]).is_err());
    }

    #[test]
    fn wrong_weights_violate_euclidean_invariant() {
        let err = NeighborhoodSystem::new(vec![[1, 0], [0, 1], [1, 1], [1, -1]], vec![1.0; 4]);
        assert!(matches!(err, Err(Error::UnsupportedNeighborhood(_))));
    }

    #[test]
    fn derived_axis_weights() {
        let w = derive_weights(&[[1, 0], [0, 1]]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropy_needs_enough_samples() {
        assert!(isotropy_ratio(&build_system(0).unwrap(), 100).is_err());
    }
}
