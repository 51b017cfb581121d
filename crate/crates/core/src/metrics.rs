//! Segmentation and reconstruction quality measures.

use std::collections::HashMap;

use crate::admm::LabelMap;
use crate::error::{Error, Result};
use crate::image::Image;

/// A labeling of `N` elements; label values are arbitrary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl From<&LabelMap> for Partition {
    fn from(map: &LabelMap) -> Self {
        Self::new(map.labels().to_vec())
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Fraction of element pairs on which `p` and `q` agree (both together or
/// both apart), from the contingency table.
pub fn rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape(format!("partitions of {} and {} elements", p.len(), q.len())));
    }
    if p.len() < 2 {
        return Err(Error::invalid("the Rand index needs at least two elements"));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in p.labels.iter().zip(&q.labels) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let total = pairs(p.len() as u64);
    let same_both: u64 = table.values().map(|&n| pairs(n)).sum();
    let same_p: u64 = rows.values().map(|&n| pairs(n)).sum();
    let same_q: u64 = cols.values().map(|&n| pairs(n)).sum();
    // agree = together in both + apart in both
    let agree = total + 2 * same_both - same_p - same_q;
    Ok(agree as f64 / total as f64)
}

/// `10 log₁₀(N ‖g‖∞² / ‖g − u‖²)` over all `N` samples; `+∞` for identical
/// images.
pub fn psnr(u: &Image, g: &Image) -> Result<f64> {
    if u.shape() != g.shape() {
        return Err(Error::shape(format!("PSNR of {:?} against {:?}", u.shape(), g.shape())));
    }
    let err = u.distance(g).powi(2);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = g.max_abs();
    Ok(10.0 * (g.data().len() as f64 * peak * peak / err).log10())
}
