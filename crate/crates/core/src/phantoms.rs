//! Synthetic test objects with exact ground-truth partitions, and additive
//! Gaussian noise.
//!
//! Shapes are rasterized by point membership at pixel centers, so every
//! phantom is exactly piecewise constant and its ground truth is the set of
//! connected regions of equal value.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::admm::{extract_labels, LabelMap};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::DataVolume;

/// Generator behind [`add_noise`], recorded in run metadata.
pub const NOISE_GENERATOR: &str = "rand_chacha::ChaCha8Rng/rand_distr::StandardNormal";

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub image: Image,
    pub ground_truth: LabelMap,
}

impl Phantom {
    fn from_image(image: Image) -> Self {
        let ground_truth = extract_labels(&image, 0.0);
        Self { image, ground_truth }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SheppLoganVariant {
    /// High-contrast intensities (1, −0.8, −0.2, …).
    #[default]
    Modified,
    /// Low-contrast intensities (1, −0.98, −0.02, …).
    Standard,
}

/// (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
const MODIFIED_TABLE: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

const STANDARD_INTENSITIES: [f64; 10] = [1.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01];

// Accumulated intensities are snapped to this grid so regions that should
// share a value compare equal.
const VALUE_QUANTUM: f64 = 1e-9;

/// The ten-ellipse head phantom on `[-1, 1]²`, `n × n` pixels.
pub fn shepp_logan(n: usize, variant: SheppLoganVariant) -> Result<Phantom> {
    if n < 32 {
        return Err(Error::invalid(format!("Shepp-Logan phantom needs n ≥ 32, got {n}")));
    }
    let ellipses: Vec<[f64; 6]> = MODIFIED_TABLE
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut e = *row;
            if variant == SheppLoganVariant::Standard {
                e[0] = STANDARD_INTENSITIES[i];
            }
            e
        })
        .collect();
    let image = Image::from_fn(n, n, |x, y| {
        let v: f64 = ellipses
            .iter()
            .filter(|e| inside_ellipse(e, x, y))
            .map(|e| e[0])
            .sum();
        (v / VALUE_QUANTUM).round() * VALUE_QUANTUM
    });
    Ok(Phantom::from_image(image))
}

fn inside_ellipse(e: &[f64; 6], x: f64, y: f64) -> bool {
    let (s, c) = e[5].to_radians().sin_cos();
    let (dx, dy) = (x - e[3], y - e[4]);
    let xr = dx * c + dy * s;
    let yr = -dx * s + dy * c;
    (xr / e[1]).powi(2) + (yr / e[2]).powi(2) <= 1.0
}

const DISK: (f64, f64, f64, f64) = (-0.45, 0.4, 0.3, 0.35);
const RECTANGLE: (f64, f64, f64, f64, f64) = (0.15, 0.1, 0.75, 0.7, 0.65);
const POLYGON: (f64, f64, f64, usize, f64, f64) = (0.0, -0.45, 0.4, 5, 15.0, 1.0);

/// A disk, an axis-aligned rectangle and a rotated regular pentagon, at
/// distinct values on a zero background.
pub fn geometric_shapes(n: usize) -> Result<Phantom> {
    if n < 8 {
        return Err(Error::invalid(format!("geometric phantom needs n ≥ 8, got {n}")));
    }
    let (cx, cy, r, disk_value) = DISK;
    let (x0, y0, x1, y1, rect_value) = RECTANGLE;
    let (px, py, radius, sides, rotation, poly_value) = POLYGON;
    let vertices: Vec<(f64, f64)> = (0..sides)
        .map(|k| {
            let a = rotation.to_radians() + 2.0 * PI * k as f64 / sides as f64;
            (px + radius * a.cos(), py + radius * a.sin())
        })
        .collect();
    let image = Image::from_fn(n, n, |x, y| {
        if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
            disk_value
        } else if (x0..=x1).contains(&x) && (y0..=y1).contains(&y) {
            rect_value
        } else if inside_convex(&vertices, x, y) {
            poly_value
        } else {
            0.0
        }
    });
    Ok(Phantom::from_image(image))
}

/// Exact areas (disk, rectangle, polygon) of [`geometric_shapes`] in
/// physical units.
pub fn geometric_shape_areas() -> [f64; 3] {
    let (_, _, r, _) = DISK;
    let (x0, y0, x1, y1, _) = RECTANGLE;
    let (_, _, radius, sides, _, _) = POLYGON;
    let k = sides as f64;
    [
        PI * r * r,
        (x1 - x0) * (y1 - y0),
        0.5 * k * radius * radius * (2.0 * PI / k).sin(),
    ]
}

/// The values of the three shapes, in the order of [`geometric_shape_areas`].
pub fn geometric_shape_values() -> [f64; 3] {
    [DISK.3, RECTANGLE.4, POLYGON.5]
}

// Counter-clockwise vertices.
fn inside_convex(vertices: &[(f64, f64)], x: f64, y: f64) -> bool {
    (0..vertices.len()).all(|i| {
        let (ax, ay) = vertices[i];
        let (bx, by) = vertices[(i + 1) % vertices.len()];
        (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= 0.0
    })
}

/// Adds i.i.d. `N(0, σ²)` noise with `σ = level · ‖f‖∞`.
pub fn add_noise(f: &DataVolume, level: f64, seed: u64) -> Result<DataVolume> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::invalid(format!("noise level must be nonnegative, got {level}")));
    }
    let mut out = f.clone();
    if level == 0.0 {
        return Ok(out);
    }
    let sigma = level * f.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.data_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * e;
    }
    Ok(out)
}
