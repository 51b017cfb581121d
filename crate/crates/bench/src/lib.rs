//! Fixtures shared by the benchmarks.

use potts_core::operators::{RadonGeometry, RadonTransform};
use potts_core::phantoms::{shepp_logan, SheppLoganVariant};
use potts_core::{DataVolume, ForwardOperator, Image, Signal1D};

/// A noisy-looking piecewise-constant test signal of length `n`.
pub fn step_signal(n: usize) -> Signal1D {
    let values: Vec<f64> = (0..n)
        .map(|i| ((i * 7 / n) as f64) + 0.05 * ((i as f64) * 1.3).sin())
        .collect();
    Signal1D::from_scalars(&values).expect("finite fixture")
}

/// Shepp-Logan phantom with its Radon transform and exact sinogram.
pub fn radon_instance(n: usize, angles: usize) -> (Image, RadonTransform, DataVolume) {
    let phantom = shepp_logan(n, SheppLoganVariant::Modified).expect("valid size");
    let shape = phantom.image.shape();
    let op = RadonTransform::new(RadonGeometry::for_image(shape, angles).expect("geometry"), shape)
        .expect("single channel");
    let data = op.apply(&phantom.image).expect("shape");
    (phantom.image, op, data)
}
