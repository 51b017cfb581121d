use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place 2D DFT of a row-major `width × height` buffer (rows, then
/// columns). The inverse is unnormalized, as in `rustfft`.
pub(crate) fn fft2(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    row_fft.process(buf);

    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = buf[y * width + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            buf[y * width + x] = *c;
        }
    }
}
