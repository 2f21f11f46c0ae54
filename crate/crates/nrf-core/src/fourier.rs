//! Discrete transform kernels shared by the projection and baseline paths.

use num_complex::Complex64;
use rustfft::FftPlanner;

use std::f64::consts::TAU;

/// `out[m] = scale * sum_k values[k] exp(+2 pi i omega_k r_m)` evaluated
/// naively, one `sin_cos` per term. The slow, trustworthy route.
pub fn offset_idft_direct(
    values: &[Complex64],
    omega0: f64,
    delta_omega: f64,
    r0: f64,
    delta_r: f64,
    n_out: usize,
    scale: f64,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let r = r0 + m as f64 * delta_r;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in values.iter().enumerate() {
            let omega = omega0 + k as f64 * delta_omega;
            acc += v * Complex64::from_polar(1.0, TAU * omega * r);
        }
        out.push(acc * scale);
    }
    out
}

/// FFT evaluation of the same sum for reciprocal grids
/// (`delta_omega * delta_r * n == 1`, `n_out == values.len()`).
///
/// The phase splits as `omega_k r_m = omega_0 r_m + k d_omega r_0 + k m / n`,
/// so a pre-phase, an unnormalized inverse FFT and a post-phase reproduce
/// the direct sum.
pub fn offset_idft_fft(
    values: &[Complex64],
    omega0: f64,
    delta_omega: f64,
    r0: f64,
    delta_r: f64,
    scale: f64,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, TAU * (k as f64 * delta_omega) * r0))
        .collect();
    let fft = planner.plan_fft_inverse(n);
    fft.process(&mut buf);
    for (m, b) in buf.iter_mut().enumerate() {
        let r = r0 + m as f64 * delta_r;
        *b *= Complex64::from_polar(scale, TAU * omega0 * r);
    }
    buf
}
