//! Classical reference reconstructions.
//!
//! * Zero-filled adjoint ("IFFT"): the density-compensated adjoint of the
//!   radial sampling operator, evaluated directly at pixel centers. Ramp
//!   compensation approximates the polar-quadrature Jacobian so the output
//!   lands on the reference intensity scale.
//! * INK: a fresh coordinate network fit to the observed k-space samples
//!   (frequency coordinate in, complex intensity out), evaluated on a full
//!   Cartesian grid and inverse transformed.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use std::f64::consts::{PI, TAU};

use crate::error::{NrfError, Result};
use crate::forward::RadialKSpace;
use crate::geometry::ImageGrid;
use crate::network::{EncodedBatch, MlpParams, PeConfig};
use crate::reconstructor::{evaluate_image_complex_grid, TrainConfig};
use crate::train::{Adam, GradEngine, RenderGroups};

/// Density compensation for the adjoint path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityCompensation {
    /// Weights proportional to `|omega|`; the sample nearest DC gets the
    /// half-cell average `d_omega / 4`.
    Ramp,
    /// Plain zero-filled adjoint.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GriddingConfig {
    pub density_compensation: DensityCompensation,
    pub n_out: usize,
}

/// Per-sample weights including the polar quadrature factors
/// `d_omega * pi / N_phi`, shared by every spoke.
pub fn ramp_weights(k: &RadialKSpace, dc: DensityCompensation) -> Vec<f64> {
    let og = &k.omega_grid;
    let quad = og.delta_omega * PI / k.n_spokes() as f64;
    let nearest_dc = og
        .omegas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i);
    og.omegas
        .iter()
        .enumerate()
        .map(|(i, &w)| match dc {
            DensityCompensation::None => quad,
            DensityCompensation::Ramp => {
                if Some(i) == nearest_dc {
                    quad * og.delta_omega / 4.0
                } else {
                    quad * w.abs()
                }
            }
        })
        .collect()
}

/// Density-compensated adjoint evaluated at the pixel centers of an
/// `n_out` grid spanning the acquisition field of view.
pub fn adjoint_reconstruct(k: &RadialKSpace, cfg: &GriddingConfig) -> Result<ImageGrid> {
    crate::threads::ensure_pool();
    let weights = ramp_weights(k, cfg.density_compensation);
    let extent = k.omega_grid.extent_v;
    let n = cfg.n_out;
    let mut grid = ImageGrid::zeros(n, extent)?;
    let delta = grid.delta();
    // per-sample weighted values and their frequency vectors
    let mut freqs = Vec::with_capacity(k.samples.len());
    let mut vals = Vec::with_capacity(k.samples.len());
    for (j, &phi) in k.schedule.angles.iter().enumerate() {
        let (s, c) = phi.sin_cos();
        for (idx, &w) in k.omega_grid.omegas.iter().enumerate() {
            freqs.push([w * c, w * s]);
            vals.push(k.spoke(j)[idx] * weights[idx]);
        }
    }
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0 = (i as f64 + 0.5) * delta - extent / 2.0;
            (0..n)
                .map(|jj| {
                    let x1 = (jj as f64 + 0.5) * delta - extent / 2.0;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (f, v) in freqs.iter().zip(&vals) {
                        let phase = TAU * (f[0] * x0 + f[1] * x1);
                        let (ps, pc) = phase.sin_cos();
                        acc += v * Complex64::new(pc, ps);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        grid.values_mut()[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    Ok(grid)
}

/// Normalized frequency coordinate of a k-space sample: the sampled band
/// `[-1/(2 delta), 1/(2 delta)]^2` maps into `[0, 1]^2`.
pub fn ink_coordinate(omega: f64, phi: f64, delta: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    let half_band = 1.0 / (2.0 * delta);
    [(omega * c + half_band) * delta, (omega * s + half_band) * delta]
}

/// Fits a fresh network to the observed k-space samples (frequency
/// coordinate in, complex intensity out) by mean squared error.
pub fn ink_fit(k: &RadialKSpace, cfg: &TrainConfig, pe: &PeConfig) -> Result<MlpParams> {
    cfg.validate()?;
    if k.samples.is_empty() {
        return Err(NrfError::config("no k-space observations to fit"));
    }
    crate::threads::ensure_pool();
    let delta = k.omega_grid.delta;
    let mut pts = Vec::with_capacity(k.samples.len());
    for &phi in &k.schedule.angles {
        for &w in &k.omega_grid.omegas {
            pts.push(ink_coordinate(w, phi, delta));
        }
    }
    let enc = EncodedBatch::from_points(&pts, pe);
    let groups = RenderGroups::singleton(pts.len());
    let targets = k.samples.clone();
    let selected: Vec<usize> = (0..pts.len()).collect();

    let mut params = MlpParams::standard(pe, cfg.seed);
    let mut adam = Adam::new(&params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut engine = GradEngine::new(&params, enc.dim, &groups);
    for step in 0..cfg.steps {
        let (loss, grad) = engine.loss_and_grad(&params, &enc, &groups, &targets, &selected);
        if !loss.is_finite() {
            return Err(NrfError::Diverged { step });
        }
        adam.step(&mut params, grad);
    }
    Ok(params)
}

/// K-space interpolation by neural representation: fit the observed radial
/// samples, evaluate the full Cartesian frequency grid, inverse transform,
/// and return the magnitude.
pub fn ink_reconstruct(
    k: &RadialKSpace,
    cfg: &TrainConfig,
    pe: &PeConfig,
    n_out: usize,
) -> Result<ImageGrid> {
    let params = ink_fit(k, cfg, pe)?;
    ink_render_image(&params, pe, n_out, k.omega_grid.extent_v, k.omega_grid.delta)
}

/// Evaluates a trained k-space network on the centered Cartesian grid and
/// applies the centered inverse DFT; magnitude image out.
pub fn ink_render_image(
    params: &MlpParams,
    pe: &PeConfig,
    n_out: usize,
    extent_v: f64,
    delta: f64,
) -> Result<ImageGrid> {
    let half_band = 1.0 / (2.0 * delta);
    let dxi = 1.0 / (n_out as f64 * delta);
    // frequency samples xi_m = (m - n/2) dxi span [-1/(2 delta), 1/(2 delta))
    let mut kgrid = evaluate_image_complex_grid(params, pe, n_out, |m| {
        (m as f64 - n_out as f64 / 2.0) * dxi * delta + half_band * delta
    })?;
    // centered inverse 2D DFT with physical scaling dxi^2
    let mut planner = FftPlanner::new();
    centered_idft2(&mut kgrid, n_out, dxi, delta, &mut planner);
    let values = kgrid.into_iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
    ImageGrid::from_values(n_out, extent_v, values)
}

/// In-place centered inverse 2D DFT: rows then columns of
/// `sum_m K_m exp(+2 pi i xi_m x_v)` with `xi_m = (m - n/2) dxi` and pixel
/// centers `x_v = (v + 1/2) delta - n delta / 2`, scaled by `dxi` per axis.
fn centered_idft2(
    data: &mut [Complex64],
    n: usize,
    dxi: f64,
    delta: f64,
    planner: &mut FftPlanner<f64>,
) {
    let xi0 = -(n as f64) / 2.0 * dxi;
    let x0 = 0.5 * delta - n as f64 * delta / 2.0;
    let axis = |buf: &mut Vec<Complex64>, planner: &mut FftPlanner<f64>| {
        let p = crate::fourier::offset_idft_fft(buf, xi0, dxi, x0, delta, dxi, planner);
        buf.copy_from_slice(&p);
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    // rows
    for r in 0..n {
        buf.copy_from_slice(&data[r * n..(r + 1) * n]);
        axis(&mut buf, planner);
        data[r * n..(r + 1) * n].copy_from_slice(&buf);
    }
    // columns
    for c in 0..n {
        for r in 0..n {
            buf[r] = data[r * n + c];
        }
        axis(&mut buf, planner);
        for r in 0..n {
            data[r * n + c] = buf[r];
        }
    }
}
