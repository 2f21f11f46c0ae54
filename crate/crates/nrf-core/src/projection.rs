//! Spoke-wise transform of k-space into projection data.
//!
//! Each spoke's 1D inverse transform, scaled by the frequency spacing so
//! the sum approximates the continuous integral, yields the image's line
//! integrals at that angle. The r grid is reciprocal to the omega grid:
//! `delta_r * delta_omega * n_omega = 1`, spanning `sqrt(2) V`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::forward::{simulate_analytic, RadialKSpace};
use crate::fourier::{offset_idft_direct, offset_idft_fft};
use crate::geometry::make_direction;
use crate::phantom::{analytic_projection, PhantomSpec};
use crate::sampling::{AngleSchedule, OmegaGrid};

/// Uniform offset grid `r_j = r0 + j * delta_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RGrid {
    pub n: usize,
    pub delta_r: f64,
    pub r0: f64,
}

impl RGrid {
    /// Reciprocal grid of an omega grid: spacing `sqrt(2) V / n_omega`
    /// starting at `-sqrt(2) V / 2`.
    pub fn reciprocal(omega_grid: &OmegaGrid) -> RGrid {
        let span = std::f64::consts::SQRT_2 * omega_grid.extent_v;
        RGrid {
            n: omega_grid.n_omega,
            delta_r: span / omega_grid.n_omega as f64,
            r0: -span / 2.0,
        }
    }

    pub fn value(&self, j: usize) -> f64 {
        self.r0 + j as f64 * self.delta_r
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.value(j)).collect()
    }
}

/// Projection samples `P[j * n_r + m]`, spoke-major, complex valued.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub schedule: AngleSchedule,
    pub r_grid: RGrid,
    pub samples: Vec<Complex64>,
}

impl Sinogram {
    pub fn n_spokes(&self) -> usize {
        self.schedule.len()
    }

    pub fn n_r(&self) -> usize {
        self.r_grid.n
    }

    pub fn spoke(&self, j: usize) -> &[Complex64] {
        &self.samples[j * self.r_grid.n..(j + 1) * self.r_grid.n]
    }
}

/// Per-spoke inverse transform, FFT route with explicit center phases.
pub fn kspace_to_sinogram(k: &RadialKSpace) -> Sinogram {
    let r_grid = RGrid::reciprocal(&k.omega_grid);
    let og = &k.omega_grid;
    let mut planner = FftPlanner::new();
    let mut samples = Vec::with_capacity(k.samples.len());
    for j in 0..k.n_spokes() {
        let p = offset_idft_fft(
            k.spoke(j),
            og.omegas[0],
            og.delta_omega,
            r_grid.r0,
            r_grid.delta_r,
            og.delta_omega,
            &mut planner,
        );
        samples.extend(p);
    }
    Sinogram {
        schedule: k.schedule.clone(),
        r_grid,
        samples,
    }
}

/// Same transform evaluated term by term; oracle route for tests.
pub fn kspace_to_sinogram_direct(k: &RadialKSpace) -> Sinogram {
    let r_grid = RGrid::reciprocal(&k.omega_grid);
    let og = &k.omega_grid;
    let mut samples = Vec::with_capacity(k.samples.len());
    for j in 0..k.n_spokes() {
        let p = offset_idft_direct(
            k.spoke(j),
            og.omegas[0],
            og.delta_omega,
            r_grid.r0,
            r_grid.delta_r,
            r_grid.n,
            og.delta_omega,
        );
        samples.extend(p);
    }
    Sinogram {
        schedule: k.schedule.clone(),
        r_grid,
        samples,
    }
}

/// Max over spokes of the relative L2 distance between a sinogram and the
/// phantom's exact projections on the same grid. Returns 0 when both sides
/// vanish.
pub fn sinogram_residual_vs_analytic(spec: &PhantomSpec, sino: &Sinogram) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (j, &phi) in sino.schedule.angles.iter().enumerate() {
        let dir = make_direction(phi)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (m, p) in sino.spoke(j).iter().enumerate() {
            let truth = analytic_projection(spec, sino.r_grid.value(m), &dir);
            num += (p - Complex64::new(truth, 0.0)).norm_sqr();
            den += truth * truth;
        }
        if den == 0.0 {
            if num > 0.0 {
                worst = worst.max(f64::INFINITY);
            }
            continue;
        }
        worst = worst.max((num / den).sqrt());
    }
    Ok(worst)
}

/// Noiseless end-to-end check of the slice identity: simulate, transform,
/// compare against the analytic projections.
pub fn slice_theorem_residual(
    spec: &PhantomSpec,
    schedule: &AngleSchedule,
    omega_grid: &OmegaGrid,
) -> Result<f64> {
    let k = simulate_analytic(spec, schedule, omega_grid, 0.0, 0)?;
    let sino = kspace_to_sinogram(&k);
    sinogram_residual_vs_analytic(spec, &sino)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{make_omega_grid, make_schedule, Scheme};
    use rand::Rng;

    #[test]
    fn reciprocal_grid_identity() {
        for n in [16usize, 64, 128, 320] {
            let og = make_omega_grid(n, n as f64).unwrap();
            let rg = RGrid::reciprocal(&og);
            assert!((rg.delta_r * og.delta_omega * og.n_omega as f64 - 1.0).abs() < 1e-12);
            assert_eq!(rg.n, og.n_omega);
        }
    }

    #[test]
    fn zero_spoke_transforms_to_zero() {
        let sched = make_schedule(Scheme::Uniform, 16, 4.0, 0).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let k = RadialKSpace {
            schedule: sched,
            omega_grid: og,
            samples: vec![Complex64::new(0.0, 0.0); 6 * 22],
            noise_sigma: 0.0,
        };
        let sino = kspace_to_sinogram(&k);
        assert!(sino.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn flat_spoke_collapses_at_r_zero() {
        // K = 1 everywhere: P(0) = d_omega * n_omega (~ 1/delta)
        let sched = make_schedule(Scheme::Uniform, 64, 8.0, 0).unwrap();
        let og = make_omega_grid(64, 64.0).unwrap();
        let n = og.n_omega;
        assert_eq!(n % 2, 0, "even count puts r = 0 on the grid");
        let k = RadialKSpace {
            schedule: sched.clone(),
            omega_grid: og.clone(),
            samples: vec![Complex64::new(1.0, 0.0); sched.len() * n],
            noise_sigma: 0.0,
        };
        let sino = kspace_to_sinogram(&k);
        let mid = n / 2;
        assert!((sino.r_grid.value(mid)).abs() < 1e-12);
        let expect = og.delta_omega * n as f64;
        let got = sino.spoke(0)[mid];
        assert!((got.re - expect).abs() < 1e-10, "{got} vs {expect}");
        assert!(got.im.abs() < 1e-10);
        // and the collapse value is within a percent of 1/delta
        assert!((expect - 1.0 / og.delta).abs() < 0.01 * (1.0 / og.delta));
    }

    #[test]
    fn direct_and_fft_routes_agree_on_random_spokes() {
        let mut rng = crate::rng::derive_rng(4, "proj", 0);
        for n in [16usize, 64, 128] {
            let sched = make_schedule(Scheme::Golden, n, 8.0, 0).unwrap();
            let og = make_omega_grid(n, n as f64).unwrap();
            let samples: Vec<Complex64> = (0..sched.len() * og.n_omega)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let k = RadialKSpace { schedule: sched, omega_grid: og, samples, noise_sigma: 0.0 };
            let a = kspace_to_sinogram(&k);
            let b = kspace_to_sinogram_direct(&k);
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn transform_is_linear_in_kspace() {
        let mut rng = crate::rng::derive_rng(8, "proj-lin", 0);
        let sched = make_schedule(Scheme::Uniform, 16, 8.0, 0).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let len = sched.len() * og.n_omega;
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Complex64> {
            (0..len).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
        };
        let sa = mk(&mut rng);
        let sb = mk(&mut rng);
        let mixed: Vec<Complex64> = sa.iter().zip(&sb).map(|(a, b)| 2.5 * a - 0.75 * b).collect();
        let wrap = |samples: Vec<Complex64>| RadialKSpace {
            schedule: sched.clone(),
            omega_grid: og.clone(),
            samples,
            noise_sigma: 0.0,
        };
        let pa = kspace_to_sinogram(&wrap(sa));
        let pb = kspace_to_sinogram(&wrap(sb));
        let pm = kspace_to_sinogram(&wrap(mixed));
        for i in 0..len {
            let expect = 2.5 * pa.samples[i] - 0.75 * pb.samples[i];
            assert!((pm.samples[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn disk_spoke_matches_analytic_projection() {
        // band-limit truncation dominates the residual; at n = 128 it sits
        // below the 1e-2 contract (at n = 64 it measures ~1.9e-2)
        let spec = PhantomSpec::builtin("simple", 128.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 128, 8.0, 0).unwrap();
        let og = make_omega_grid(128, 128.0).unwrap();
        let k = simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
        let sino = kspace_to_sinogram(&k);
        let res = sinogram_residual_vs_analytic(&spec, &sino).unwrap();
        assert!(res < 1e-2, "residual {res}");
        // imaginary residue stays at discretization level for real phantoms;
        // the asymmetric frequency window leaves an O(d_omega * K_edge)
        // imaginary part, measured ~4e-4 of the peak here
        let max_p = sino.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let max_im = sino.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(max_im <= 1e-3 * max_p, "imag {max_im} vs max {max_p}");
    }

    #[test]
    fn empty_spec_residual_is_zero() {
        let spec = PhantomSpec::new(vec![], 16.0).unwrap();
        let sched = make_schedule(Scheme::Uniform, 16, 4.0, 0).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let res = slice_theorem_residual(&spec, &sched, &og).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn residual_grows_with_noise() {
        // small extent so absolute noise sigmas register against the
        // phantom's O(1) k-space values, and a fine grid so the noiseless
        // truncation floor sits below the smallest sigma's contribution
        let spec = PhantomSpec::builtin("simple", 2.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 128, 8.0, 0).unwrap();
        let og = make_omega_grid(128, 2.0).unwrap();
        let mut residuals = Vec::new();
        for sigma in [0.0, 1e-3, 1e-2] {
            let k = simulate_analytic(&spec, &sched, &og, sigma, 3).unwrap();
            let sino = kspace_to_sinogram(&k);
            residuals.push(sinogram_residual_vs_analytic(&spec, &sino).unwrap());
        }
        assert!(residuals[0] < residuals[1] && residuals[1] < residuals[2], "{residuals:?}");
    }

    #[test]
    fn spoke_mass_tracks_low_frequency_kspace() {
        // delta_r * sum_m P(r_m) approximates the spoke's zero-frequency
        // value; the grid is offset so the nearest sample sits up to half a
        // cell from omega = 0 and the comparison carries that bias
        let spec = PhantomSpec::builtin("shepp-logan", 64.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 64, 8.0, 0).unwrap();
        let og = make_omega_grid(64, 64.0).unwrap();
        let k = simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
        let sino = kspace_to_sinogram(&k);
        let near0 = og
            .omegas
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        for (j, &phi) in sched.angles.iter().enumerate() {
            let mass = sino.spoke(j).iter().sum::<Complex64>() * sino.r_grid.delta_r;
            // strong form: the quadrature reproduces the analytic DC value
            let dir = make_direction(phi).unwrap();
            let k0_true = crate::phantom::analytic_kspace(&spec, 0.0, &dir);
            let rel_true = (mass - k0_true).norm() / k0_true.norm();
            assert!(rel_true < 5e-3, "spoke {j}: mass {mass} vs K(0) {k0_true} rel {rel_true}");
            // weak form against the measured grid: the nearest sample sits
            // ~0.25 cells from DC, which alone shifts K by a few percent
            let k0 = k.spoke(j)[near0];
            let rel = (mass - k0).norm() / k0.norm();
            assert!(rel < 8e-2, "spoke {j}: mass {mass} vs K(near 0) {k0} rel {rel}");
        }
    }
}
