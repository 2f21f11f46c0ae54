//! Radial k-space simulation.
//!
//! The default measurement path evaluates the phantom's exact continuous
//! transform on the sampled spokes, so reconstruction is never tested
//! against data produced by its own discretization. A discrete path over a
//! pixel grid exists for validating the rendering algebra in tests.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{NrfError, Result};
use crate::geometry::{make_direction, pixel_center, ImageGrid, Kernel, KernelKind};
use crate::phantom::{analytic_kspace, PhantomSpec};
use crate::rng::{derive_rng, NormalSource};
use crate::sampling::{AngleSchedule, OmegaGrid};

/// Radially sampled k-space: one row of `n_omega` complex samples per spoke.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKSpace {
    pub schedule: AngleSchedule,
    pub omega_grid: OmegaGrid,
    /// Spoke-major samples, `samples[j * n_omega + k]`.
    pub samples: Vec<Complex64>,
    /// Per-component standard deviation of the added complex noise
    /// (0 = noiseless).
    pub noise_sigma: f64,
}

impl RadialKSpace {
    pub fn n_spokes(&self) -> usize {
        self.schedule.len()
    }

    pub fn n_omega(&self) -> usize {
        self.omega_grid.n_omega
    }

    pub fn spoke(&self, j: usize) -> &[Complex64] {
        let n = self.n_omega();
        &self.samples[j * n..(j + 1) * n]
    }
}

/// Samples the exact phantom transform on the schedule, optionally adding
/// seeded complex Gaussian noise.
pub fn simulate_analytic(
    spec: &PhantomSpec,
    schedule: &AngleSchedule,
    omega_grid: &OmegaGrid,
    noise_sigma: f64,
    seed: u64,
) -> Result<RadialKSpace> {
    if (spec.extent_v() - omega_grid.extent_v).abs() > 1e-9 * omega_grid.extent_v {
        return Err(NrfError::domain(format!(
            "phantom extent {} does not match the frequency grid extent {}",
            spec.extent_v(),
            omega_grid.extent_v
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(NrfError::domain("noise sigma must be nonnegative"));
    }
    let n_omega = omega_grid.n_omega;
    let mut samples: Vec<Complex64> = schedule
        .angles
        .par_iter()
        .flat_map_iter(|&phi| {
            let dir = make_direction(phi).expect("schedule angles are in [0, pi)");
            omega_grid
                .omegas
                .iter()
                .map(move |&w| analytic_kspace(spec, w, &dir))
                .collect::<Vec<_>>()
        })
        .collect();
    debug_assert_eq!(samples.len(), schedule.len() * n_omega);
    if noise_sigma > 0.0 {
        let mut src = NormalSource::new(derive_rng(seed, "noise", 0));
        for s in samples.iter_mut() {
            let re = src.next();
            let im = src.next();
            *s += Complex64::new(noise_sigma * re, noise_sigma * im);
        }
    }
    Ok(RadialKSpace {
        schedule: schedule.clone(),
        omega_grid: omega_grid.clone(),
        samples,
        noise_sigma,
    })
}

/// Closed-form transform of one kernel copy at frequency `xi`.
fn kernel_transform(kernel: &Kernel, center: [f64; 2], xi: [f64; 2]) -> Complex64 {
    fn sinc(t: f64) -> f64 {
        let z = std::f64::consts::PI * t;
        if z.abs() < 1e-8 {
            1.0 - z * z / 6.0
        } else {
            z.sin() / z
        }
    }
    let d = kernel.delta;
    let shape = match kernel.kind {
        KernelKind::Square => sinc(d * xi[0]) * sinc(d * xi[1]),
        KernelKind::Bilinear => {
            let s0 = sinc(d * xi[0]);
            let s1 = sinc(d * xi[1]);
            s0 * s0 * s1 * s1
        }
    };
    let phase = -std::f64::consts::TAU * (center[0] * xi[0] + center[1] * xi[1]);
    Complex64::from_polar(shape, phase)
}

/// Transforms a pixel grid through the kernel expansion,
/// `sum_v X_v F[phi_v](omega theta)`. Quadratic in the pixel count; meant
/// for oracle tests, not production simulation.
pub fn simulate_discrete(
    grid: &ImageGrid,
    kernel: &Kernel,
    schedule: &AngleSchedule,
    omega_grid: &OmegaGrid,
) -> Result<RadialKSpace> {
    if (kernel.delta - grid.delta()).abs() > 1e-12 * grid.delta() {
        return Err(NrfError::domain("kernel pixel size does not match the grid"));
    }
    let n = grid.n();
    let centers: Vec<[f64; 2]> = (1..=n)
        .flat_map(|v1| (1..=n).map(move |v2| (v1, v2)))
        .map(|v| pixel_center(grid, v).expect("in range"))
        .collect();
    let mut samples = Vec::with_capacity(schedule.len() * omega_grid.n_omega);
    for &phi in &schedule.angles {
        let dir = make_direction(phi)?;
        for &w in &omega_grid.omegas {
            let xi = [w * dir.theta[0], w * dir.theta[1]];
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, x) in centers.iter().zip(grid.values()) {
                if x.norm_sqr() != 0.0 {
                    acc += x * kernel_transform(kernel, *c, xi);
                }
            }
            samples.push(acc);
        }
    }
    Ok(RadialKSpace {
        schedule: schedule.clone(),
        omega_grid: omega_grid.clone(),
        samples,
        noise_sigma: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::eval_continuous;
    use crate::phantom::Ellipse;
    use crate::sampling::{make_omega_grid, make_schedule, Scheme};
    use rand::Rng;

    fn simple_spec(extent: f64) -> PhantomSpec {
        PhantomSpec::builtin("simple", extent).unwrap()
    }

    #[test]
    fn empty_phantom_simulates_to_zero() {
        let spec = PhantomSpec::new(vec![], 16.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 16, 2.0, 0).unwrap();
        let grid = make_omega_grid(16, 16.0).unwrap();
        let k = simulate_analytic(&spec, &sched, &grid, 0.0, 0).unwrap();
        assert!(k.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn samples_match_pointwise_analytic_evaluation() {
        let spec = simple_spec(16.0);
        let sched = make_schedule(Scheme::Golden, 16, 3.0, 0).unwrap();
        let grid = make_omega_grid(16, 16.0).unwrap();
        let k = simulate_analytic(&spec, &sched, &grid, 0.0, 0).unwrap();
        for (j, &phi) in sched.angles.iter().enumerate() {
            let dir = make_direction(phi).unwrap();
            for (idx, &w) in grid.omegas.iter().enumerate() {
                let expect = analytic_kspace(&spec, w, &dir);
                assert_eq!(k.spoke(j)[idx], expect);
            }
        }
    }

    #[test]
    fn union_linearity_is_exact() {
        let a = PhantomSpec::new(
            vec![Ellipse { center: [1.0, -2.0], semi_axes: (3.0, 2.0), angle: 0.4, density: 0.7 }],
            16.0,
        )
        .unwrap();
        let b = PhantomSpec::new(
            vec![Ellipse { center: [-2.0, 1.5], semi_axes: (2.0, 4.0), angle: -0.2, density: -0.3 }],
            16.0,
        )
        .unwrap();
        let both = a.union(&b).unwrap();
        let sched = make_schedule(Scheme::Uniform, 16, 2.0, 0).unwrap();
        let grid = make_omega_grid(16, 16.0).unwrap();
        let ka = simulate_analytic(&a, &sched, &grid, 0.0, 0).unwrap();
        let kb = simulate_analytic(&b, &sched, &grid, 0.0, 0).unwrap();
        let kab = simulate_analytic(&both, &sched, &grid, 0.0, 0).unwrap();
        for i in 0..kab.samples.len() {
            assert_eq!(kab.samples[i], ka.samples[i] + kb.samples[i]);
        }
    }

    #[test]
    fn noiseless_data_conjugate_symmetric_at_mirrored_frequencies() {
        // the offset grid has no exact on-grid mirror pairs, so the mirror
        // value comes from the analytic transform
        let spec = simple_spec(16.0);
        let sched = make_schedule(Scheme::Golden, 16, 3.0, 1).unwrap();
        let grid = make_omega_grid(16, 16.0).unwrap();
        let k = simulate_analytic(&spec, &sched, &grid, 0.0, 0).unwrap();
        for (j, &phi) in sched.angles.iter().enumerate() {
            let dir = make_direction(phi).unwrap();
            for (idx, &w) in grid.omegas.iter().enumerate() {
                let mirror = analytic_kspace(&spec, -w, &dir);
                assert!((k.spoke(j)[idx] - mirror.conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn noise_is_seeded_and_has_the_requested_variance() {
        let spec = PhantomSpec::new(vec![], 128.0).unwrap();
        let sched = make_schedule(Scheme::Uniform, 128, 1.0, 5).unwrap();
        let grid = make_omega_grid(128, 128.0).unwrap();
        let sigma = 0.05;
        let k1 = simulate_analytic(&spec, &sched, &grid, sigma, 9).unwrap();
        let k2 = simulate_analytic(&spec, &sched, &grid, sigma, 9).unwrap();
        assert_eq!(k1.samples, k2.samples);
        let n = k1.samples.len() as f64;
        assert!(n > 1e4);
        let var_re = k1.samples.iter().map(|z| z.re * z.re).sum::<f64>() / n;
        let var_im = k1.samples.iter().map(|z| z.im * z.im).sum::<f64>() / n;
        for v in [var_re, var_im] {
            assert!((v - sigma * sigma).abs() < 0.1 * sigma * sigma, "var {v}");
        }
    }

    #[test]
    fn discrete_zero_grid_and_dc_normalization() {
        let grid = ImageGrid::zeros(4, 4.0).unwrap();
        let sched = make_schedule(Scheme::Uniform, 8, 2.0, 0).unwrap();
        // a handcrafted frequency grid that includes omega = 0
        let og = OmegaGrid {
            n_omega: 3,
            delta_omega: 0.25,
            omegas: vec![-0.25, 0.0, 0.25],
            extent_v: 4.0,
            delta: 1.0,
        };
        let kernel = Kernel::square(1.0);
        let k = simulate_discrete(&grid, &kernel, &sched, &og).unwrap();
        assert!(k.samples.iter().all(|z| z.norm() == 0.0));

        let mut one = ImageGrid::zeros(4, 4.0).unwrap();
        one.set((2, 3), Complex64::new(1.0, 0.0)).unwrap();
        let k = simulate_discrete(&one, &kernel, &sched, &og).unwrap();
        // kernel integrates to 1, so the zero-frequency sample is exactly 1
        for j in 0..sched.len() {
            assert!((k.spoke(j)[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn discrete_transform_matches_riemann_quadrature() {
        // midpoint quadrature on a mesh aligned with pixel edges, 512 cells
        // per pixel side, against both kernels on a random 4x4 grid
        let mut rng = crate::rng::derive_rng(7, "fwd-oracle", 0);
        let n = 4;
        let extent = 4.0;
        let mut grid = ImageGrid::zeros(n, extent).unwrap();
        for i in 0..n * n {
            grid.values_mut()[i] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let sched = make_schedule(Scheme::Golden, 8, 6.0, 0).unwrap();
        let og = OmegaGrid {
            n_omega: 2,
            delta_omega: 0.17,
            omegas: vec![0.13, 0.3],
            extent_v: extent,
            delta: 1.0,
        };
        for kind in [KernelKind::Square, KernelKind::Bilinear] {
            let kernel = Kernel { kind, delta: grid.delta() };
            let k = simulate_discrete(&grid, &kernel, &sched, &og).unwrap();
            let sub = 512usize;
            let h = grid.delta() / sub as f64;
            // one pixel of margin: bilinear tents overhang the grid edge
            let m = (n + 2) * sub;
            let lo = -extent / 2.0 - grid.delta();
            for (j, &phi) in sched.angles.iter().enumerate() {
                let dir = make_direction(phi).unwrap();
                for (idx, &w) in og.omegas.iter().enumerate() {
                    let xi = [w * dir.theta[0], w * dir.theta[1]];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..m {
                        let x0 = (a as f64 + 0.5) * h + lo;
                        for b in 0..m {
                            let x1 = (b as f64 + 0.5) * h + lo;
                            let f = eval_continuous(&grid, &kernel, [x0, x1]);
                            if f.norm_sqr() != 0.0 {
                                let ph = -std::f64::consts::TAU * (x0 * xi[0] + x1 * xi[1]);
                                acc += f * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    acc *= h * h;
                    let got = k.spoke(j)[idx];
                    assert!(
                        (got - acc).norm() < 1e-4,
                        "{kind:?} spoke {j} omega {w}: {got} vs {acc}"
                    );
                }
            }
        }
    }
}
