//! The reconstruction method: discrete ray rendering of the coordinate
//! network, the rendering loss against the measured projections, Adam
//! optimization and extraction of the final magnitude image.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{NrfError, Result};
use crate::forward::RadialKSpace;
use crate::geometry::{make_direction, Direction, ImageGrid};
use crate::network::{forward_batch_outputs, EncodedBatch, MlpParams, ParamGrad, PeConfig};
use crate::projection::{kspace_to_sinogram, Sinogram};
use crate::rng::derive_rng;
use crate::train::{grouped_loss_and_grad, Adam, GradEngine, RenderGroups};

/// Uniformly spaced sample points of one ray clipped to the support square.
#[derive(Debug, Clone)]
pub struct RayQuadrature {
    /// Spacing between consecutive samples (constant along the ray).
    pub step: f64,
    /// Physical sample points; empty when the ray misses the square.
    pub points: Vec<[f64; 2]>,
    pub extent_v: f64,
}

/// Builds the quadrature for the line `x . theta = r` clipped to
/// `[-V/2, V/2]^2`, sampled at midpoints of `step`-length segments.
pub fn ray_quadrature(r: f64, dir: &Direction, extent_v: f64, step: f64) -> RayQuadrature {
    let half = extent_v / 2.0;
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for axis in 0..2 {
        let origin = r * dir.theta[axis];
        let slope = dir.theta_perp[axis];
        if slope.abs() < 1e-15 {
            if origin.abs() > half {
                return RayQuadrature { step, points: Vec::new(), extent_v };
            }
        } else {
            let a = (-half - origin) / slope;
            let b = (half - origin) / slope;
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        }
    }
    if !(s_hi > s_lo) {
        return RayQuadrature { step, points: Vec::new(), extent_v };
    }
    let count = ((s_hi - s_lo) / step).floor() as usize;
    let points = (0..count)
        .map(|j| {
            let s = s_lo + (j as f64 + 0.5) * step;
            [
                r * dir.theta[0] + s * dir.theta_perp[0],
                r * dir.theta[1] + s * dir.theta_perp[1],
            ]
        })
        .collect();
    RayQuadrature { step, points, extent_v }
}

/// Physical point to normalized network coordinate, `(x + V/2) / V`.
fn normalize_point(x: [f64; 2], extent_v: f64) -> [f64; 2] {
    [(x[0] + extent_v / 2.0) / extent_v, (x[1] + extent_v / 2.0) / extent_v]
}

/// Renders one ray: `sum_j chi(u(x_j)) * step`. Empty rays render to 0.
pub fn render_ray(params: &MlpParams, cfg: &PeConfig, quad: &RayQuadrature) -> Complex64 {
    if quad.points.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let pts: Vec<[f64; 2]> = quad.points.iter().map(|&x| normalize_point(x, quad.extent_v)).collect();
    let enc = EncodedBatch::from_points(&pts, cfg);
    let outs = forward_batch_outputs(params, &enc);
    outs.iter().sum::<Complex64>() * quad.step
}

/// Training problem assembled once per reconstruction: encoded quadrature
/// points for every ray, the group structure and the projection targets.
pub struct RenderProblem {
    pub enc: EncodedBatch,
    pub groups: RenderGroups,
    pub targets: Vec<Complex64>,
}

impl RenderProblem {
    pub fn n_rays(&self) -> usize {
        self.groups.n_groups()
    }
}

/// Quadratures for every (angle, offset) pair of a sinogram, spoke-major.
pub fn sinogram_quadratures(sino: &Sinogram, step: f64) -> Result<Vec<RayQuadrature>> {
    let extent_v = sino.r_grid.delta_r * sino.r_grid.n as f64 / std::f64::consts::SQRT_2;
    let mut quads = Vec::with_capacity(sino.n_spokes() * sino.n_r());
    for &phi in &sino.schedule.angles {
        let dir = make_direction(phi)?;
        for m in 0..sino.n_r() {
            quads.push(ray_quadrature(sino.r_grid.value(m), &dir, extent_v, step));
        }
    }
    Ok(quads)
}

pub fn build_render_problem(sino: &Sinogram, quads: &[RayQuadrature], cfg: &PeConfig) -> Result<RenderProblem> {
    if quads.len() != sino.samples.len() {
        return Err(NrfError::config(format!(
            "quadrature count {} does not match sinogram sample count {}",
            quads.len(),
            sino.samples.len()
        )));
    }
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut offsets = Vec::with_capacity(quads.len() + 1);
    let mut coeffs = Vec::new();
    offsets.push(0);
    for q in quads {
        for &x in &q.points {
            pts.push(normalize_point(x, q.extent_v));
            coeffs.push(q.step);
        }
        offsets.push(pts.len());
    }
    let enc = EncodedBatch::from_points(&pts, cfg);
    Ok(RenderProblem {
        enc,
        groups: RenderGroups { offsets, coeffs },
        targets: sino.samples.clone(),
    })
}

/// Rendering loss `mean |P - render|^2` over the selected rays (all rays
/// when `selection` is `None`) and its parameter gradient.
pub fn loss_and_grad(
    params: &MlpParams,
    cfg: &PeConfig,
    sino: &Sinogram,
    quads: &[RayQuadrature],
    selection: Option<&[usize]>,
) -> Result<(f64, ParamGrad)> {
    params.validate()?;
    if params.l_order != cfg.l_order {
        return Err(NrfError::config("positional-encoding order disagrees with the parameters"));
    }
    let problem = build_render_problem(sino, quads, cfg)?;
    let all: Vec<usize>;
    let sel = match selection {
        Some(s) => s,
        None => {
            all = (0..problem.n_rays()).collect();
            &all
        }
    };
    Ok(grouped_loss_and_grad(params, &problem.enc, &problem.groups, &problem.targets, sel))
}

/// Training configuration. Defaults follow the standard recipe: 500 Adam
/// steps at a constant 5e-4 over the full ray set.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Rays per step; `None` trains full-batch.
    pub batch: Option<usize>,
    pub seed: u64,
    /// Ray sample spacing; `None` means half a pixel.
    pub ray_step: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 500,
            lr: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch: None,
            seed: 0,
            ray_step: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(NrfError::config("steps must be >= 1"));
        }
        if !(self.lr > 0.0) {
            return Err(NrfError::config("learning rate must be positive"));
        }
        for (name, b) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(NrfError::config(format!("adam {name} must lie in [0, 1)")));
            }
        }
        if let Some(b) = self.batch {
            if b == 0 {
                return Err(NrfError::config("batch size must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Per-phase wall times and the loss trace of one reconstruction.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub loss_history: Vec<f64>,
    pub sinogram_seconds: f64,
    pub train_seconds: f64,
    pub infer_seconds: f64,
    pub final_params: MlpParams,
}

/// Evaluates the network magnitude on an `n_out` pixel grid.
pub fn evaluate_image(params: &MlpParams, cfg: &PeConfig, n_out: usize, extent_v: f64) -> Result<ImageGrid> {
    crate::threads::ensure_pool();
    let mut grid = ImageGrid::zeros(n_out, extent_v)?;
    let total = n_out * n_out;
    let chunk = 2048usize;
    let ranges: Vec<(usize, usize)> = (0..total.div_ceil(chunk))
        .map(|c| (c * chunk, ((c + 1) * chunk).min(total)))
        .collect();
    let parts: Vec<(usize, Vec<Complex64>)> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let pts: Vec<[f64; 2]> = (lo..hi)
                .map(|idx| {
                    let v1 = idx / n_out;
                    let v2 = idx % n_out;
                    [
                        (v1 as f64 + 0.5) / n_out as f64,
                        (v2 as f64 + 0.5) / n_out as f64,
                    ]
                })
                .collect();
            let enc = EncodedBatch::from_points(&pts, cfg);
            (lo, forward_batch_outputs(params, &enc))
        })
        .collect();
    for (lo, vals) in parts {
        for (off, z) in vals.iter().enumerate() {
            grid.values_mut()[lo + off] = Complex64::new(z.norm(), 0.0);
        }
    }
    Ok(grid)
}

/// Evaluates the network on an `n x n` grid of normalized coordinates
/// given per axis by `axis_coord`, returning raw complex outputs
/// (row-major). Used by the k-space interpolation baseline.
pub fn evaluate_image_complex_grid(
    params: &MlpParams,
    cfg: &PeConfig,
    n: usize,
    axis_coord: impl Fn(usize) -> f64 + Sync,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    crate::threads::ensure_pool();
    let total = n * n;
    let chunk = 2048usize;
    let ranges: Vec<(usize, usize)> = (0..total.div_ceil(chunk))
        .map(|c| (c * chunk, ((c + 1) * chunk).min(total)))
        .collect();
    let parts: Vec<(usize, Vec<Complex64>)> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let pts: Vec<[f64; 2]> = (lo..hi)
                .map(|idx| [axis_coord(idx / n), axis_coord(idx % n)])
                .collect();
            let enc = EncodedBatch::from_points(&pts, cfg);
            (lo, forward_batch_outputs(params, &enc))
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (lo, vals) in parts {
        out[lo..lo + vals.len()].copy_from_slice(&vals);
    }
    Ok(out)
}

/// Full reconstruction: projection targets once, Adam training, magnitude
/// image extraction.
pub fn reconstruct(
    kspace: &RadialKSpace,
    cfg: &TrainConfig,
    pe: &PeConfig,
    n_out: usize,
) -> Result<(ImageGrid, TrainReport)> {
    cfg.validate()?;
    let t0 = Instant::now();
    let sino = kspace_to_sinogram(kspace);
    let delta = kspace.omega_grid.delta;
    let step = cfg.ray_step.unwrap_or(delta / 2.0);
    let quads = sinogram_quadratures(&sino, step)?;
    let problem = build_render_problem(&sino, &quads, pe)?;
    let sinogram_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut params = MlpParams::standard(pe, cfg.seed);
    let mut adam = Adam::new(&params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut engine = GradEngine::new(&params, problem.enc.dim, &problem.groups);
    let n_rays = problem.n_rays();
    let all: Vec<usize> = (0..n_rays).collect();
    let mut batch_rng = derive_rng(cfg.seed, "batch", 0);
    let mut loss_history = Vec::with_capacity(cfg.steps);
    for step_idx in 0..cfg.steps {
        let selected: Vec<usize> = match cfg.batch {
            None => all.clone(),
            Some(b) if b >= n_rays => all.clone(),
            Some(b) => {
                use rand::seq::SliceRandom;
                let mut idx = all.clone();
                idx.shuffle(&mut batch_rng);
                idx.truncate(b);
                idx
            }
        };
        let (loss, grad) =
            engine.loss_and_grad(&params, &problem.enc, &problem.groups, &problem.targets, &selected);
        if !loss.is_finite() {
            return Err(NrfError::Diverged { step: step_idx });
        }
        adam.step(&mut params, grad);
        loss_history.push(loss);
    }
    let train_seconds = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let image = evaluate_image(&params, pe, n_out, kspace.omega_grid.extent_v)?;
    let infer_seconds = t2.elapsed().as_secs_f64();

    Ok((
        image,
        TrainReport {
            loss_history,
            sinogram_seconds,
            train_seconds,
            infer_seconds,
            final_params: params,
        },
    ))
}

/// Wall time of a final-image evaluation (the training-free phase).
pub fn inference_time(params: &MlpParams, cfg: &PeConfig, n_out: usize, extent_v: f64) -> Result<f64> {
    let t = Instant::now();
    let img = evaluate_image(params, cfg, n_out, extent_v)?;
    let dt = t.elapsed().as_secs_f64();
    std::hint::black_box(&img);
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::PhantomSpec;
    use crate::sampling::{make_omega_grid, make_schedule, Scheme};
    use rand::Rng;

    fn constant_net(c_re: f64, c_im: f64) -> (MlpParams, PeConfig) {
        // all-zero weights, head bias set: chi == c everywhere
        let cfg = PeConfig::new(2);
        let mut p = MlpParams::toy(&cfg, 8, 0);
        for l in p.layers.iter_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        let last = p.layers.len() - 1;
        p.layers[last].bias = vec![c_re, c_im];
        (p, cfg)
    }

    #[test]
    fn constant_field_renders_the_chord_length() {
        let (p, cfg) = constant_net(2.5, 0.0);
        let v = 8.0;
        let dir = make_direction(0.0).unwrap();
        let quad = ray_quadrature(0.0, &dir, v, 0.25);
        let rendered = render_ray(&p, &cfg, &quad);
        // chord through the square at r=0, phi=0 has length V
        assert!((rendered.re - 2.5 * v).abs() <= 2.5 * 0.25 + 1e-9, "{rendered}");
        assert!(rendered.im.abs() < 1e-12);
    }

    #[test]
    fn ray_outside_square_is_empty() {
        let dir = make_direction(0.3).unwrap();
        let quad = ray_quadrature(10.0, &dir, 8.0, 0.5);
        assert!(quad.points.is_empty());
        let (p, cfg) = constant_net(1.0, 0.0);
        assert_eq!(render_ray(&p, &cfg, &quad), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn quadrature_points_stay_inside_and_evenly_spaced() {
        let v = 6.0;
        for (r, phi) in [(0.1, 0.4), (-2.0, 1.2), (2.9, 2.8), (0.0, 0.785)] {
            let dir = make_direction(phi).unwrap();
            let q = ray_quadrature(r, &dir, v, 0.37);
            for p in &q.points {
                assert!(p[0].abs() <= v / 2.0 + 1e-9 && p[1].abs() <= v / 2.0 + 1e-9);
            }
            for w in q.points.windows(2) {
                let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
                assert!((d - 0.37).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn render_linear_in_outputs() {
        // summing two parameter sets' outputs externally equals summing
        // their renders
        let (a, cfg) = constant_net(1.2, -0.4);
        let (b, _) = constant_net(-0.3, 0.9);
        let dir = make_direction(1.1).unwrap();
        let quad = ray_quadrature(0.7, &dir, 4.0, 0.2);
        let ra = render_ray(&a, &cfg, &quad);
        let rb = render_ray(&b, &cfg, &quad);
        let (ab, _) = constant_net(1.2 - 0.3, -0.4 + 0.9);
        let rab = render_ray(&ab, &cfg, &quad);
        assert!((rab - (ra + rb)).norm() < 1e-12);
    }

    #[test]
    fn rotation_consistency_of_central_rays() {
        // a constant field renders the same value at r = 0 for every angle,
        // within one quadrature step
        let (p, cfg) = constant_net(1.0, 0.0);
        let v = 8.0;
        let step = 0.5;
        let mut values = Vec::new();
        for phi in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            let dir = make_direction(phi).unwrap();
            let quad = ray_quadrature(0.0, &dir, v, step);
            values.push(render_ray(&p, &cfg, &quad).re);
        }
        // chord lengths at r=0 vary between V and V*sqrt(2) with angle, so
        // compare each to its own chord
        for (i, &phi) in [0.0f64, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0].iter().enumerate() {
            let chord = v / phi.cos().abs().max(phi.sin().abs());
            assert!((values[i] - chord).abs() <= step + 1e-9, "phi={phi}: {} vs {chord}", values[i]);
        }
    }

    #[test]
    fn loss_is_zero_for_exactly_rendered_targets() {
        let (p, cfg) = constant_net(0.8, 0.1);
        let spec = PhantomSpec::builtin("simple", 16.0).unwrap();
        let sched = make_schedule(Scheme::Uniform, 16, 6.0, 0).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let k = crate::forward::simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
        let mut sino = kspace_to_sinogram(&k);
        let quads = sinogram_quadratures(&sino, 0.5).unwrap();
        // overwrite targets with this network's own renders
        for (i, q) in quads.iter().enumerate() {
            sino.samples[i] = render_ray(&p, &cfg, q);
        }
        let (loss, grad) = loss_and_grad(&p, &cfg, &sino, &quads, None).unwrap();
        assert!(loss < 1e-20, "loss {loss}");
        assert!(grad.norm() < 1e-8);
    }

    #[test]
    fn full_loss_gradient_matches_finite_differences() {
        let cfg = PeConfig::new(2);
        let params = MlpParams::toy(&cfg, 8, 21);
        let spec = PhantomSpec::builtin("simple", 8.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 8, 6.0, 0).unwrap();
        let og = make_omega_grid(8, 8.0).unwrap();
        let k = crate::forward::simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
        let sino = kspace_to_sinogram(&k);
        let quads = sinogram_quadratures(&sino, 0.5).unwrap();
        let (_, grad) = loss_and_grad(&params, &cfg, &sino, &quads, None).unwrap();
        let mut rng = derive_rng(3, "recon-fd", 0);
        let h = 1e-5;
        for _ in 0..10 {
            let l = rng.gen_range(0..params.layers.len());
            let idx = rng.gen_range(0..params.layers[l].weights.len());
            let mut plus = params.clone();
            plus.layers[l].weights[idx] += h;
            let mut minus = params.clone();
            minus.layers[l].weights[idx] -= h;
            let (lp, _) = loss_and_grad(&plus, &cfg, &sino, &quads, None).unwrap();
            let (lm, _) = loss_and_grad(&minus, &cfg, &sino, &quads, None).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let analytic = grad.layers[l].0[idx];
            let denom = fd.abs().max(analytic.abs()).max(1e-8);
            assert!((fd - analytic).abs() / denom < 1e-4, "{fd} vs {analytic}");
        }
    }

    #[test]
    fn reconstruct_rejects_zero_steps() {
        let spec = PhantomSpec::builtin("simple", 16.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 16, 4.0, 0).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let k = crate::forward::simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
        let cfg = TrainConfig { steps: 0, ..TrainConfig::default() };
        assert!(reconstruct(&k, &cfg, &PeConfig::new(2), 16).is_err());
    }

    #[test]
    fn zero_kspace_drives_renders_to_zero() {
        // the loss controls ray integrals, so those collapse by orders of
        // magnitude; pointwise image values are NOT driven to zero (the ray
        // functionals have a huge null space at finite spoke counts), so the
        // check lives in the render domain
        let spec = PhantomSpec::new(vec![], 16.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 16, 4.0, 0).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let k = crate::forward::simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
        let cfg = TrainConfig { steps: 300, lr: 5e-3, seed: 1, ..TrainConfig::default() };
        let pe = PeConfig::new(4);
        let (_, report) = reconstruct(&k, &cfg, &pe, 16).unwrap();
        assert_eq!(report.loss_history.len(), 300);
        let first = report.loss_history[0];
        let last = report.loss_history[299];
        assert!(last < 1e-3 * first, "loss {first} -> {last}");
        // and the trained renders themselves are near zero
        let sino = kspace_to_sinogram(&k);
        let quads = sinogram_quadratures(&sino, og.delta / 2.0).unwrap();
        let worst = quads
            .iter()
            .map(|q| render_ray(&report.final_params, &pe, q).norm())
            .fold(0.0, f64::max);
        let init = MlpParams::standard(&pe, cfg.seed);
        let init_worst = quads
            .iter()
            .map(|q| render_ray(&init, &pe, q).norm())
            .fold(0.0, f64::max);
        assert!(worst < 2e-2 * init_worst, "renders {init_worst} -> {worst}");
    }

    #[test]
    fn reconstruction_is_bitwise_deterministic() {
        let spec = PhantomSpec::builtin("simple", 16.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 16, 6.0, 3).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let k = crate::forward::simulate_analytic(&spec, &sched, &og, 0.0, 3).unwrap();
        let cfg = TrainConfig { steps: 8, seed: 7, ..TrainConfig::default() };
        let pe = PeConfig::new(3);
        let (img_a, rep_a) = reconstruct(&k, &cfg, &pe, 16).unwrap();
        let (img_b, rep_b) = reconstruct(&k, &cfg, &pe, 16).unwrap();
        assert_eq!(img_a.values(), img_b.values());
        let bits_a: Vec<u64> = rep_a.loss_history.iter().map(|x| x.to_bits()).collect();
        let bits_b: Vec<u64> = rep_b.loss_history.iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn minibatch_path_runs_and_differs_from_full_batch() {
        let spec = PhantomSpec::builtin("simple", 16.0).unwrap();
        let sched = make_schedule(Scheme::Golden, 16, 6.0, 3).unwrap();
        let og = make_omega_grid(16, 16.0).unwrap();
        let k = crate::forward::simulate_analytic(&spec, &sched, &og, 0.0, 3).unwrap();
        let pe = PeConfig::new(3);
        let full = TrainConfig { steps: 5, seed: 2, ..TrainConfig::default() };
        let mini = TrainConfig { steps: 5, seed: 2, batch: Some(10), ..TrainConfig::default() };
        let (_, rep_full) = reconstruct(&k, &full, &pe, 16).unwrap();
        let (_, rep_mini) = reconstruct(&k, &mini, &pe, 16).unwrap();
        assert_ne!(rep_full.loss_history, rep_mini.loss_history);
    }
}
