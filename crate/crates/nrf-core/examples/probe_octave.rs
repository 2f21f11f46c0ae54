use nrf_core::baselines::{adjoint_reconstruct, DensityCompensation, GriddingConfig};
use nrf_core::forward::simulate_analytic;
use nrf_core::metrics::{psnr, ssim, PsnrMode};
use nrf_core::network::{MlpParams, PeConfig};
use nrf_core::phantom::{rasterize, PhantomSpec};
use nrf_core::projection::kspace_to_sinogram;
use nrf_core::reconstructor::{build_render_problem, evaluate_image, sinogram_quadratures, TrainConfig};
use nrf_core::sampling::{make_omega_grid, make_schedule, Scheme};
use nrf_core::train::{Adam, GradEngine};

// args: alpha lr n r steps [seed]
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let alpha: f64 = a[1].parse().unwrap();
    let lr: f64 = a[2].parse().unwrap();
    let n: usize = a[3].parse().unwrap();
    let r: f64 = a[4].parse().unwrap();
    let steps: usize = a[5].parse().unwrap();
    let seed: u64 = a.get(6).map(|s| s.parse().unwrap()).unwrap_or(1);

    let spec = PhantomSpec::builtin("shepp-logan", n as f64).unwrap();
    let reference = rasterize(&spec, n).unwrap();
    let sched = make_schedule(Scheme::Golden, n, r, seed).unwrap();
    let og = make_omega_grid(n, n as f64).unwrap();
    let k = simulate_analytic(&spec, &sched, &og, 0.0, seed).unwrap();
    let pe = PeConfig::default();
    let mut params = MlpParams::standard(&pe, seed);
    // last layer tiny so the init field is near zero
    let last = params.layers.len() - 1;
    params.layers[last].weights.iter_mut().for_each(|w| *w *= 1e-2);
    // per-octave scaling of first-layer columns: octave l scaled 2^(-alpha l)
    if alpha > 0.0 {
        let l_ord = pe.l_order;
        let cols = params.layers[0].cols;
        for row in 0..params.layers[0].rows {
            for c in 0..cols {
                if c >= 2 {
                    let level = ((c - 2) % (2 * l_ord)) / 2;
                    params.layers[0].weights[row * cols + c] *= 2.0f64.powf(-alpha * level as f64);
                }
            }
        }
    }
    let cfg = TrainConfig { lr, steps, seed, ..TrainConfig::default() };
    let sino = kspace_to_sinogram(&k);
    let quads = sinogram_quadratures(&sino, og.delta / 2.0).unwrap();
    let problem = build_render_problem(&sino, &quads, &pe).unwrap();
    let mut adam = Adam::new(&params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut engine = GradEngine::new(&params, problem.enc.dim, &problem.groups);
    let all: Vec<usize> = (0..problem.n_rays()).collect();
    let mut first = 0.0;
    for step in 0..cfg.steps {
        let (loss, grad) = engine.loss_and_grad(&params, &problem.enc, &problem.groups, &problem.targets, &all);
        if step == 0 { first = loss }
        adam.step(&mut params, grad);
        if (step + 1) % 125 == 0 {
            let img = evaluate_image(&params, &pe, n, n as f64).unwrap();
            let s = ssim(&img, &reference).unwrap();
            let p = psnr(&img, &reference, PsnrMode::Mse).unwrap();
            println!("alpha {alpha} lr {lr} n {n} R {r} seed {seed} step {}: loss {loss:.3e} (x{:.1e}) ssim {s:.4} psnr {p:.2}", step + 1, loss / first);
        }
    }
    let ifft = adjoint_reconstruct(&k, &GriddingConfig { density_compensation: DensityCompensation::Ramp, n_out: n }).unwrap().magnitude();
    println!("  ifft: ssim {:.4} psnr {:.2} spokes {}", ssim(&ifft, &reference).unwrap(), psnr(&ifft, &reference, PsnrMode::Mse).unwrap(), sched.len());
}
