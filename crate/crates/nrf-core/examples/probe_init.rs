use nrf_core::baselines::{adjoint_reconstruct, DensityCompensation, GriddingConfig};
use nrf_core::forward::simulate_analytic;
use nrf_core::metrics::{psnr, ssim, PsnrMode};
use nrf_core::network::{MlpParams, PeConfig};
use nrf_core::phantom::{rasterize, PhantomSpec};
use nrf_core::reconstructor::{evaluate_image, TrainConfig};
use nrf_core::sampling::{make_omega_grid, make_schedule, Scheme};

// variant: 0 = spec init, 1 = last layer scaled 1e-2, 2 = all layers 1/sqrt(fan)
fn make_params(pe: &PeConfig, seed: u64, variant: usize) -> MlpParams {
    let mut p = MlpParams::standard(pe, seed);
    match variant {
        0 => {}
        1 => {
            let last = p.layers.len() - 1;
            p.layers[last].weights.iter_mut().for_each(|w| *w *= 1e-2);
        }
        2 => {
            // sqrt(6/fan) -> sqrt(1/fan) is a division by sqrt(6)
            let s = 1.0 / 6.0f64.sqrt();
            for l in p.layers.iter_mut() {
                l.weights.iter_mut().for_each(|w| *w *= s);
            }
        }
        _ => unreachable!(),
    }
    p
}

fn main() {
    let variant: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let n = 32usize;
    let spec = PhantomSpec::builtin("shepp-logan", n as f64).unwrap();
    let reference = rasterize(&spec, n).unwrap();
    let sched = make_schedule(Scheme::Golden, n, 8.0, 1).unwrap();
    let og = make_omega_grid(n, n as f64).unwrap();
    let k = simulate_analytic(&spec, &sched, &og, 0.0, 1).unwrap();
    let ifft = adjoint_reconstruct(&k, &GriddingConfig { density_compensation: DensityCompensation::Ramp, n_out: n }).unwrap().magnitude();
    let pe = PeConfig::default();

    // init-function amplitude
    let init = make_params(&pe, 1, variant);
    let img0 = evaluate_image(&init, &pe, n, n as f64).unwrap();
    // train with the library loop but custom params: reuse internals via a local loop
    use nrf_core::projection::kspace_to_sinogram;
    use nrf_core::reconstructor::{build_render_problem, sinogram_quadratures};
    use nrf_core::train::{Adam, GradEngine};
    let cfg = TrainConfig::default();
    let sino = kspace_to_sinogram(&k);
    let quads = sinogram_quadratures(&sino, og.delta / 2.0).unwrap();
    let problem = build_render_problem(&sino, &quads, &pe).unwrap();
    let mut params = init;
    let mut adam = Adam::new(&params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut engine = GradEngine::new(&params, problem.enc.dim, &problem.groups);
    let all: Vec<usize> = (0..problem.n_rays()).collect();
    let mut first = 0.0;
    let mut last = 0.0;
    for step in 0..cfg.steps {
        let (loss, grad) = engine.loss_and_grad(&params, &problem.enc, &problem.groups, &problem.targets, &all);
        if step == 0 { first = loss; }
        last = loss;
        adam.step(&mut params, grad);
    }
    let img = evaluate_image(&params, &pe, n, n as f64).unwrap();
    let s = ssim(&img, &reference).unwrap();
    let p = psnr(&img, &reference, PsnrMode::Mse).unwrap();
    let si = ssim(&ifft, &reference).unwrap();
    println!(
        "variant {variant}: init max {:.3}, loss {first:.3e} -> {last:.3e}, ssim {s:.4} (ifft {si:.4}), psnr {p:.2}",
        img0.max_abs()
    );
}
