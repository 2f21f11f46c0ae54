use nrf_core::baselines::{adjoint_reconstruct, DensityCompensation, GriddingConfig};
use nrf_core::forward::simulate_analytic;
use nrf_core::metrics::{psnr, ssim, PsnrMode};
use nrf_core::network::{MlpParams, PeConfig};
use nrf_core::phantom::{rasterize, PhantomSpec};
use nrf_core::projection::kspace_to_sinogram;
use nrf_core::reconstructor::{build_render_problem, evaluate_image, sinogram_quadratures, TrainConfig};
use nrf_core::sampling::{make_omega_grid, make_schedule, Scheme};
use nrf_core::train::{Adam, GradEngine};

fn main() {
    let variant: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let n: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let r: f64 = std::env::args().nth(3).unwrap().parse().unwrap();
    let spec = PhantomSpec::builtin("shepp-logan", n as f64).unwrap();
    let reference = rasterize(&spec, n).unwrap();
    let sched = make_schedule(Scheme::Golden, n, r, 1).unwrap();
    let og = make_omega_grid(n, n as f64).unwrap();
    let k = simulate_analytic(&spec, &sched, &og, 0.0, 1).unwrap();
    let ifft = adjoint_reconstruct(&k, &GriddingConfig { density_compensation: DensityCompensation::Ramp, n_out: n }).unwrap().magnitude();
    let pe = PeConfig::default();
    let mut params = MlpParams::standard(&pe, 1);
    if variant >= 1 {
        let last = params.layers.len() - 1;
        params.layers[last].weights.iter_mut().for_each(|w| *w *= 1e-2);
    }
    let cfg = TrainConfig::default();
    let sino = kspace_to_sinogram(&k);
    let quads = sinogram_quadratures(&sino, og.delta / 2.0).unwrap();
    let problem = build_render_problem(&sino, &quads, &pe).unwrap();
    let mut adam = Adam::new(&params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut engine = GradEngine::new(&params, problem.enc.dim, &problem.groups);
    let all: Vec<usize> = (0..problem.n_rays()).collect();
    for step in 0..cfg.steps {
        let (loss, grad) = engine.loss_and_grad(&params, &problem.enc, &problem.groups, &problem.targets, &all);
        adam.step(&mut params, grad);
        if step % 100 == 0 || step == cfg.steps - 1 {
            let img = evaluate_image(&params, &pe, n, n as f64).unwrap();
            let s = ssim(&img, &reference).unwrap();
            let p = psnr(&img, &reference, PsnrMode::Mse).unwrap();
            eprintln!("step {step}: loss {loss:.4e} ssim {s:.4} psnr {p:.2}");
        }
    }
    let si = ssim(&ifft, &reference).unwrap();
    let pi = psnr(&ifft, &reference, PsnrMode::Mse).unwrap();
    eprintln!("ifft: ssim {si:.4} psnr {pi:.2} | spokes {}", sched.len());
}
