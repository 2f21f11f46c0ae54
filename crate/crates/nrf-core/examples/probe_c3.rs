use nrf_core::baselines::{adjoint_reconstruct, DensityCompensation, GriddingConfig};
use nrf_core::forward::simulate_analytic;
use nrf_core::metrics::{psnr, ssim, PsnrMode};
use nrf_core::network::PeConfig;
use nrf_core::phantom::{rasterize, PhantomSpec};
use nrf_core::reconstructor::{reconstruct, TrainConfig};
use nrf_core::sampling::{make_omega_grid, make_schedule, Scheme};

fn main() {
    let n = 64usize;
    let spec = PhantomSpec::builtin("shepp-logan", n as f64).unwrap();
    let reference = rasterize(&spec, n).unwrap();
    let sched = make_schedule(Scheme::Golden, n, 8.0, 1).unwrap();
    let og = make_omega_grid(n, n as f64).unwrap();
    let k = simulate_analytic(&spec, &sched, &og, 0.0, 1).unwrap();
    eprintln!("spokes: {}", sched.len());

    let ifft = adjoint_reconstruct(&k, &GriddingConfig { density_compensation: DensityCompensation::Ramp, n_out: n }).unwrap().magnitude();
    let s_ifft = ssim(&ifft, &reference).unwrap();
    let p_ifft = psnr(&ifft, &reference, PsnrMode::Mse).unwrap();
    eprintln!("ifft: ssim {s_ifft:.4} psnr {p_ifft:.2}");

    let cfg = TrainConfig { seed: 1, ..TrainConfig::default() };
    let (img, rep) = reconstruct(&k, &cfg, &PeConfig::default(), n).unwrap();
    let s_ours = ssim(&img, &reference).unwrap();
    let p_ours = psnr(&img, &reference, PsnrMode::Mse).unwrap();
    eprintln!(
        "ours: ssim {s_ours:.4} psnr {p_ours:.2} | loss {:.3e} -> {:.3e} | train {:.0}s infer {:.2}s",
        rep.loss_history[0], rep.loss_history.last().unwrap(), rep.train_seconds, rep.infer_seconds
    );
}
