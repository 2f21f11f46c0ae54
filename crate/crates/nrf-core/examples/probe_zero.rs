use nrf_core::phantom::PhantomSpec;
use nrf_core::reconstructor::{reconstruct, TrainConfig};
use nrf_core::network::PeConfig;
use nrf_core::sampling::{make_omega_grid, make_schedule, Scheme};
use nrf_core::forward::simulate_analytic;
use std::time::Instant;

fn main() {
    let spec = PhantomSpec::new(vec![], 16.0).unwrap();
    let sched = make_schedule(Scheme::Golden, 16, 1.0, 0).unwrap();
    let og = make_omega_grid(16, 16.0).unwrap();
    let k = simulate_analytic(&spec, &sched, &og, 0.0, 0).unwrap();
    let t = Instant::now();
    let cfg = TrainConfig { steps: 400, lr: 1e-2, seed: 1, ..TrainConfig::default() };
    let (img, rep) = reconstruct(&k, &cfg, &PeConfig::new(2), 16).unwrap();
    println!("R=1 n=16 L=2 steps=400 lr=1e-2: loss {:.3e} -> {:.3e}, image max {:.4e}, train {:.1}s ({:.3}s/step)",
        rep.loss_history[0], rep.loss_history[399], img.max_abs(), rep.train_seconds, rep.train_seconds/400.0);
    println!("total {:.1}s", t.elapsed().as_secs_f64());
}
