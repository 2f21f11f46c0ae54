use nrf_core::network::{EncodedBatch, MlpParams, PeConfig};
use nrf_core::train::{GradEngine, RenderGroups};
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

fn main() {
    // (a) two-thread aggregate dgemm at the hot shape
    let m = 2048usize; let k = 256usize; let n = 256usize;
    let a = vec![1.0f64; m*k];
    let b = vec![0.5f64; k*n];
    let reps = 30;
    let t = Instant::now();
    (0..4usize).into_par_iter().for_each(|_| {
        let mut c = vec![0.0f64; m*n];
        for _ in 0..reps {
            unsafe { matrixmultiply::dgemm(m,k,n,1.0,a.as_ptr(),k as isize,1,b.as_ptr(),n as isize,1,0.0,c.as_mut_ptr(),n as isize,1); }
        }
        std::hint::black_box(&c);
    });
    let dt = t.elapsed().as_secs_f64();
    println!("4-slot dgemm aggregate: {:.1} GFLOP/s", 4.0*reps as f64*2.0*(m*k*n) as f64/dt/1e9);

    // (b) engine at criterion-3 scale: ~98k points, standard net
    let pe = PeConfig::default();
    let params = MlpParams::standard(&pe, 0);
    let n_rays = 1080usize;
    let per_ray = 90usize;
    let counts = vec![per_ray; n_rays];
    let total: usize = n_rays * per_ray;
    let pts: Vec<[f64;2]> = (0..total).map(|i| [(i%997) as f64/997.0, (i%883) as f64/883.0]).collect();
    let enc = EncodedBatch::from_points(&pts, &pe);
    let groups = RenderGroups::from_counts(&counts, 0.5);
    let targets: Vec<Complex64> = (0..n_rays).map(|g| Complex64::new((g%7) as f64, 0.1)).collect();
    let sel: Vec<usize> = (0..n_rays).collect();
    let mut engine = GradEngine::new(&params, enc.dim, &groups);
    let t = Instant::now();
    let (l, _) = engine.loss_and_grad(&params, &enc, &groups, &targets, &sel);
    let warm = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let n_steps = 3;
    for _ in 0..n_steps { engine.loss_and_grad(&params, &enc, &groups, &targets, &sel); }
    let dt = t.elapsed().as_secs_f64() / n_steps as f64;
    let flops = total as f64 * 871_424.0 * 3.0;
    println!("engine step at c3 scale: {:.2} s/step ({:.1} GFLOP/s), warmup {:.2}, loss {:.2e}", dt, flops/dt/1e9, warm, l);
}
