use std::time::Instant;
use nrf_core::fastmath::{sincos_in_place, sincos_slice};

fn main() {
    let n = 1 << 22;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64) * 0.0017 - 3000.0).collect();
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    sincos_slice(&xs, &mut s, &mut c);
    let t = Instant::now();
    for _ in 0..10 { sincos_slice(&xs, &mut s, &mut c); }
    let dt = t.elapsed().as_secs_f64();
    println!("sincos_slice: {:.0} M/s", 10.0 * n as f64 / dt / 1e6);

    let mut buf = xs.clone();
    let t = Instant::now();
    for _ in 0..10 { buf.copy_from_slice(&xs); sincos_in_place(&mut buf, &mut c); }
    let dt = t.elapsed().as_secs_f64();
    println!("sincos_in_place (incl copy): {:.0} M/s", 10.0 * n as f64 / dt / 1e6);
    std::hint::black_box((&s, &c, &buf));
}
