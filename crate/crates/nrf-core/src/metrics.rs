//! Global SSIM and PSNR between a reconstruction and its reference.
//!
//! SSIM uses whole-image statistics (one mean, variance and covariance per
//! image), not the windowed variant; a windowed flavor exists behind
//! [`ssim_windowed`] for cross-tool comparison only. Stabilizer constants
//! are `c1 = (0.01 D)^2`, `c2 = (0.03 D)^2` with `D` the reference peak.

use crate::error::{NrfError, Result};
use crate::geometry::ImageGrid;

/// PSNR normalization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsnrMode {
    /// Peak over the mean squared error (the conventional reading).
    Mse,
    /// Peak over the summed squared error, exactly as sometimes printed;
    /// differs from `Mse` by `10 log10(N)`.
    Literal,
}

impl PsnrMode {
    pub fn name(&self) -> &'static str {
        match self {
            PsnrMode::Mse => "mse",
            PsnrMode::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Result<PsnrMode> {
        Ok(match s {
            "mse" => PsnrMode::Mse,
            "literal" => PsnrMode::Literal,
            _ => return Err(NrfError::config(format!("unknown psnr mode '{s}'"))),
        })
    }
}

/// Quality summary of one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub ssim: f64,
    /// `f64::INFINITY` for identical images.
    pub psnr_db: f64,
    pub psnr_mode: PsnrMode,
}

fn magnitudes(img: &ImageGrid) -> Vec<f64> {
    img.values().iter().map(|z| z.norm()).collect()
}

fn check_shapes(x: &ImageGrid, y: &ImageGrid) -> Result<()> {
    if x.n() != y.n() {
        return Err(NrfError::domain(format!(
            "image shapes differ: {} vs {}",
            x.n(),
            y.n()
        )));
    }
    Ok(())
}

/// Whole-image SSIM of `x` against the reference `y`.
pub fn ssim(x: &ImageGrid, y: &ImageGrid) -> Result<f64> {
    check_shapes(x, y)?;
    let xs = magnitudes(x);
    let ys = magnitudes(y);
    let d = ys.iter().cloned().fold(0.0, f64::max);
    Ok(ssim_stats(&xs, &ys, d))
}

fn ssim_stats(xs: &[f64], ys: &[f64], peak: f64) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut vx = 0.0;
    let mut vy = 0.0;
    let mut cov = 0.0;
    for (a, b) in xs.iter().zip(ys) {
        let da = a - mx;
        let db = b - my;
        vx += da * da;
        vy += db * db;
        cov += da * db;
    }
    vx /= n;
    vy /= n;
    cov /= n;
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);
    ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Mean SSIM over square windows (`window` pixels a side, non-overlapping
/// remainder-clipped tiling). Not used by any acceptance path.
pub fn ssim_windowed(x: &ImageGrid, y: &ImageGrid, window: usize) -> Result<f64> {
    check_shapes(x, y)?;
    if window == 0 || window > x.n() {
        return Err(NrfError::domain("window must be in 1..=n"));
    }
    let n = x.n();
    let xs = magnitudes(x);
    let ys = magnitudes(y);
    let d = ys.iter().cloned().fold(0.0, f64::max);
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut r = 0;
    while r < n {
        let rh = (r + window).min(n);
        let mut c = 0;
        while c < n {
            let ch = (c + window).min(n);
            let mut wx = Vec::with_capacity((rh - r) * (ch - c));
            let mut wy = Vec::with_capacity((rh - r) * (ch - c));
            for i in r..rh {
                for j in c..ch {
                    wx.push(xs[i * n + j]);
                    wy.push(ys[i * n + j]);
                }
            }
            acc += ssim_stats(&wx, &wy, d);
            count += 1;
            c = ch;
        }
        r = rh;
    }
    Ok(acc / count as f64)
}

/// PSNR in dB; the peak comes from the reference `y`.
pub fn psnr(x: &ImageGrid, y: &ImageGrid, mode: PsnrMode) -> Result<f64> {
    check_shapes(x, y)?;
    let xs = magnitudes(x);
    let ys = magnitudes(y);
    let peak_sq = ys.iter().map(|v| v * v).fold(0.0, f64::max);
    let sse: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - b) * (a - b)).sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let denom = match mode {
        PsnrMode::Mse => sse / xs.len() as f64,
        PsnrMode::Literal => sse,
    };
    Ok(10.0 * (peak_sq / denom).log10())
}

/// Convenience pairing of both metrics.
pub fn compare(x: &ImageGrid, y: &ImageGrid, mode: PsnrMode) -> Result<MetricReport> {
    Ok(MetricReport {
        ssim: ssim(x, y)?,
        psnr_db: psnr(x, y, mode)?,
        psnr_mode: mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid_from(vals: &[f64], n: usize, extent: f64) -> ImageGrid {
        ImageGrid::from_values(n, extent, vals.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .unwrap()
    }

    #[test]
    fn ssim_of_identical_images_is_exactly_one() {
        let vals: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let a = grid_from(&vals, 8, 8.0);
        let b = a.clone();
        assert_eq!(ssim(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn constant_shift_lowers_ssim() {
        let vals: Vec<f64> = (0..64).map(|i| 0.2 + (i % 5) as f64 * 0.1).collect();
        let a = grid_from(&vals, 8, 8.0);
        let shifted: Vec<f64> = vals.iter().map(|v| v + 0.25).collect();
        let b = grid_from(&shifted, 8, 8.0);
        assert!(ssim(&b, &a).unwrap() < 1.0);
    }

    #[test]
    fn binary_complement_matches_hand_statistics() {
        // 4x4 binary image with mean 1/2 against its complement: the four
        // statistics are m = 1/2, var = 1/4, cov = -1/4
        let mut vals = vec![0.0; 16];
        for i in 0..8 {
            vals[i * 2] = 1.0;
        }
        let x = grid_from(&vals, 4, 4.0);
        let comp: Vec<f64> = vals.iter().map(|v| 1.0 - v).collect();
        let y = grid_from(&comp, 4, 4.0);
        let got = ssim(&x, &y).unwrap();
        let (m, var, cov) = (0.5, 0.25, -0.25);
        let c1 = 1e-4;
        let c2 = 9e-4;
        let expect = (2.0 * m * m + c1) * (2.0 * cov + c2) / ((2.0 * m * m + c1) * (2.0 * var + c2));
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(got < 0.0);
    }

    #[test]
    fn psnr_twenty_db_case() {
        // max y = 1, uniform error 0.1: MSE = 0.01 -> 20 dB
        let y: Vec<f64> = (0..16).map(|i| if i == 3 { 1.0 } else { 0.5 }).collect();
        let x: Vec<f64> = y.iter().map(|v| v - 0.1).collect();
        let yg = grid_from(&y, 4, 4.0);
        let xg = grid_from(&x, 4, 4.0);
        let p = psnr(&xg, &yg, PsnrMode::Mse).unwrap();
        assert!((p - 20.0).abs() < 1e-9, "{p}");
        let lit = psnr(&xg, &yg, PsnrMode::Literal).unwrap();
        assert!((p - lit - 10.0 * 16.0f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn identical_images_yield_the_infinity_sentinel() {
        let vals: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let a = grid_from(&vals, 4, 4.0);
        assert_eq!(psnr(&a, &a.clone(), PsnrMode::Mse).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let base: Vec<f64> = (0..256).map(|i| ((i % 16) as f64 / 15.0)).collect();
        let y = grid_from(&base, 16, 16.0);
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.02, 0.05] {
            let noisy: Vec<f64> =
                base.iter().enumerate().map(|(i, v)| v + amp * ((i * 2654435761) % 1000) as f64 / 1000.0).collect();
            let x = grid_from(&noisy, 16, 16.0);
            let p = psnr(&x, &y, PsnrMode::Mse).unwrap();
            assert!(p < last, "amp {amp}: {p} !< {last}");
            last = p;
        }
    }

    #[test]
    fn metrics_invariant_under_joint_permutation() {
        let vals: Vec<f64> = (0..64).map(|i| (i as f64).sqrt()).collect();
        let other: Vec<f64> = (0..64).map(|i| 8.0 - (i as f64).sqrt() * 0.9).collect();
        let perm: Vec<usize> = (0..64).map(|i| (i * 37) % 64).collect();
        let xp: Vec<f64> = perm.iter().map(|&i| vals[i]).collect();
        let yp: Vec<f64> = perm.iter().map(|&i| other[i]).collect();
        let a = ssim(&grid_from(&vals, 8, 8.0), &grid_from(&other, 8, 8.0)).unwrap();
        let b = ssim(&grid_from(&xp, 8, 8.0), &grid_from(&yp, 8, 8.0)).unwrap();
        assert!((a - b).abs() < 1e-12);
        let pa = psnr(&grid_from(&vals, 8, 8.0), &grid_from(&other, 8, 8.0), PsnrMode::Mse).unwrap();
        let pb = psnr(&grid_from(&xp, 8, 8.0), &grid_from(&yp, 8, 8.0), PsnrMode::Mse).unwrap();
        assert!((pa - pb).abs() < 1e-12);
    }

    #[test]
    fn ssim_near_symmetric_when_peaks_match() {
        let a: Vec<f64> = (0..64).map(|i| (i % 7) as f64 / 6.0).collect();
        let mut b: Vec<f64> = (0..64).map(|i| (i % 9) as f64 / 8.0).collect();
        b[0] = 1.0; // align the peaks so D agrees either way
        let ga = grid_from(&a, 8, 8.0);
        let gb = grid_from(&b, 8, 8.0);
        let xy = ssim(&ga, &gb).unwrap();
        let yx = ssim(&gb, &ga).unwrap();
        assert!((xy - yx).abs() < 1e-6);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = grid_from(&vec![0.0; 16], 4, 4.0);
        let b = grid_from(&vec![0.0; 64], 8, 8.0);
        assert!(ssim(&a, &b).is_err());
        assert!(psnr(&a, &b, PsnrMode::Mse).is_err());
    }

    #[test]
    fn windowed_variant_runs_and_tops_out_at_one() {
        let vals: Vec<f64> = (0..256).map(|i| ((i * 13) % 97) as f64 / 96.0).collect();
        let a = grid_from(&vals, 16, 16.0);
        assert!((ssim_windowed(&a, &a.clone(), 8).unwrap() - 1.0).abs() < 1e-12);
    }
}
