//! Coordinate conventions, the image container and interpolation kernels.
//!
//! A continuous image over the square `[-V/2, V/2]^2` is represented as a
//! pixel array expanded against a normalized kernel: the value at `x` is
//! `sum_v X_v * phi_v(x)`. Indices in the math-facing API are 1-based
//! (`1 <= v_i <= n`); storage is 0-based row-major. All arithmetic is
//! 64-bit IEEE-754.

use num_complex::Complex64;

use crate::error::{NrfError, Result};

/// Square pixel grid with physical extent `extent_v` and complex values.
///
/// Pixel `(v1, v2)` is centered at `x_i = (v_i - 1/2) * delta - V/2`.
/// Real images are stored with zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    n: usize,
    extent_v: f64,
    values: Vec<Complex64>,
}

impl ImageGrid {
    /// All-zero grid. `n` must be even and positive, `extent_v` positive.
    pub fn zeros(n: usize, extent_v: f64) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(NrfError::domain(format!("grid size must be even and positive, got {n}")));
        }
        if !(extent_v > 0.0) {
            return Err(NrfError::domain(format!("extent must be positive, got {extent_v}")));
        }
        Ok(ImageGrid {
            n,
            extent_v,
            values: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn from_values(n: usize, extent_v: f64, values: Vec<Complex64>) -> Result<Self> {
        let mut g = Self::zeros(n, extent_v)?;
        if values.len() != n * n {
            return Err(NrfError::domain(format!(
                "value count {} does not match {n}x{n}",
                values.len()
            )));
        }
        g.values = values;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent_v(&self) -> f64 {
        self.extent_v
    }

    /// Pixel side length `V / n`.
    pub fn delta(&self) -> f64 {
        self.extent_v / self.n as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Value at the 1-based index pair.
    pub fn get(&self, v: (usize, usize)) -> Result<Complex64> {
        let idx = self.storage_index(v)?;
        Ok(self.values[idx])
    }

    pub fn set(&mut self, v: (usize, usize), value: Complex64) -> Result<()> {
        let idx = self.storage_index(v)?;
        self.values[idx] = value;
        Ok(())
    }

    fn storage_index(&self, v: (usize, usize)) -> Result<usize> {
        let (v1, v2) = v;
        if v1 < 1 || v1 > self.n || v2 < 1 || v2 > self.n {
            return Err(NrfError::Index(format!(
                "index ({v1}, {v2}) outside 1..={}",
                self.n
            )));
        }
        Ok((v1 - 1) * self.n + (v2 - 1))
    }

    /// Elementwise magnitude as a real-valued grid.
    pub fn magnitude(&self) -> ImageGrid {
        ImageGrid {
            n: self.n,
            extent_v: self.extent_v,
            values: self.values.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Center of pixel `v` (1-based): `((v1 - 1/2) d - V/2, (v2 - 1/2) d - V/2)`.
pub fn pixel_center(grid: &ImageGrid, v: (usize, usize)) -> Result<[f64; 2]> {
    grid.storage_index(v)?; // range check
    let d = grid.delta();
    let half = grid.extent_v / 2.0;
    Ok([
        (v.0 as f64 - 0.5) * d - half,
        (v.1 as f64 - 0.5) * d - half,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Constant `1/delta^2` on a `delta x delta` cell; integrates to 1.
    Square,
    /// Tent product `(1/delta^2) tri(dx/delta) tri(dy/delta)`; continuous,
    /// integrates to 1.
    Bilinear,
}

/// Normalized interpolation kernel tied to a pixel size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub delta: f64,
}

impl Kernel {
    pub fn square(delta: f64) -> Kernel {
        Kernel { kind: KernelKind::Square, delta }
    }

    pub fn bilinear(delta: f64) -> Kernel {
        Kernel { kind: KernelKind::Bilinear, delta }
    }

    /// Kernel value at `x` for a copy centered at `center`.
    pub fn eval(&self, center: [f64; 2], x: [f64; 2]) -> f64 {
        let d = self.delta;
        match self.kind {
            KernelKind::Square => {
                if (x[0] - center[0]).abs() <= d / 2.0 && (x[1] - center[1]).abs() <= d / 2.0 {
                    1.0 / (d * d)
                } else {
                    0.0
                }
            }
            KernelKind::Bilinear => {
                let t0 = 1.0 - ((x[0] - center[0]) / d).abs();
                let t1 = 1.0 - ((x[1] - center[1]) / d).abs();
                if t0 > 0.0 && t1 > 0.0 {
                    t0 * t1 / (d * d)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the support in pixel units (1 for square, 2 bins for
    /// bilinear when scanning neighbors).
    fn reach_pixels(&self) -> isize {
        match self.kind {
            KernelKind::Square => 1,
            KernelKind::Bilinear => 2,
        }
    }
}

/// Unit direction of a spoke angle, with its perpendicular.
///
/// `theta = [cos phi, sin phi]`, `theta_perp = [sin phi, -cos phi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub phi: f64,
    pub theta: [f64; 2],
    pub theta_perp: [f64; 2],
}

/// Builds the direction for `phi` in `[0, pi)`.
pub fn make_direction(phi: f64) -> Result<Direction> {
    if !(0.0..std::f64::consts::PI).contains(&phi) {
        return Err(NrfError::domain(format!("angle {phi} outside [0, pi)")));
    }
    let (s, c) = phi.sin_cos();
    Ok(Direction {
        phi,
        theta: [c, s],
        theta_perp: [s, -c],
    })
}

/// Continuous image value `sum_v X_v phi_v(x)`; zero outside the support.
pub fn eval_continuous(grid: &ImageGrid, kernel: &Kernel, x: [f64; 2]) -> Complex64 {
    let n = grid.n as isize;
    let d = grid.delta();
    let half = grid.extent_v / 2.0;
    // fractional index of x along each axis: v_i = (x_i + V/2)/d + 1/2
    let reach = kernel.reach_pixels();
    let mut acc = Complex64::new(0.0, 0.0);
    let fi0 = (x[0] + half) / d + 0.5;
    let fi1 = (x[1] + half) / d + 0.5;
    let lo0 = (fi0.floor() as isize - reach).max(1);
    let hi0 = (fi0.ceil() as isize + reach).min(n);
    let lo1 = (fi1.floor() as isize - reach).max(1);
    let hi1 = (fi1.ceil() as isize + reach).min(n);
    for v1 in lo0..=hi0 {
        for v2 in lo1..=hi1 {
            let center = [
                (v1 as f64 - 0.5) * d - half,
                (v2 as f64 - 0.5) * d - half,
            ];
            let w = kernel.eval(center, x);
            if w != 0.0 {
                acc += grid.values[((v1 - 1) * n + (v2 - 1)) as usize] * w;
            }
        }
    }
    acc
}
