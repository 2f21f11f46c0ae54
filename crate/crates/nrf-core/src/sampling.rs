//! Spoke-angle schedules, the radial frequency grid and gap statistics.
//!
//! Five undersampling schemes are supported. Angles live on the
//! pi-periodic circle (a spoke at `phi` measures the same line family as
//! `phi + pi` up to reflection), so gap statistics, including the wrap-around
//! arc, are measured on that circle.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{NrfError, Result};
use crate::rng::derive_rng;

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Uniform,
    Limited,
    Random,
    Stratified,
    Golden,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::Limited => "limited",
            Scheme::Random => "random",
            Scheme::Stratified => "stratified",
            Scheme::Golden => "golden",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        Ok(match s {
            "uniform" => Scheme::Uniform,
            "limited" => Scheme::Limited,
            "random" => Scheme::Random,
            "stratified" => Scheme::Stratified,
            "golden" => Scheme::Golden,
            _ => return Err(NrfError::config(format!("unknown sampling scheme '{s}'"))),
        })
    }

    pub const ALL: [Scheme; 5] = [
        Scheme::Uniform,
        Scheme::Limited,
        Scheme::Random,
        Scheme::Stratified,
        Scheme::Golden,
    ];
}

/// Ordered spoke angles with their provenance.
///
/// `angles` is strictly ascending in `[0, pi)`; `acquisition_order` keeps
/// the order the scheme generated them in (relevant for golden-angle, where
/// acquisition and sorted order differ).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    pub angles: Vec<f64>,
    pub scheme: Scheme,
    pub r_factor: f64,
    pub seed: u64,
    pub acquisition_order: Vec<f64>,
    /// Spoke count of the fully sampled reference schedule this one
    /// undersamples (`floor(pi/2 * n)` for grid size n).
    pub full_count: usize,
}

impl AngleSchedule {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Fully sampled spoke count `floor(pi/2 * n)`.
pub fn full_spoke_count(n: usize) -> Result<usize> {
    if n < 8 {
        return Err(NrfError::domain(format!("grid size {n} below the minimum of 8")));
    }
    Ok((PI / 2.0 * n as f64).floor() as usize)
}

/// Builds the angle set for a scheme at acceleration factor `R >= 1`.
///
/// The spoke count is `floor(full_spoke_count(n) / R)` and must be >= 2.
pub fn make_schedule(scheme: Scheme, n: usize, r_factor: f64, seed: u64) -> Result<AngleSchedule> {
    if !(r_factor >= 1.0) {
        return Err(NrfError::domain(format!("acceleration factor must be >= 1, got {r_factor}")));
    }
    let full = full_spoke_count(n)?;
    let count = (full as f64 / r_factor).floor() as usize;
    if count < 2 {
        return Err(NrfError::domain(format!(
            "schedule needs at least 2 spokes, got {count} (n={n}, R={r_factor})"
        )));
    }
    let nf = count as f64;
    let acquisition: Vec<f64> = match scheme {
        Scheme::Uniform => (0..count).map(|k| k as f64 * PI / nf).collect(),
        Scheme::Limited => (0..count).map(|k| k as f64 * PI / (2.0 * nf)).collect(),
        Scheme::Random => {
            let mut rng = derive_rng(seed, "schedule", 0);
            let mut draws: Vec<f64> = Vec::with_capacity(count);
            while draws.len() < count {
                let a = rng.gen::<f64>() * PI;
                if !draws.iter().any(|&x| x == a) {
                    draws.push(a);
                }
            }
            draws
        }
        Scheme::Stratified => {
            let mut rng = derive_rng(seed, "schedule", 0);
            (0..count)
                .map(|k| (k as f64 * PI + rng.gen::<f64>() * PI) / nf)
                .collect()
        }
        Scheme::Golden => (0..count)
            .map(|k| (k as f64 * PI / GOLDEN_RATIO).rem_euclid(PI))
            .collect(),
    };
    let mut angles = acquisition.clone();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup();
    if angles.len() != count {
        return Err(NrfError::domain("schedule produced duplicate angles"));
    }
    Ok(AngleSchedule {
        angles,
        scheme,
        r_factor,
        seed,
        acquisition_order: acquisition,
        full_count: full,
    })
}

/// Radial frequency grid: `floor(sqrt(2) n)` samples spaced `1/(sqrt(2) V)`
/// starting at `-1/(2 delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGrid {
    pub n_omega: usize,
    pub delta_omega: f64,
    pub omegas: Vec<f64>,
    pub extent_v: f64,
    pub delta: f64,
}

pub fn make_omega_grid(n: usize, extent_v: f64) -> Result<OmegaGrid> {
    if n % 2 != 0 || n == 0 {
        return Err(NrfError::domain(format!("grid size must be even and positive, got {n}")));
    }
    if !(extent_v > 0.0) {
        return Err(NrfError::domain("extent must be positive"));
    }
    let n_omega = (std::f64::consts::SQRT_2 * n as f64).floor() as usize;
    let delta = extent_v / n as f64;
    let delta_omega = 1.0 / (std::f64::consts::SQRT_2 * extent_v);
    let omega0 = -1.0 / (2.0 * delta);
    let omegas = (0..n_omega).map(|k| omega0 + k as f64 * delta_omega).collect();
    Ok(OmegaGrid { n_omega, delta_omega, omegas, extent_v, delta })
}

/// Angular coverage statistics of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// Largest arc between consecutive angles on the pi-periodic circle,
    /// wrap-around included.
    pub max_adjacent_gap: f64,
    /// Largest pi-periodic distance from any point of the circle to its
    /// nearest sampled angle; equals half the largest arc.
    pub covering_radius: f64,
    /// All adjacent arcs in sorted-angle order, the wrap arc last.
    pub per_gap: Vec<f64>,
}

/// Gap statistics on the pi-periodic circle.
pub fn gap_report(schedule: &AngleSchedule) -> Result<GapReport> {
    let a = &schedule.angles;
    if a.len() < 2 {
        return Err(NrfError::domain("gap report needs at least 2 angles"));
    }
    let mut per_gap: Vec<f64> = a.windows(2).map(|w| w[1] - w[0]).collect();
    per_gap.push(PI - a[a.len() - 1] + a[0]);
    let max_adjacent_gap = per_gap.iter().cloned().fold(0.0, f64::max);
    Ok(GapReport {
        max_adjacent_gap,
        covering_radius: max_adjacent_gap / 2.0,
        per_gap,
    })
}
