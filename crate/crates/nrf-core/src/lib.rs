//! Reconstruction of radially undersampled MR images with a coordinate
//! neural field trained against a projection-rendering loss.
//!
//! The crate covers the full desk-scale experiment pipeline:
//!
//! * analytic ellipse phantoms with exact k-space and projection oracles
//!   ([`phantom`]),
//! * radial acquisition simulation over five undersampling schedules
//!   ([`sampling`], [`forward`]),
//! * the per-spoke inverse transform to projection data ([`projection`]),
//! * a sin-activated coordinate network with hand-derived gradients
//!   ([`network`]) and the rendering-loss trainer ([`reconstructor`]),
//! * zero-filled adjoint and k-space neural-interpolation baselines
//!   ([`baselines`]),
//! * global SSIM / PSNR metrics ([`metrics`]) and the binary/CSV artifact
//!   formats ([`io`]).
//!
//! The `nrf` binary exposes the experiment drivers; see the crate README.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod fastmath;
pub mod forward;
pub mod fourier;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod network;
pub mod phantom;
pub mod projection;
pub mod reconstructor;
pub mod rng;
pub mod sampling;
pub mod threads;
pub mod train;

pub use error::{NrfError, Result};
pub use forward::{simulate_analytic, simulate_discrete, RadialKSpace};
pub use geometry::{eval_continuous, make_direction, pixel_center, Direction, ImageGrid, Kernel, KernelKind};
pub use phantom::{analytic_kspace, analytic_projection, rasterize, Ellipse, PhantomSpec};
pub use projection::{kspace_to_sinogram, slice_theorem_residual, RGrid, Sinogram};
pub use sampling::{full_spoke_count, gap_report, make_omega_grid, make_schedule, AngleSchedule, GapReport, OmegaGrid, Scheme};
