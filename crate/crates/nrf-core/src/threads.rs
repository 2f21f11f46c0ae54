//! Worker-pool initialization.
//!
//! `NRF_THREADS` caps rayon's global pool. Results never depend on the
//! thread count: parallel reductions run over a fixed number of logical
//! slots with fixed chunk assignments.

use std::sync::OnceLock;

static INIT: OnceLock<()> = OnceLock::new();

/// Applies `NRF_THREADS` (if set and valid) to the global pool. Safe to
/// call repeatedly; only the first call in the process takes effect.
pub fn ensure_pool() {
    INIT.get_or_init(|| {
        if let Ok(v) = std::env::var("NRF_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}
