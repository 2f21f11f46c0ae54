//! Deterministic randomness.
//!
//! Every stochastic consumer (schedule draws, measurement noise, weight
//! init, batch shuffling) derives its own stream from one top-level seed
//! plus a fixed label, so a single seed reproduces an entire experiment
//! bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds the substream for `(seed, label, index)`.
///
/// The label is folded with FNV-1a so distinct consumers cannot collide
/// unless their labels do.
pub fn derive_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&h.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..32].copy_from_slice(&(seed ^ h.rotate_left(17)).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// One standard-normal draw via Box-Muller (two uniforms per pair).
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(rng: ChaCha8Rng) -> Self {
        NormalSource { rng, spare: None }
    }

    pub fn next(&mut self) -> f64 {
        use rand::Rng;
        if let Some(s) = self.spare.take() {
            return s;
        }
        // u1 in (0,1] so the log is finite
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}
