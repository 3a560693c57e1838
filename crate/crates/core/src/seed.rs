//! Hierarchical seed derivation.
//!
//! Every random stream is keyed by the top-level seed and a label path, e.g.
//! `["simulate", "trial-3", "jammer"]`. The 32-byte ChaCha seed is
//! `SHA-256(seed_le_bytes || 0x00 || label_0 || 0x00 || label_1 ...)`, so
//! distinct paths give independent streams and results never depend on the
//! order in which jobs run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn derive_seed(seed: u64, path: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for label in path {
        hasher.update([0u8]);
        hasher.update(label.as_bytes());
    }
    hasher.finalize().into()
}

pub fn rng_for(seed: u64, path: &[&str]) -> Rng {
    ChaCha8Rng::from_seed(derive_seed(seed, path))
}

/// Derives a child `u64` seed, for APIs that take a plain integer seed.
pub fn derive_u64(seed: u64, path: &[&str]) -> u64 {
    let bytes = derive_seed(seed, path);
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

/// One standard normal sample by Box–Muller, consuming two uniforms.
pub fn standard_normal(rng: &mut Rng) -> f64 {
    use rand::Rng as _;
    // u1 in (0, 1] keeps ln finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
