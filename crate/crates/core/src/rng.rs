//! Counter-based random streams.
//!
//! Every stochastic quantity in the simulator is drawn from a stream keyed on
//! `(seed, domain, indices...)`, so results never depend on evaluation order
//! or on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream domains. Distinct domains never share keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Noise = 1,
    Drift = 2,
    Wobble = 3,
    ChainShape = 4,
    PortGain = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed, a domain and a list of counters into one 64-bit key.
pub fn key(seed: u64, domain: Domain, counters: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0xA2A2_0000_0000_0000);
    h = splitmix64(h ^ domain as u64);
    for &c in counters {
        h = splitmix64(h ^ c);
    }
    h
}

pub fn stream(seed: u64, domain: Domain, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key(seed, domain, counters))
}

/// One standard normal draw addressed by its counters.
pub fn normal(seed: u64, domain: Domain, counters: &[u64]) -> f64 {
    stream(seed, domain, counters).sample(StandardNormal)
}

/// Sample `k` of a stationary unit-variance AR(1) sequence with coefficient
/// `rho`, evaluated without state. Terms weighted below 1e-17 are dropped.
pub fn ar1(seed: u64, domain: Domain, channel: u64, rho: f64, k: u64) -> f64 {
    debug_assert!((0.0..1.0).contains(&rho));
    let window = if rho <= 0.0 {
        0
    } else {
        ((1e-17f64).ln() / rho.ln()).ceil() as u64
    };
    let start = k.saturating_sub(window);
    let innovation_scale = (1.0 - rho * rho).sqrt();
    let mut acc = 0.0;
    for i in start..=k {
        let eps = normal(seed, domain, &[channel, i]);
        let weight = rho.powi((k - i) as i32);
        acc += if i == 0 {
            weight * eps
        } else {
            weight * innovation_scale * eps
        };
    }
    acc
}
