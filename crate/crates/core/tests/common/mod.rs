//! Shared helpers for the integration suites.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use topoflow::geometry::{config_from_parts, ChargeConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random zero-sum planar configuration with `2..=max_n` charges of degree
/// magnitude `1..=max_deg`; resamples until the degrees balance.
pub fn random_config(rng: &mut ChaCha8Rng, max_n: usize, max_deg: i32) -> ChargeConfig {
    loop {
        let n = rng.gen_range(2..=max_n);
        let mut parts: Vec<(Vec<f64>, i32)> = (0..n)
            .map(|_| {
                let pos = vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                let mag = rng.gen_range(1..=max_deg);
                let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                (pos, sign * mag)
            })
            .collect();
        let total: i32 = parts.iter().map(|(_, d)| *d).sum();
        if total == 0 {
            if let Ok(cfg) = config_from_parts(&parts) {
                return cfg;
            }
            continue;
        }
        // Try to absorb the imbalance into one charge without exceeding the
        // degree cap or zeroing it out.
        let mut fixed = false;
        for part in parts.iter_mut() {
            let adjusted = part.1 - total;
            if adjusted != 0 && adjusted.abs() <= max_deg {
                part.1 = adjusted;
                fixed = true;
                break;
            }
        }
        if !fixed {
            continue;
        }
        if let Ok(cfg) = config_from_parts(&parts) {
            return cfg;
        }
    }
}
