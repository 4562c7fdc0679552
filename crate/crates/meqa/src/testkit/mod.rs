//! Test instrumentation shared by unit, integration, and acceptance tests:
//! brute-force oracles that re-implement contracts the simple way, seeded
//! generators for tables, queries, and graphs, and numeric samplers.
//!
//! Nothing here is used by the pipeline itself; it exists so the fast
//! implementations can be checked against independently written ones.

mod graph_oracle;
mod sql_gen;
mod sql_oracle;

pub use graph_oracle::{khop_by_path_enumeration, random_graph};
pub use sql_gen::{random_query, random_table};
pub use sql_oracle::naive_execute;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The one seeding entry point, so every randomized test names its seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draws via the Box-Muller transform, scaled to the given
/// mean and standard deviation.
pub fn sample_normal(rng: &mut ChaCha8Rng, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        // gen::<f64>() is in [0, 1); shift away from 0 for the log.
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(mean + sd * r * theta.cos());
        out.push(mean + sd * r * theta.sin());
    }
    out.truncate(n);
    out
}

pub fn sample_uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_are_seeded_and_reproducible() {
        let a = sample_normal(&mut rng(7), 100, 0.0, 1.0);
        let b = sample_normal(&mut rng(7), 100, 0.0, 1.0);
        assert_eq!(a, b);
        let c = sample_uniform(&mut rng(7), 100, -1.0, 1.0);
        assert!(c.iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn normal_sample_has_roughly_right_moments() {
        let xs = sample_normal(&mut rng(42), 20_000, 5.0, 2.0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 5.0).abs() < 0.1, "mean {mean}");
        assert!((var - 4.0).abs() < 0.2, "var {var}");
    }
}
