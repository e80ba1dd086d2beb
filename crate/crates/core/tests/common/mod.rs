#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use w2swarm::ot::ParticleCloud;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_cloud(rng: &mut ChaCha8Rng, dim: usize, n: usize, lo: f64, hi: f64) -> ParticleCloud<f64> {
    let points = (0..n * dim).map(|_| rng.random_range(lo..hi)).collect();
    ParticleCloud::uniform(dim, points).unwrap()
}

pub fn weighted_cloud(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> ParticleCloud<f64> {
    let points = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..n - 1].iter().sum();
    weights[n - 1] = 1.0 - head;
    ParticleCloud::new(dim, points, weights).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
