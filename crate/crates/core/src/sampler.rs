//! Sample-size planning and seeded record sampling.
//!
//! Sizes follow Cochran's formula with a finite-population correction:
//! `n0 = z^2 p (1 - p) / e^2`, `n = ceil(n0 / (1 + n0 / N))`, capped at `N`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const PROPORTION: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("unsupported confidence level {0} (expected 0.90, 0.95 or 0.99)")]
    InvalidConfidence(f64),
    #[error("margin of error {0} must lie strictly between 0 and 1")]
    InvalidMargin(f64),
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("cannot draw {requested} of {available} records")]
    SampleTooLarge { requested: usize, available: usize },
}

/// Two-sided z-score for the supported confidence levels.
pub fn z_score(confidence: f64) -> Result<f64, SamplerError> {
    const TABLE: [(f64, f64); 3] = [(0.90, 1.645), (0.95, 1.96), (0.99, 2.576)];
    TABLE
        .iter()
        .find(|(c, _)| (c - confidence).abs() < 1e-9)
        .map(|&(_, z)| z)
        .ok_or(SamplerError::InvalidConfidence(confidence))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePlan {
    pub population: usize,
    pub confidence: f64,
    pub margin: f64,
    pub proportion: f64,
    pub z: f64,
    pub size: usize,
}

impl SamplePlan {
    pub fn new(population: usize, confidence: f64, margin: f64) -> Result<Self, SamplerError> {
        if population == 0 {
            return Err(SamplerError::EmptyPopulation);
        }
        if !(margin > 0.0 && margin < 1.0) {
            return Err(SamplerError::InvalidMargin(margin));
        }
        let z = z_score(confidence)?;
        let n0 = z * z * PROPORTION * (1.0 - PROPORTION) / (margin * margin);
        let n = (n0 / (1.0 + n0 / population as f64)).ceil() as usize;
        Ok(Self {
            population,
            confidence,
            margin,
            proportion: PROPORTION,
            z,
            size: n.clamp(1, population),
        })
    }
}

pub fn sample_size(population: usize, confidence: f64, margin: f64) -> Result<usize, SamplerError> {
    SamplePlan::new(population, confidence, margin).map(|p| p.size)
}

/// Uniformly pick `n` items without replacement, keeping their input order.
pub fn draw_sample<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>, SamplerError> {
    if n > items.len() {
        return Err(SamplerError::SampleTooLarge {
            requested: n,
            available: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}
