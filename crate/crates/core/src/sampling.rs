//! Seeded sampling shared by the verification sweeps and sample-based checkers.
//!
//! Every sample is drawn from its own generator keyed by `(seed, index)`, so a
//! sweep of `N` samples is a prefix of a sweep of `N + 1` samples and results
//! do not depend on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub(crate) fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A test vector with coordinates spread over several orders of magnitude and
/// an occasional exact zero.
pub(crate) fn spread_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                scale * rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}

pub(crate) fn uniform_in_box(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| if a < b { rng.random_range(a..=b) } else { a })
        .collect()
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

/// A single failed sample in a property sweep, with what is needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub seed: u64,
    pub index: u64,
    pub value: f64,
    pub tolerance: f64,
}

/// Outcome of a seeded property sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub name: String,
    pub checked: usize,
    /// Smallest observed margin (`value + tolerance`). Negative means a violation.
    pub worst_margin: f64,
    pub violations: Vec<Violation>,
}

impl SweepReport {
    pub(crate) fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            checked: 0,
            worst_margin: f64::INFINITY,
            violations: Vec::new(),
        }
    }

    /// Records a sample whose `value` must be `>= -tolerance`.
    pub(crate) fn record(&mut self, seed: u64, index: u64, value: f64, tolerance: f64) {
        self.checked += 1;
        let margin = value + tolerance;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if margin.is_nan() || margin < 0.0 {
            self.violations.push(Violation {
                seed,
                index,
                value,
                tolerance,
            });
        }
    }

    pub(crate) fn merge(&mut self, other: SweepReport) {
        self.checked += other.checked;
        if other.worst_margin < self.worst_margin || other.worst_margin.is_nan() {
            self.worst_margin = other.worst_margin;
        }
        self.violations.extend(other.violations);
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}
