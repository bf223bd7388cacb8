//! Deterministic design generators for tests and examples.
//!
//! These helpers build valid [`Design`] values without ceremony: an equal
//! probability design for a given size, and a seeded random heterogeneous
//! design whose probabilities sum to the sample size by construction.

use crate::design::Design;
use rand::Rng;

/// Highest probability a random design will assign to one unit.
const PROBABILITY_CAP: f64 = 0.999;

/// An equal-probability design: every unit gets `n / population`.
pub fn srswor_design(population: usize, n: usize) -> Design {
    let p = n as f64 / population as f64;
    Design::new(vec![p; population], n).expect("equal design parameters must be valid")
}

/// A random heterogeneous design with probabilities summing to `n`.
///
/// Draws one positive weight per unit and scales all weights by a common
/// factor, capping each probability below one; the factor is located by
/// bisection so the capped sum equals `n` almost exactly. Requires
/// `0 < n < population`.
pub fn random_design<R: Rng + ?Sized>(rng: &mut R, population: usize, n: usize) -> Design {
    assert!(n > 0 && n < population, "need 0 < n < population");
    assert!(
        n as f64 <= PROBABILITY_CAP * population as f64,
        "sample size too close to the population for capped probabilities"
    );
    let weights: Vec<f64> = (0..population).map(|_| rng.gen_range(0.1..1.0)).collect();
    let capped_sum = |t: f64| -> f64 {
        weights
            .iter()
            .map(|w| (t * w).min(PROBABILITY_CAP))
            .sum::<f64>()
    };
    let mut hi = 1.0;
    while capped_sum(hi) < n as f64 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if capped_sum(mid) < n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p: Vec<f64> = weights
        .iter()
        .map(|w| (hi * w).min(PROBABILITY_CAP))
        .collect();
    Design::new(p, n).expect("bisection must land within the sum tolerance")
}
