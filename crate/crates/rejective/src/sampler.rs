//! Drawing samples from a fixed-size design and Monte Carlo estimation.
//!
//! Three samplers are provided. [`sample_poisson`] draws each unit
//! independently and ignores the size constraint. [`sample_rejective_rejection`]
//! repeats independent draws until one has the target size, which is simple
//! and exactly distributed but slow when `P(K = n)` is small.
//! [`SequentialSampler`] walks the units in index order and includes unit `i`
//! with the conditional probability
//!
//! ```text
//! p_i * S_{i+1}(r - 1) / (p_i * S_{i+1}(r - 1) + (1 - p_i) * S_{i+1}(r))
//! ```
//!
//! where `r` counts the slots still to fill and `S_{i+1}` is the count
//! distribution of the units after `i`. One pass produces an exact draw, and
//! the same recursion evaluates the probability of any particular sample.
//!
//! Monte Carlo estimators fix one RNG stream per replication, independent of
//! how replications are distributed over threads, so estimates are
//! bit-identical for every worker count.

use crate::correlation::CentralMomentQuery;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::exact::DesignOracle;
use crate::pmf::{pmf, CountDist};
use crate::sum::neumaier_sum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Tolerance for conditional probabilities before they are declared broken.
const GUARD_SLACK: f64 = 1e-12;

/// Replications per deterministic accumulation chunk.
const CHUNK: u64 = 4096;

/// Which sampling algorithm produced a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    /// Independent draws retried until the size constraint holds.
    Rejection,
    /// One conditional pass over the units in index order.
    Sequential,
    /// Independent draws with no size constraint.
    Poisson,
}

impl SampleMethod {
    /// Stable token used by command-line interfaces and output files.
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleMethod::Rejection => "rejection",
            SampleMethod::Sequential => "sequential",
            SampleMethod::Poisson => "poisson",
        }
    }
}

impl fmt::Display for SampleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SampleMethod {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        match token {
            "rejection" => Ok(SampleMethod::Rejection),
            "sequential" => Ok(SampleMethod::Sequential),
            "poisson" => Ok(SampleMethod::Poisson),
            other => Err(Error::Parse(format!("unknown sample method '{other}'"))),
        }
    }
}

/// One drawn sample: sorted unit indices plus how it was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    /// Included units, ascending, zero-based.
    pub units: Vec<usize>,
    /// Algorithm that produced the draw.
    pub method: SampleMethod,
    /// Independent-draw attempts consumed (always 1 outside rejection).
    pub attempts: u64,
}

/// Draws every unit independently with its own probability.
pub fn sample_poisson<R: Rng + ?Sized>(design: &Design, rng: &mut R) -> Sample {
    let units = design
        .p()
        .iter()
        .enumerate()
        .filter(|&(_, &p)| rng.gen::<f64>() < p)
        .map(|(i, _)| i)
        .collect();
    Sample {
        units,
        method: SampleMethod::Poisson,
        attempts: 1,
    }
}

/// Repeats independent draws until one has exactly the design's size.
pub fn sample_rejective_rejection<R: Rng + ?Sized>(
    design: &Design,
    rng: &mut R,
    max_attempts: u64,
) -> Result<Sample> {
    let n = design.sample_size();
    for attempt in 1..=max_attempts {
        let mut draw = sample_poisson(design, rng);
        if draw.units.len() == n {
            draw.method = SampleMethod::Rejection;
            draw.attempts = attempt;
            return Ok(draw);
        }
    }
    Err(Error::MaxAttemptsExceeded {
        attempts: max_attempts,
    })
}

/// A rejection budget scaled to the design's acceptance probability.
///
/// Budgets one thousand expected acceptances, clamped to `10^8` attempts
/// so degenerate inputs cannot hang a caller.
pub fn default_max_attempts(design: &Design) -> u64 {
    let accept = pmf(design).at(design.sample_size()).max(1e-6);
    (1000.0 * (1.0 / accept).ceil()).min(1e8) as u64
}

/// Exact one-pass sampler over the units in index order.
#[derive(Debug)]
pub struct SequentialSampler {
    design: Design,
    suffix: Vec<CountDist>,
}

impl SequentialSampler {
    /// Builds the suffix count tables; fails if the size has no mass.
    pub fn new(design: Design) -> Result<Self> {
        let population = design.population();
        let n = design.sample_size();
        let mut suffix = vec![CountDist::point_mass(); population + 1];
        let mut current = CountDist::point_mass();
        for i in (0..population).rev() {
            current.push(design.p()[i], n);
            suffix[i] = current.clone();
        }
        if suffix[0].at(n) <= 0.0 {
            return Err(Error::ZeroDenominator {
                context: "sequential sampler acceptance probability",
            });
        }
        Ok(SequentialSampler { design, suffix })
    }

    /// The design being sampled.
    pub fn design(&self) -> &Design {
        &self.design
    }

    fn conditional_include(&self, i: usize, remaining: usize) -> Result<f64> {
        let p = self.design.p()[i];
        let with = if remaining == 0 {
            0.0
        } else {
            p * self.suffix[i + 1].at(remaining - 1)
        };
        let without = (1.0 - p) * self.suffix[i + 1].at(remaining);
        let conditional = with / (with + without);
        if !(-GUARD_SLACK..=1.0 + GUARD_SLACK).contains(&conditional) {
            return Err(Error::NumericGuard { value: conditional });
        }
        Ok(conditional.clamp(0.0, 1.0))
    }

    /// Draws one exact sample of the design's fixed size.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample> {
        let n = self.design.sample_size();
        let mut units = Vec::with_capacity(n);
        let mut remaining = n;
        for i in 0..self.design.population() {
            if remaining == 0 {
                break;
            }
            let conditional = self.conditional_include(i, remaining)?;
            if rng.gen::<f64>() < conditional {
                units.push(i);
                remaining -= 1;
            }
        }
        if remaining != 0 {
            return Err(Error::NumericGuard {
                value: remaining as f64,
            });
        }
        Ok(Sample {
            units,
            method: SampleMethod::Sequential,
            attempts: 1,
        })
    }

    /// Probability that a full pass selects exactly `units`.
    ///
    /// This multiplies the same conditional probabilities the sampler draws
    /// from, so it equals the design probability of the sample.
    pub fn path_probability(&self, units: &[usize]) -> Result<f64> {
        let sorted = self.design.check_subset(units)?;
        let n = self.design.sample_size();
        if sorted.len() < n {
            return Err(Error::TooSmall {
                size: sorted.len(),
                minimum: n,
                context: "sample path",
            });
        }
        if sorted.len() > n {
            return Err(Error::TooLarge {
                size: sorted.len(),
                limit: n,
                context: "sample path",
            });
        }
        let mut probability = 1.0;
        let mut remaining = n;
        let mut next = sorted.iter().copied().peekable();
        for i in 0..self.design.population() {
            if remaining == 0 {
                break;
            }
            let conditional = self.conditional_include(i, remaining)?;
            if next.peek() == Some(&i) {
                next.next();
                probability *= conditional;
                remaining -= 1;
            } else {
                probability *= 1.0 - conditional;
            }
        }
        Ok(probability)
    }
}

/// Draws `reps` samples with one RNG stream per draw index.
///
/// Draw `r` uses stream `r` of the base seed, the same convention as the
/// Monte Carlo estimators, so any prefix of the output is unchanged when
/// `reps` grows.
pub fn draw_replicated(
    design: &Design,
    method: SampleMethod,
    reps: u64,
    seed: u64,
) -> Result<Vec<Sample>> {
    let sequential = match method {
        SampleMethod::Sequential => Some(SequentialSampler::new(design.clone())?),
        _ => None,
    };
    let attempts = match method {
        SampleMethod::Rejection => default_max_attempts(design),
        _ => 0,
    };
    let mut samples = Vec::with_capacity(reps as usize);
    for draw in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw);
        samples.push(match (&sequential, method) {
            (Some(sampler), _) => sampler.draw(&mut rng)?,
            (None, SampleMethod::Rejection) => {
                sample_rejective_rejection(design, &mut rng, attempts)?
            }
            (None, _) => sample_poisson(design, &mut rng),
        });
    }
    Ok(samples)
}

/// A Monte Carlo estimate with its replication count and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Human-readable description of the estimated quantity.
    pub target: String,
    /// Sample mean over all replications.
    pub estimate: f64,
    /// Number of replications.
    pub replications: u64,
    /// Standard error of the mean; absent for a single replication.
    pub std_error: Option<f64>,
    /// Base seed of the replication streams.
    pub seed: u64,
}

/// Runs `value` once per replication on its own RNG stream and averages.
///
/// Stream `r` of the base seed drives replication `r`, and partial sums are
/// combined in fixed chunk order, so the result does not depend on the
/// rayon worker count.
fn mc_run<F>(target: String, replications: u64, seed: u64, value: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if replications == 0 {
        return Err(Error::TooSmall {
            size: 0,
            minimum: 1,
            context: "replications",
        });
    }
    let chunks = replications.div_ceil(CHUNK);
    let partials: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(replications);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for replication in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(replication);
                let v = value(&mut rng)?;
                sum += v;
                sum_sq += v * v;
            }
            Ok((sum, sum_sq))
        })
        .collect();
    let mut sums = Vec::with_capacity(partials.len());
    let mut squares = Vec::with_capacity(partials.len());
    for partial in partials {
        let (s, q) = partial?;
        sums.push(s);
        squares.push(q);
    }
    let total = neumaier_sum(sums.iter().copied());
    let total_sq = neumaier_sum(squares.iter().copied());
    let r = replications as f64;
    let estimate = total / r;
    let std_error = if replications > 1 {
        let variance = ((total_sq - total * total / r) / (r - 1.0)).max(0.0);
        Some((variance / r).sqrt())
    } else {
        None
    };
    Ok(McEstimate {
        target,
        estimate,
        replications,
        std_error,
        seed,
    })
}

/// Monte Carlo estimate of the joint inclusion probability of `units`.
pub fn mc_inclusion(
    design: &Design,
    units: &[usize],
    replications: u64,
    seed: u64,
) -> Result<McEstimate> {
    let sorted = design.check_subset(units)?;
    let sampler = SequentialSampler::new(design.clone())?;
    mc_run(
        format!("inclusion units={sorted:?}"),
        replications,
        seed,
        move |rng| {
            let sample = sampler.draw(rng)?;
            let all_in = sorted
                .iter()
                .all(|unit| sample.units.binary_search(unit).is_ok());
            Ok(if all_in { 1.0 } else { 0.0 })
        },
    )
}

/// Monte Carlo estimate of a central moment of inclusion indicators.
///
/// The centring constants are the exact first-order probabilities, so the
/// estimator is unbiased for the quantity
/// [`central_moment_exact`](crate::correlation::central_moment_exact) returns.
pub fn mc_central_moment(
    design: &Design,
    query: &CentralMomentQuery,
    replications: u64,
    seed: u64,
) -> Result<McEstimate> {
    let oracle = DesignOracle::new(design.clone())?;
    let pi: Vec<f64> = query
        .units()
        .iter()
        .map(|&u| oracle.first_order()[u])
        .collect();
    let sampler = SequentialSampler::new(design.clone())?;
    let units = query.units().to_vec();
    let powers = query.powers().to_vec();
    mc_run(
        format!("moment units={units:?} powers={powers:?}"),
        replications,
        seed,
        move |rng| {
            let sample = sampler.draw(rng)?;
            let mut product = 1.0;
            for ((&unit, &power), &pi_u) in units.iter().zip(&powers).zip(&pi) {
                let indicator = if sample.units.binary_search(&unit).is_ok() {
                    1.0
                } else {
                    0.0
                };
                product *= (indicator - pi_u).powi(power as i32);
            }
            Ok(product)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::central_moment_exact;
    use crate::exact::enumerate_rejective;
    use crate::testkit::random_design;

    fn twelfths() -> Design {
        let p: Vec<f64> = (1..=8).map(|i| i as f64 / 12.0).collect();
        Design::new(p, 3).unwrap()
    }

    #[test]
    fn method_tokens_round_trip() {
        for method in [
            SampleMethod::Rejection,
            SampleMethod::Sequential,
            SampleMethod::Poisson,
        ] {
            assert_eq!(method.as_str().parse::<SampleMethod>().unwrap(), method);
        }
        assert!("systematic".parse::<SampleMethod>().is_err());
    }

    #[test]
    fn path_probabilities_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let design = random_design(&mut rng, 7, 3);
            let sampler = SequentialSampler::new(design.clone()).unwrap();
            let enumeration = enumerate_rejective(&design).unwrap();
            for (sample, probability) in enumeration.entries() {
                let path = sampler.path_probability(sample).unwrap();
                assert!(
                    (path - probability).abs() < 1e-12,
                    "sample {sample:?}: {path} vs {probability}"
                );
            }
        }
    }

    #[test]
    fn path_probability_rejects_wrong_sizes() {
        let sampler = SequentialSampler::new(twelfths()).unwrap();
        assert!(matches!(
            sampler.path_probability(&[0, 1]),
            Err(Error::TooSmall { .. })
        ));
        assert!(matches!(
            sampler.path_probability(&[0, 1, 2, 3]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn impossible_paths_have_zero_probability() {
        let design = Design::new(vec![1.0, 0.0, 0.5, 0.5], 2).unwrap();
        let sampler = SequentialSampler::new(design).unwrap();
        assert_eq!(sampler.path_probability(&[1, 2]).unwrap(), 0.0);
        let with_forced = sampler.path_probability(&[0, 2]).unwrap();
        assert!((with_forced - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sequential_draws_have_exact_size_and_respect_determinism() {
        let design = Design::new(vec![1.0, 0.0, 0.5, 0.5], 2).unwrap();
        let sampler = SequentialSampler::new(design).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let sample = sampler.draw(&mut rng).unwrap();
            assert_eq!(sample.units.len(), 2);
            assert_eq!(sample.units[0], 0, "forced unit missing");
            assert!(!sample.units.contains(&1), "excluded unit drawn");
            assert_eq!(sample.method, SampleMethod::Sequential);
        }
    }

    #[test]
    fn identical_seeds_give_identical_draws() {
        let sampler = SequentialSampler::new(twelfths()).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            assert_eq!(
                sampler.draw(&mut a).unwrap().units,
                sampler.draw(&mut b).unwrap().units
            );
        }
    }

    #[test]
    fn sequential_frequencies_approach_the_enumeration() {
        let design = twelfths();
        let sampler = SequentialSampler::new(design.clone()).unwrap();
        let enumeration = enumerate_rejective(&design).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 1_000_000_u64;
        for _ in 0..draws {
            let sample = sampler.draw(&mut rng).unwrap();
            *counts.entry(sample.units).or_insert(0_u64) += 1;
        }
        let mut tv = 0.0;
        for (sample, probability) in enumeration.entries() {
            let observed = counts.get(sample).copied().unwrap_or(0) as f64 / draws as f64;
            tv += (observed - probability).abs();
        }
        tv /= 2.0;
        assert!(tv < 0.005, "total variation {tv}");
    }

    #[test]
    fn rejection_sampler_passes_a_goodness_of_fit_test() {
        let design = Design::new(vec![0.375; 8], 3).unwrap();
        let enumeration = enumerate_rejective(&design).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 50_000_u64;
        let budget = default_max_attempts(&design);
        for _ in 0..draws {
            let sample = sample_rejective_rejection(&design, &mut rng, budget).unwrap();
            assert_eq!(sample.units.len(), 3);
            *counts.entry(sample.units).or_insert(0_u64) += 1;
        }
        let mut chi_sq = 0.0;
        for (sample, probability) in enumeration.entries() {
            let expected = probability * draws as f64;
            let observed = counts.get(sample).copied().unwrap_or(0) as f64;
            chi_sq += (observed - expected) * (observed - expected) / expected;
        }
        // 55 degrees of freedom; the 0.001 upper quantile is 93.168.
        assert!(chi_sq < 93.168, "chi-square statistic {chi_sq}");
    }

    #[test]
    fn rejection_budget_and_failure_are_reported() {
        let design = twelfths();
        let budget = default_max_attempts(&design);
        assert!(budget >= 1000);
        assert!(budget <= 100_000_000);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_rejective_rejection(&design, &mut rng, 0),
            Err(Error::MaxAttemptsExceeded { attempts: 0 })
        ));
    }

    #[test]
    fn poisson_draws_ignore_the_size_constraint() {
        let design = twelfths();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sizes = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let sample = sample_poisson(&design, &mut rng);
            assert_eq!(sample.method, SampleMethod::Poisson);
            assert_eq!(sample.attempts, 1);
            assert!(sample.units.iter().all(|&u| u < 8));
            sizes.insert(sample.units.len());
        }
        assert!(sizes.len() > 1, "every draw had the same size");
    }

    #[test]
    fn inclusion_estimates_agree_with_the_oracle() {
        let design = twelfths();
        let oracle = DesignOracle::new(design.clone()).unwrap();
        for units in [vec![7], vec![2, 6], vec![0, 4, 7]] {
            let estimate = mc_inclusion(&design, &units, 50_000, 1).unwrap();
            let exact = oracle.inclusion(&units).unwrap().value;
            let sigma = estimate.std_error.unwrap();
            assert!(
                (estimate.estimate - exact).abs() < 4.0 * sigma + 1e-9,
                "units {units:?}: {} vs {exact} (sigma {sigma})",
                estimate.estimate
            );
        }
    }

    #[test]
    fn equal_design_inclusion_is_the_sampling_fraction() {
        let design = Design::new(vec![0.3; 10], 3).unwrap();
        let estimate = mc_inclusion(&design, &[4], 20_000, 5).unwrap();
        let sigma = estimate.std_error.unwrap();
        assert!((estimate.estimate - 0.3).abs() < 4.0 * sigma);
    }

    #[test]
    fn moment_estimates_agree_with_the_exact_value() {
        let design = twelfths();
        let query = CentralMomentQuery::new(vec![1, 6], vec![1, 1]).unwrap();
        let oracle = DesignOracle::new(design.clone()).unwrap();
        let exact = central_moment_exact(&oracle, &query).unwrap();
        let estimate = mc_central_moment(&design, &query, 80_000, 9).unwrap();
        let sigma = estimate.std_error.unwrap();
        assert!(
            (estimate.estimate - exact).abs() < 4.0 * sigma + 1e-9,
            "{} vs {exact} (sigma {sigma})",
            estimate.estimate
        );
    }

    #[test]
    fn estimates_are_bit_identical_across_runs() {
        let design = twelfths();
        let a = mc_inclusion(&design, &[1, 5], 10_000, 42).unwrap();
        let b = mc_inclusion(&design, &[1, 5], 10_000, 42).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.unwrap().to_bits(), b.std_error.unwrap().to_bits());
    }

    #[test]
    fn single_replication_has_no_standard_error() {
        let design = twelfths();
        let estimate = mc_inclusion(&design, &[0], 1, 0).unwrap();
        assert_eq!(estimate.replications, 1);
        assert!(estimate.std_error.is_none());
        assert!(estimate.estimate == 0.0 || estimate.estimate == 1.0);
        assert!(matches!(
            mc_inclusion(&design, &[0], 0, 0),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn odd_replication_counts_split_cleanly_over_chunks() {
        let design = Design::new(vec![0.5; 6], 3).unwrap();
        let estimate = mc_inclusion(&design, &[2], 4097, 8).unwrap();
        assert_eq!(estimate.replications, 4097);
        assert!(estimate.estimate > 0.3 && estimate.estimate < 0.7);
    }
}
