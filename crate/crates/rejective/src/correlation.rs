//! Central moments of inclusion indicators and asymptotic-condition checks.
//!
//! The quantities here drive asymptotic-normality arguments for fixed-size
//! designs: higher-order analogues of the covariance `pi_ij - pi_i pi_j`.
//! Everything is computed exactly from the design's leave-out distributions;
//! nothing in this module is Monte Carlo.
//!
//! Two independent routes produce the same number and are tested against each
//! other. [`central_moment_exact`] expands each centred indicator as
//! `(I - pi)^m = (1 - pi)^m I + (-pi)^m (1 - I)` and sums the probabilities of
//! the `2^k` inclusion patterns of the queried units. [`lemma4_decompose`]
//! instead rewrites the all-powers-one moment as an alternating sum of
//! joint-probability defects over the subsets of the query:
//!
//! ```text
//! E prod (I_i - pi_i) = sum over m = 2..=k of (-1)^(k-m)
//!     * sum over m-subsets S of (pi_S - prod pi) * prod over A - S of pi.
//! ```
//!
//! [`check_conditions`] evaluates the scaled correlation maxima that appear
//! as boundedness conditions in asymptotic statements, and
//! [`arratia_example`] builds the two-block design showing those conditions
//! are weaker than a probability-window requirement.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::exact::DesignOracle;
use crate::family::DesignFamily;
use crate::study::{ScalingStudy, StudyPoint, TupleSet};
use crate::sum::stable_sum;
use itertools::Itertools;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Largest number of distinct units in one exact-moment query.
pub const MAX_MOMENT_UNITS: usize = 10;

/// A product of centred inclusion indicators raised to positive powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralMomentQuery {
    units: Vec<usize>,
    powers: Vec<u32>,
}

impl CentralMomentQuery {
    /// Pairs each unit with its exponent; pairs are stored sorted by unit.
    pub fn new(units: Vec<usize>, powers: Vec<u32>) -> Result<Self> {
        if units.len() != powers.len() {
            return Err(Error::Parse(format!(
                "query has {} units but {} powers",
                units.len(),
                powers.len()
            )));
        }
        if units.len() < 2 {
            return Err(Error::TooSmall {
                size: units.len(),
                minimum: 2,
                context: "central-moment query",
            });
        }
        if powers.iter().any(|&m| m == 0) {
            return Err(Error::TooSmall {
                size: 0,
                minimum: 1,
                context: "moment power",
            });
        }
        let mut pairs: Vec<(usize, u32)> = units.into_iter().zip(powers).collect();
        pairs.sort_unstable();
        for window in pairs.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::BadIndex { index: window[0].0 });
            }
        }
        let (units, powers) = pairs.into_iter().unzip();
        Ok(CentralMomentQuery { units, powers })
    }

    /// The queried units, sorted ascending.
    pub fn units(&self) -> &[usize] {
        &self.units
    }

    /// The exponent attached to each unit, aligned with [`Self::units`].
    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    /// Total degree of the moment.
    pub fn order(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Probability of every inclusion pattern of `units`, indexed by bitmask.
///
/// Entry `mask` is the probability that exactly the units whose bit is set
/// are sampled, jointly with all other listed units being left out. All
/// `2^k` entries share one leave-out distribution of the remaining
/// population.
fn pattern_probabilities(oracle: &DesignOracle, units: &[usize]) -> Vec<f64> {
    let design = oracle.design();
    let n = design.sample_size();
    let k = units.len();
    let p: Vec<f64> = units.iter().map(|&u| design.p()[u]).collect();
    let j_max = k.min(n);
    let leave_out = oracle.leave_out_values(units, n - j_max, n);
    let mut probs = vec![0.0; 1 << k];
    for (mask, slot) in probs.iter_mut().enumerate() {
        let j = mask.count_ones() as usize;
        if j > n {
            continue;
        }
        let mut factor = 1.0;
        for (pos, &prob) in p.iter().enumerate() {
            factor *= if mask & (1 << pos) != 0 {
                prob
            } else {
                1.0 - prob
            };
        }
        *slot = factor * leave_out[j_max - j] / oracle.p_at_n();
    }
    probs
}

fn moment_from_patterns(pattern_probs: &[f64], pi: &[f64], powers: &[u32]) -> f64 {
    let terms = pattern_probs.iter().enumerate().map(|(mask, &prob)| {
        let mut weight = 1.0;
        for (pos, (&pi_i, &power)) in pi.iter().zip(powers).enumerate() {
            let centred = if mask & (1 << pos) != 0 {
                1.0 - pi_i
            } else {
                -pi_i
            };
            weight *= centred.powi(power as i32);
        }
        weight * prob
    });
    stable_sum(terms)
}

/// Exact value of `E prod (I_i - pi_i)^{m_i}` for the queried units.
pub fn central_moment_exact(oracle: &DesignOracle, query: &CentralMomentQuery) -> Result<f64> {
    let units = oracle.design().check_subset(query.units())?;
    if units.len() > MAX_MOMENT_UNITS {
        return Err(Error::TooLarge {
            size: units.len(),
            limit: MAX_MOMENT_UNITS,
            context: "inclusion-pattern expansion",
        });
    }
    let pi: Vec<f64> = units.iter().map(|&u| oracle.first_order()[u]).collect();
    let patterns = pattern_probabilities(oracle, &units);
    Ok(moment_from_patterns(&patterns, &pi, query.powers()))
}

/// Joint inclusion probabilities for the subsets of some base set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JointInclusionTable {
    entries: BTreeMap<Vec<usize>, f64>,
}

impl JointInclusionTable {
    /// An empty table.
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the joint probability of a sorted-or-not subset.
    pub fn insert(&mut self, units: &[usize], value: f64) {
        let mut key = units.to_vec();
        key.sort_unstable();
        self.entries.insert(key, value);
    }

    /// Fetches the joint probability of `units`.
    pub fn get(&self, units: &[usize]) -> Result<f64> {
        let mut key = units.to_vec();
        key.sort_unstable();
        self.entries
            .get(&key)
            .copied()
            .ok_or(Error::MissingEntry { units: key })
    }

    /// Fills the table with every subset of `units` of size `1..=k` using
    /// exact oracle queries.
    pub fn from_oracle(oracle: &DesignOracle, units: &[usize]) -> Result<Self> {
        let sorted = oracle.design().check_subset(units)?;
        let mut table = Self::new();
        for size in 1..=sorted.len() {
            for subset in sorted.iter().copied().combinations(size) {
                let value = oracle.inclusion(&subset)?.value;
                table.insert(&subset, value);
            }
        }
        Ok(table)
    }
}

/// The alternating subset decomposition of `E prod (I_i - pi_i)`.
///
/// Each unordered subset of size `m >= 2` contributes once; the `m = 1`
/// layer is absent because single-unit defects `pi_i - pi_i` vanish.
pub fn lemma4_decompose(table: &JointInclusionTable, units: &[usize]) -> Result<f64> {
    let mut sorted = units.to_vec();
    sorted.sort_unstable();
    for window in sorted.windows(2) {
        if window[0] == window[1] {
            return Err(Error::BadIndex { index: window[0] });
        }
    }
    let k = sorted.len();
    if k < 2 {
        return Err(Error::TooSmall {
            size: k,
            minimum: 2,
            context: "correlation decomposition",
        });
    }
    let pi: Vec<f64> = sorted
        .iter()
        .map(|&u| table.get(&[u]))
        .collect::<Result<_>>()?;
    let mut terms = Vec::new();
    for m in 2..=k {
        let sign = if (k - m) % 2 == 0 { 1.0 } else { -1.0 };
        for positions in (0..k).combinations(m) {
            let subset: Vec<usize> = positions.iter().map(|&pos| sorted[pos]).collect();
            let joint = table.get(&subset)?;
            let mut inside = 1.0;
            for &pos in &positions {
                inside *= pi[pos];
            }
            let mut outside = 1.0;
            let mut cursor = positions.iter().copied().peekable();
            for pos in 0..k {
                if cursor.peek() == Some(&pos) {
                    cursor.next();
                } else {
                    outside *= pi[pos];
                }
            }
            terms.push(sign * (joint - inside) * outside);
        }
    }
    Ok(stable_sum(terms))
}

/// Scaled correlation maxima for one design, with scan provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// Population size `N`.
    pub population: usize,
    /// Sample size `n`.
    pub sample_size: usize,
    /// Variance `d` of the independent-draw sample size.
    pub d: f64,
    /// `N / d`, the basic stability ratio.
    pub pop_over_d: f64,
    /// `n * max |pi_ij - pi_i pi_j|` over scanned pairs.
    pub c2max: f64,
    /// `(N^3 / n^2) * max |E (I_i - pi_i)^2 (I_j - pi_j)(I_k - pi_k)|`.
    pub c3max: f64,
    /// `(N^4 / n^2) * max |E prod over 4 units of (I - pi)|`.
    pub c4max: f64,
    /// `max |pi_ijkl - pi_ij pi_kl|` over the pairings of scanned 4-sets.
    pub cpair: f64,
    /// Whether every pair was visited (always true up to `N = 400`).
    pub pairs_exhaustive: bool,
    /// Tuple budget used for the order-3 and order-4 scans.
    pub budget: usize,
    /// Seed that generated any sampled tuple sets.
    pub seed: u64,
    /// Fraction of all order-2..4 tuples that were evaluated.
    pub coverage: f64,
}

fn tuple_max<F>(tuples: &TupleSet, score: F) -> Result<f64>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    tuples
        .tuples()
        .par_iter()
        .map(|tuple| score(tuple))
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))
}

/// Evaluates every condition quantity for one design.
///
/// Pairs are scanned exhaustively. Order-3 and order-4 scans are exhaustive
/// when the subset counts fit `tuple_budget`, and otherwise use the seeded
/// selection of [`TupleSet`], biased to include the extreme tuples.
pub fn check_conditions(design: &Design, tuple_budget: usize, seed: u64) -> Result<ConditionReport> {
    let stats = design.stats()?;
    let population = design.population();
    let sample_size = design.sample_size();
    let oracle = DesignOracle::new(design.clone())?;
    let pi = oracle.first_order().to_vec();

    let cov_max = oracle.pair_scan_max(|i, j, pi_ij| (pi_ij - pi[i] * pi[j]).abs());
    let c2max = sample_size as f64 * cov_max.max(0.0);

    let triples = TupleSet::generate(design, 3, tuple_budget, seed)?;
    let c3_raw = tuple_max(&triples, |tuple| {
        let pi3: Vec<f64> = tuple.iter().map(|&u| pi[u]).collect();
        let patterns = pattern_probabilities(&oracle, tuple);
        let mut best = f64::NEG_INFINITY;
        for squared in 0..3 {
            let powers = [0, 1, 2].map(|pos| if pos == squared { 2 } else { 1 });
            best = best.max(moment_from_patterns(&patterns, &pi3, &powers).abs());
        }
        Ok(best)
    })?;

    let quads = TupleSet::generate(design, 4, tuple_budget, seed)?;
    let unit_powers = [1_u32; 4];
    let (c4_raw, cpair) = quads
        .tuples()
        .par_iter()
        .map(|tuple| -> Result<(f64, f64)> {
            let pi4: Vec<f64> = tuple.iter().map(|&u| pi[u]).collect();
            let patterns = pattern_probabilities(&oracle, tuple);
            let moment = moment_from_patterns(&patterns, &pi4, &unit_powers).abs();
            let all_in = patterns[patterns.len() - 1];
            let mut pairing_best = f64::NEG_INFINITY;
            for (a, b) in [(1, 2), (2, 1), (3, 1)] {
                let left = [tuple[0], tuple[a]];
                let right = [tuple[b], tuple[6 - a - b]];
                let left_pi = oracle.inclusion(&left)?.value;
                let right_pi = oracle.inclusion(&right)?.value;
                pairing_best = pairing_best.max((all_in - left_pi * right_pi).abs());
            }
            Ok((moment, pairing_best))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, f64::NEG_INFINITY),
            |x, y| Ok((x.0.max(y.0), x.1.max(y.1))),
        )?;

    let pop = population as f64;
    let n = sample_size as f64;
    let scanned = pairs_count(population) + triples.tuples().len() as f64 + quads.tuples().len() as f64;
    let total = pairs_count(population) + subsets_count(population, 3) + subsets_count(population, 4);
    Ok(ConditionReport {
        population,
        sample_size,
        d: stats.d,
        pop_over_d: stats.pop_over_d,
        c2max,
        c3max: pop.powi(3) / (n * n) * c3_raw.max(0.0),
        c4max: pop.powi(4) / (n * n) * c4_raw.max(0.0),
        cpair: cpair.max(0.0),
        pairs_exhaustive: true,
        budget: tuple_budget,
        seed,
        coverage: (scanned / total).min(1.0),
    })
}

fn pairs_count(population: usize) -> f64 {
    subsets_count(population, 2)
}

fn subsets_count(population: usize, k: usize) -> f64 {
    let mut value = 1.0;
    for i in 0..k {
        value *= (population - i) as f64 / (i + 1) as f64;
    }
    value
}

/// Runs [`check_conditions`] on every design of a family.
pub fn check_conditions_family(
    family: &DesignFamily,
    tuple_budget: usize,
    seed: u64,
) -> Result<Vec<ConditionReport>> {
    family
        .designs()?
        .iter()
        .map(|design| check_conditions(design, tuple_budget, seed))
        .collect()
}

/// Fits the decay of the worst-case central moment across a family.
///
/// `powers` fixes both the number of units per tuple and the exponent each
/// position receives; exponents are applied to the tuple's units in
/// ascending order.
pub fn proposition1_study(
    family: &DesignFamily,
    powers: &[u32],
    tuple_budget: usize,
    seed: u64,
) -> Result<ScalingStudy> {
    let probe = CentralMomentQuery::new((0..powers.len()).collect(), powers.to_vec())?;
    let mut points = Vec::new();
    for design in family.designs()? {
        let population = design.population();
        let d = design.stats()?.d;
        let oracle = DesignOracle::new(design)?;
        let tuples = TupleSet::generate(oracle.design(), powers.len(), tuple_budget, seed)?;
        let max_abs_error = tuple_max(&tuples, |tuple| {
            let query = CentralMomentQuery::new(tuple.to_vec(), probe.powers().to_vec())?;
            Ok(central_moment_exact(&oracle, &query)?.abs())
        })?;
        points.push(StudyPoint {
            population,
            d,
            max_abs_error,
        });
    }
    ScalingStudy::fit(
        format!("{} powers={:?}", family.describe(), probe.powers()),
        points,
    )
}

/// The two-block stress design with one heavy block and a light remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct ArratiaExample {
    /// Target sampling fraction; the sample size is `round(gamma * N)`.
    pub gamma: f64,
    /// Window-condition tolerance used by [`Self::condition_holds`].
    pub delta: f64,
    /// Target heavy-block fraction; the block holds `round(alpha * N)` units.
    pub alpha: f64,
    /// Actual number of heavy-block units after rounding adjustments.
    pub block_size: usize,
    /// Probability `gamma / alpha` shared by the heavy block.
    pub block_p: f64,
    /// Probability of the remaining units, chosen so the sum is exactly `n`.
    pub tail_p: f64,
    /// `d / N` for the constructed design; tends to `gamma - gamma^2/alpha`.
    pub d_over_population: f64,
    /// `N / d`, the stability ratio that stays bounded here.
    pub pop_over_d: f64,
    design: Design,
}

impl ArratiaExample {
    /// The constructed design.
    pub fn design(&self) -> &Design {
        &self.design
    }

    /// Fraction of units with `eps/(1+eps) < p_i < 1/(1+eps)`.
    pub fn window_fraction(&self, eps: f64) -> f64 {
        let lo = eps / (1.0 + eps);
        let hi = 1.0 / (1.0 + eps);
        let population = self.design.population() as f64;
        let mut inside = 0.0;
        if self.block_p > lo && self.block_p < hi {
            inside += self.block_size as f64;
        }
        if self.tail_p > lo && self.tail_p < hi {
            inside += population - self.block_size as f64;
        }
        inside / population
    }

    /// Whether the window condition holds at tolerance `delta` for `eps`.
    pub fn condition_holds(&self, eps: f64) -> bool {
        self.window_fraction(eps) >= 1.0 - self.delta
    }

    /// The reporting grid `0.05, 0.10, ..., 0.95` with window fractions.
    pub fn window_grid(&self) -> Vec<(f64, f64)> {
        (1..=19)
            .map(|step| {
                let eps = step as f64 * 0.05;
                (eps, self.window_fraction(eps))
            })
            .collect()
    }
}

/// Builds the two-block design for parameters `0 < gamma < alpha < 1 - delta`.
///
/// `round(alpha * N)` units get `p = gamma / alpha` and the rest share the
/// probability that makes the total exactly `n = round(gamma * N)`; if
/// rounding would make that remainder negative, the block shrinks by one
/// unit at a time until it is not.
pub fn arratia_example(
    gamma: f64,
    delta: f64,
    alpha: f64,
    population: usize,
) -> Result<ArratiaExample> {
    let ordered = gamma > 0.0 && gamma < alpha && alpha < 1.0 - delta && delta > 0.0;
    if !ordered || !gamma.is_finite() || !alpha.is_finite() || !delta.is_finite() {
        return Err(Error::ParameterOrderViolated {
            gamma,
            alpha,
            delta,
        });
    }
    let n = (gamma * population as f64).round() as usize;
    let mut block_size = (alpha * population as f64).round() as usize;
    let block_p = gamma / alpha;
    if n == 0 || block_size == 0 || block_size >= population {
        return Err(Error::Infeasible {
            ones: 0,
            zeros: 0,
            n,
            population,
        });
    }
    while block_size > 1 && (n as f64) < block_size as f64 * block_p {
        block_size -= 1;
    }
    let tail_units = population - block_size;
    let tail_p = ((n as f64 - block_size as f64 * block_p) / tail_units as f64).max(0.0);
    let mut p = vec![block_p; block_size];
    p.extend(std::iter::repeat(tail_p).take(tail_units));
    let design = Design::new(p, n)?;
    let stats = design.stats()?;
    Ok(ArratiaExample {
        gamma,
        delta,
        alpha,
        block_size,
        block_p,
        tail_p,
        d_over_population: stats.d / population as f64,
        pop_over_d: stats.pop_over_d,
        design,
    })
}
