//! Log-log error-scaling studies and reproducible tuple selection.
//!
//! A study evaluates some error functional on each design of a growing family,
//! records one `(N, d, max_abs_error)` point per design, and fits an ordinary
//! least-squares line to `log10(max_abs_error)` against `log10(d)`. The fitted
//! slope is the empirical decay exponent that the asymptotic statements
//! predict.
//!
//! Maxima over unit tuples are taken either exhaustively, when the number of
//! combinations fits the budget, or over a seeded random selection augmented
//! with the two extreme tuples (the units with the smallest and with the
//! largest probabilities). Tuple sets are fully determined by
//! `(design, k, budget, seed)`, so repeated runs and parallel scans see the
//! same candidates.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::sum::neumaier_sum;
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// One design of a family, reduced to the quantities the fit uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyPoint {
    /// Population size of the design.
    pub population: usize,
    /// Variance `d` of the underlying independent-draw sample size.
    pub d: f64,
    /// Largest absolute error observed on this design.
    pub max_abs_error: f64,
}

/// A fitted log-log error decay across a design family.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    family: String,
    points: Vec<StudyPoint>,
    fitted_slope: f64,
    slope_stderr: f64,
}

impl ScalingStudy {
    /// Fits the decay exponent from per-design error maxima.
    ///
    /// Points are sorted by `d`; entries sharing the same `d` are merged by
    /// keeping the larger error, and points with a non-positive or non-finite
    /// error carry no information on a log scale and are dropped. At least
    /// four usable points must remain.
    pub fn fit(family: impl Into<String>, points: Vec<StudyPoint>) -> Result<Self> {
        let mut usable: Vec<StudyPoint> = points
            .into_iter()
            .filter(|pt| pt.max_abs_error > 0.0 && pt.max_abs_error.is_finite() && pt.d > 0.0)
            .collect();
        usable.sort_by(|a, b| a.d.total_cmp(&b.d));
        usable.dedup_by(|next, kept| {
            if next.d == kept.d {
                kept.max_abs_error = kept.max_abs_error.max(next.max_abs_error);
                true
            } else {
                false
            }
        });
        if usable.len() < 4 {
            return Err(Error::DegenerateFit {
                points: usable.len(),
                needed: 4,
            });
        }
        let xs: Vec<f64> = usable.iter().map(|pt| pt.d.log10()).collect();
        let ys: Vec<f64> = usable.iter().map(|pt| pt.max_abs_error.log10()).collect();
        let m = xs.len() as f64;
        let x_mean = neumaier_sum(xs.iter().copied()) / m;
        let y_mean = neumaier_sum(ys.iter().copied()) / m;
        let sxx = neumaier_sum(xs.iter().map(|x| (x - x_mean) * (x - x_mean)));
        let sxy = neumaier_sum(xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)));
        if sxx <= 0.0 {
            return Err(Error::DegenerateFit {
                points: usable.len(),
                needed: 4,
            });
        }
        let slope = sxy / sxx;
        let intercept = y_mean - slope * x_mean;
        let sse = neumaier_sum(xs.iter().zip(&ys).map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        }));
        let dof = m - 2.0;
        let slope_stderr = (sse.max(0.0) / dof / sxx).sqrt();
        Ok(ScalingStudy {
            family: family.into(),
            points: usable,
            fitted_slope: slope,
            slope_stderr,
        })
    }

    /// Human-readable description of the family under study.
    pub fn family(&self) -> &str {
        &self.family
    }

    /// The fitted points, sorted by strictly increasing `d`.
    pub fn points(&self) -> &[StudyPoint] {
        &self.points
    }

    /// Fitted slope of `log10(error)` against `log10(d)`.
    pub fn fitted_slope(&self) -> f64 {
        self.fitted_slope
    }

    /// Standard error of the fitted slope.
    pub fn slope_stderr(&self) -> f64 {
        self.slope_stderr
    }

    /// Width of the fitted `d` range in decades.
    pub fn span_decades(&self) -> f64 {
        let first = self.points.first().map(|pt| pt.d).unwrap_or(1.0);
        let last = self.points.last().map(|pt| pt.d).unwrap_or(1.0);
        (last / first).log10()
    }
}

/// Number of `k`-combinations of `n` items, saturating at `cap + 1`.
pub(crate) fn combinations_capped(n: usize, k: usize, cap: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut count: u128 = 1;
    for i in 0..k {
        count = count.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if count > cap as u128 {
            return cap + 1;
        }
    }
    count as usize
}

/// A reproducible collection of distinct sorted unit tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleSet {
    tuples: Vec<Vec<usize>>,
    exhaustive: bool,
    total_combinations: f64,
}

impl TupleSet {
    /// Selects `k`-tuples of units from `design`.
    ///
    /// When the design has at most `budget` distinct `k`-subsets they are all
    /// enumerated. Otherwise `budget` subsets are drawn uniformly from a
    /// generator seeded with `seed`, deduplicated, and joined by the two
    /// extreme tuples: the `k` units of smallest probability and the `k` units
    /// of largest probability, where the maxima of interest tend to live.
    pub fn generate(design: &Design, k: usize, budget: usize, seed: u64) -> Result<TupleSet> {
        let population = design.population();
        if k == 0 {
            return Err(Error::TooSmall {
                size: k,
                minimum: 1,
                context: "tuple order",
            });
        }
        if k > population {
            return Err(Error::TooLarge {
                size: k,
                limit: population,
                context: "tuple order",
            });
        }
        let total = combinations_capped(population, k, budget);
        let total_combinations = {
            let mut value = 1.0_f64;
            for i in 0..k.min(population - k) {
                value *= (population - i) as f64 / (i + 1) as f64;
            }
            value
        };
        if total <= budget {
            let tuples = (0..population).combinations(k).collect();
            return Ok(TupleSet {
                tuples,
                exhaustive: true,
                total_combinations,
            });
        }
        let mut chosen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..budget {
            let mut tuple = rand::seq::index::sample(&mut rng, population, k).into_vec();
            tuple.sort_unstable();
            chosen.insert(tuple);
        }
        let mut order: Vec<usize> = (0..population).collect();
        order.sort_by(|&a, &b| design.p()[a].total_cmp(&design.p()[b]).then(a.cmp(&b)));
        let mut smallest: Vec<usize> = order[..k].to_vec();
        smallest.sort_unstable();
        let mut largest: Vec<usize> = order[population - k..].to_vec();
        largest.sort_unstable();
        chosen.insert(smallest);
        chosen.insert(largest);
        Ok(TupleSet {
            tuples: chosen.into_iter().collect(),
            exhaustive: false,
            total_combinations,
        })
    }

    /// The selected tuples, each sorted ascending, in lexicographic order.
    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    /// Whether every distinct tuple was enumerated.
    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// Fraction of all distinct tuples that were selected.
    pub fn coverage(&self) -> f64 {
        if self.exhaustive {
            1.0
        } else {
            (self.tuples.len() as f64 / self.total_combinations).min(1.0)
        }
    }
}
