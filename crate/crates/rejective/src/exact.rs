//! Exact inclusion probabilities under the conditional Poisson design.
//!
//! The fixed-size design assigns a size-`n` subset `s` probability
//! proportional to `prod_{i in s} p_i * prod_{i not in s} (1 - p_i)`.
//! Conditioning the independent draws on the total `K = n` gives, for any
//! subset `A` of `k` units,
//!
//! ```text
//! pi_A = p_{i1} ... p_{ik} * P(K_{-A} = n - k) / P(K = n)
//! ```
//!
//! where `K_{-A}` is the indicator sum over the units outside `A`.  Both
//! probabilities come from Poisson-binomial convolutions, so every quantity
//! here is exact up to floating-point rounding: no expansion or sampling is
//! involved.
//!
//! [`DesignOracle`] precomputes the full distribution of `K` and split tables
//! over the unit order once, after which each leave-out evaluation convolves
//! only the stretch of units between the first and last excluded index.
//! [`enumerate_rejective`] provides the brute-force check for small
//! populations by listing all size-`n` subsets.

use itertools::Itertools;
use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
#[cfg(test)]
use crate::pmf::CountDist;
use crate::pmf::{pmf, PoissonBinomialPmf, SplitTables};

/// Maximum population size accepted by [`enumerate_rejective`].
pub const ENUMERATION_LIMIT: usize = 20;

/// How an inclusion probability was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact Poisson-binomial conditioning (convolution based).
    ExactDp,
    /// Exact brute-force enumeration of all fixed-size subsets.
    Enumeration,
    /// Product form with the pair correction built from the Bernoulli `p`.
    Theorem1P,
    /// Product form with the pair correction built from first-order
    /// inclusion probabilities.
    Theorem1Pi,
    /// Classical second-order pair formula at first-order probabilities.
    Hajek2,
}

impl Method {
    /// Stable identifier used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactDp => "exact-dp",
            Method::Enumeration => "enumeration",
            Method::Theorem1P => "theorem1-p",
            Method::Theorem1Pi => "theorem1-pi",
            Method::Hajek2 => "hajek2",
        }
    }
}

/// A joint inclusion probability together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionResult {
    /// The queried units, sorted ascending.
    pub units: Vec<usize>,
    /// Probability that every queried unit is in the sample.
    pub value: f64,
    /// How the value was computed.
    pub method: Method,
    /// The variance `d` entering the formula, for approximate methods only.
    pub d_used: Option<f64>,
}

/// Precomputed exact-query state for one design.
#[derive(Debug)]
pub struct DesignOracle {
    design: Design,
    pmf: PoissonBinomialPmf,
    p_at_n: f64,
    tables: SplitTables,
    pi: Vec<f64>,
}

impl DesignOracle {
    /// Builds the distribution of `K`, split tables, and all first-order
    /// inclusion probabilities for `design`.
    pub fn new(design: Design) -> Result<Self> {
        let n = design.sample_size();
        let pmf = pmf(&design);
        let p_at_n = pmf.at(n);
        if p_at_n <= 0.0 {
            return Err(Error::ZeroDenominator {
                context: "P(K = n) vanished for this design",
            });
        }
        let tables = SplitTables::new(design.p(), n);
        let pi = (0..design.population())
            .map(|i| {
                let p = design.p()[i];
                if p == 0.0 {
                    0.0
                } else if n == 0 {
                    0.0
                } else {
                    p * tables.leave_one_out_at(i, n - 1) / p_at_n
                }
            })
            .collect();
        Ok(Self {
            design,
            pmf,
            p_at_n,
            tables,
            pi,
        })
    }

    /// The underlying design.
    pub fn design(&self) -> &Design {
        &self.design
    }

    /// Distribution of the unconditioned indicator sum.
    pub fn pmf(&self) -> &PoissonBinomialPmf {
        &self.pmf
    }

    /// `P(K = n)`, the conditioning probability.
    pub fn p_at_n(&self) -> f64 {
        self.p_at_n
    }

    /// Exact first-order inclusion probabilities for every unit.
    pub fn first_order(&self) -> &[f64] {
        &self.pi
    }

    /// `P(sum over units outside `excluded` equals t)` for sorted, distinct,
    /// in-range `excluded`; requires `t <= n`.
    fn leave_out_at(&self, excluded: &[usize], t: usize) -> f64 {
        let first = excluded[0];
        let last = *excluded.last().expect("nonempty excluded set");
        let mut cur = self.tables.prefix[first].clone();
        let mut skip = excluded[1..].iter().copied().peekable();
        for (i, &p) in self.design.p().iter().enumerate().take(last).skip(first + 1) {
            if skip.peek() == Some(&i) {
                skip.next();
            } else {
                cur.push(p, self.tables.cap);
            }
        }
        cur.convolved_at(&self.tables.suffix[last + 1], t)
    }

    /// Leave-out probabilities at every count in `t_lo..=t_hi` in one sweep.
    pub(crate) fn leave_out_values(&self, excluded: &[usize], t_lo: usize, t_hi: usize) -> Vec<f64> {
        let first = excluded[0];
        let last = *excluded.last().expect("nonempty excluded set");
        let mut cur = self.tables.prefix[first].clone();
        let mut skip = excluded[1..].iter().copied().peekable();
        for (i, &p) in self.design.p().iter().enumerate().take(last).skip(first + 1) {
            if skip.peek() == Some(&i) {
                skip.next();
            } else {
                cur.push(p, self.tables.cap);
            }
        }
        let tail = &self.tables.suffix[last + 1];
        (t_lo..=t_hi).map(|t| cur.convolved_at(tail, t)).collect()
    }

    /// Exact joint inclusion probability of `units`.
    pub fn inclusion(&self, units: &[usize]) -> Result<InclusionResult> {
        let sorted = self.design.check_subset(units)?;
        let n = self.design.sample_size();
        let value = if sorted.is_empty() {
            1.0
        } else if sorted.len() > n {
            0.0
        } else {
            let product: f64 = sorted.iter().map(|&i| self.design.p()[i]).product();
            if product == 0.0 {
                0.0
            } else {
                product * self.leave_out_at(&sorted, n - sorted.len()) / self.p_at_n
            }
        };
        Ok(InclusionResult {
            units: sorted,
            value,
            method: Method::ExactDp,
            d_used: None,
        })
    }

    /// Probability that every unit in `s_in` is sampled and none in `s_out`.
    pub fn exclusion_pattern(&self, s_in: &[usize], s_out: &[usize]) -> Result<f64> {
        let mut combined = Vec::with_capacity(s_in.len() + s_out.len());
        combined.extend_from_slice(s_in);
        combined.extend_from_slice(s_out);
        let sorted = self.design.check_subset(&combined)?;
        let n = self.design.sample_size();
        if s_in.len() > n || s_out.len() > self.design.population() - n {
            return Ok(0.0);
        }
        let mut factor = 1.0;
        for &i in s_in {
            factor *= self.design.p()[i];
        }
        for &i in s_out {
            factor *= 1.0 - self.design.p()[i];
        }
        if factor == 0.0 || sorted.is_empty() {
            return Ok(if sorted.is_empty() { 1.0 } else { 0.0 });
        }
        Ok(factor * self.leave_out_at(&sorted, n - s_in.len()) / self.p_at_n)
    }

    /// Maximum of `score(i, j, pi_ij)` over all pairs `i < j`, visiting every
    /// pair's exact joint probability.
    ///
    /// The sweep clones the prefix distribution at `i` and extends it one unit
    /// at a time, so the whole scan costs `O(N^2 n)` instead of a fresh
    /// convolution per pair.  Per-`i` maxima are combined with `f64::max`,
    /// which is associative, so the parallel schedule cannot change the result.
    pub fn pair_scan_max<F>(&self, score: F) -> f64
    where
        F: Fn(usize, usize, f64) -> f64 + Sync,
    {
        let npop = self.design.population();
        if npop < 2 {
            return f64::NEG_INFINITY;
        }
        let n = self.design.sample_size();
        (0..npop - 1)
            .into_par_iter()
            .map(|i| {
                let p = self.design.p();
                let mut cur = self.tables.prefix[i].clone();
                let mut best = f64::NEG_INFINITY;
                for j in i + 1..npop {
                    let pi_ij = if n < 2 {
                        0.0
                    } else {
                        let lo = cur.convolved_at(&self.tables.suffix[j + 1], n - 2);
                        p[i] * p[j] * lo / self.p_at_n
                    };
                    best = best.max(score(i, j, pi_ij));
                    cur.push(p[j], self.tables.cap);
                }
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
}

/// Exact joint inclusion probability without keeping oracle state around.
pub fn exact_inclusion(design: &Design, units: &[usize]) -> Result<InclusionResult> {
    DesignOracle::new(design.clone())?.inclusion(units)
}

/// Probability of an indicator pattern (`s_in` sampled, `s_out` not).
pub fn exact_exclusion_pattern(design: &Design, s_in: &[usize], s_out: &[usize]) -> Result<f64> {
    DesignOracle::new(design.clone())?.exclusion_pattern(s_in, s_out)
}

/// The full fixed-size design on a small population, subset by subset.
#[derive(Debug, Clone)]
pub struct RejectiveEnumeration {
    population: usize,
    n: usize,
    entries: Vec<(Vec<usize>, f64)>,
}

impl RejectiveEnumeration {
    /// Number of units in the population.
    pub fn population(&self) -> usize {
        self.population
    }

    /// Fixed sample size.
    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// All `(subset, probability)` entries in lexicographic subset order.
    pub fn entries(&self) -> &[(Vec<usize>, f64)] {
        &self.entries
    }

    /// Probability of drawing exactly `subset`.
    pub fn probability(&self, subset: &[usize]) -> Result<f64> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        self.entries
            .binary_search_by(|(s, _)| s.as_slice().cmp(sorted.as_slice()))
            .map(|idx| self.entries[idx].1)
            .map_err(|_| Error::MissingEntry { units: sorted })
    }

    /// Joint inclusion probability of `units` by summing over supersets.
    pub fn joint_inclusion(&self, units: &[usize]) -> Result<f64> {
        let mut sorted = units.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::BadIndex { index: pair[0] });
            }
        }
        if let Some(&last) = sorted.last() {
            if last >= self.population {
                return Err(Error::BadIndex { index: last });
            }
        }
        let total: f64 = self
            .entries
            .iter()
            .filter(|(s, _)| sorted.iter().all(|u| s.binary_search(u).is_ok()))
            .map(|&(_, w)| w)
            .sum();
        Ok(total)
    }
}

/// Enumerates every size-`n` subset with its conditional probability.
pub fn enumerate_rejective(design: &Design) -> Result<RejectiveEnumeration> {
    let npop = design.population();
    if npop > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size: npop,
            limit: ENUMERATION_LIMIT,
            context: "subset enumeration",
        });
    }
    let p = design.p();
    let n = design.sample_size();
    let mut entries = Vec::new();
    let mut total = 0.0;
    for subset in (0..npop).combinations(n) {
        let mut weight = 1.0;
        let mut inside = subset.iter().copied().peekable();
        for (i, &pi) in p.iter().enumerate() {
            if inside.peek() == Some(&i) {
                inside.next();
                weight *= pi;
            } else {
                weight *= 1.0 - pi;
            }
        }
        total += weight;
        entries.push((subset, weight));
    }
    if total <= 0.0 {
        return Err(Error::ZeroDenominator {
            context: "all fixed-size subsets have zero Poisson weight",
        });
    }
    for entry in &mut entries {
        entry.1 /= total;
    }
    Ok(RejectiveEnumeration {
        population: npop,
        n,
        entries,
    })
}

/// Builds a [`CountDist`] for the units outside `excluded`, exact up to `cap`.
#[cfg(test)]
pub(crate) fn leave_out_distribution(design: &Design, excluded: &[usize], cap: usize) -> CountDist {
    let mut skip = excluded.iter().copied().peekable();
    let mut dist = crate::pmf::count_distribution(std::iter::empty(), cap);
    for (i, &p) in design.p().iter().enumerate() {
        if skip.peek() == Some(&i) {
            skip.next();
        } else {
            dist.push(p, cap);
        }
    }
    dist
}
