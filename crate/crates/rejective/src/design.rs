//! Validated fixed-size sampling designs.
//!
//! A [`Design`] is a vector of per-unit inclusion probabilities `p` for the
//! underlying independent Bernoulli draws, together with the fixed sample size
//! `n` enforced by conditioning on the indicator total.  Construction checks
//!
//! * every `p[i]` lies in `[0, 1]`,
//! * `sum(p) = n` within [`SUM_TOLERANCE`] (the conditioning total equals the
//!   Bernoulli mean, which pins the scale of every expansion in this crate),
//! * deterministic units leave a sample of size `n` possible.
//!
//! [`DesignStats`] collects the variance `d = sum p_i (1 - p_i)` of the
//! unconditioned indicator sum and the weighted averages
//! `p_double_bar = d^-1 sum p_i^2 (1 - p_i)` and
//! `pq_double_bar = d^-1 sum p_i^2 (1 - p_i)^2` that appear in the
//! second-order constants.  [`SubsetStats`] restricts the analogous sums to a
//! subset of units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::stable_sum;

/// Absolute tolerance on `|sum(p) - n|` accepted at construction.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A validated probability vector with its fixed sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    p: Vec<f64>,
    n: usize,
}

/// On-disk JSON form of a design: `{"p": [...], "n": ...}`.
///
/// Unknown keys are rejected so that a misspelled field cannot silently turn
/// into a default.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    p: Vec<f64>,
    n: usize,
}

impl Design {
    /// Validates `p` and `n` and returns the design.
    pub fn new(p: Vec<f64>, n: usize) -> Result<Self> {
        for (index, &value) in p.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { index, value });
            }
        }
        let ones = p.iter().filter(|&&x| x == 1.0).count();
        let zeros = p.iter().filter(|&&x| x == 0.0).count();
        if n == 0 || n > p.len() {
            return Err(Error::Infeasible {
                ones,
                zeros,
                n,
                population: p.len(),
            });
        }
        let sum = stable_sum(p.iter().copied());
        if (sum - n as f64).abs() > SUM_TOLERANCE {
            return Err(Error::SumMismatch {
                sum,
                n,
                tol: SUM_TOLERANCE,
            });
        }
        if ones > n || zeros > p.len() - n {
            return Err(Error::Infeasible {
                ones,
                zeros,
                n,
                population: p.len(),
            });
        }
        Ok(Self { p, n })
    }

    /// Parses a design from its JSON document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: DesignFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(file.p, file.n)
    }

    /// Reads a design from a JSON file.
    pub fn from_json_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    /// Serialises the design to its JSON document.
    pub fn to_json_string(&self) -> String {
        let file = DesignFile {
            p: self.p.clone(),
            n: self.n,
        };
        serde_json::to_string(&file).expect("design serialisation cannot fail")
    }

    /// Per-unit Bernoulli probabilities.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Number of units in the population.
    pub fn population(&self) -> usize {
        self.p.len()
    }

    /// Fixed sample size enforced by the conditioning.
    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Checks that `units` are distinct in-range indices; returns them sorted.
    pub fn check_subset(&self, units: &[usize]) -> Result<Vec<usize>> {
        let mut sorted = units.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::BadIndex { index: pair[0] });
            }
        }
        if let Some(&last) = sorted.last() {
            if last >= self.p.len() {
                return Err(Error::BadIndex { index: last });
            }
        }
        Ok(sorted)
    }

    /// Summary statistics of the unconditioned indicator sum.
    ///
    /// Fails with [`Error::DegenerateDesign`] when every unit is
    /// deterministic, since then `d = 0` and the weighted averages are
    /// undefined.
    pub fn stats(&self) -> Result<DesignStats> {
        let d = stable_sum(self.p.iter().map(|&p| p * (1.0 - p)));
        if d <= 0.0 {
            return Err(Error::DegenerateDesign);
        }
        let p_double_bar = stable_sum(self.p.iter().map(|&p| p * p * (1.0 - p))) / d;
        let pq_double_bar =
            stable_sum(self.p.iter().map(|&p| p * p * (1.0 - p) * (1.0 - p))) / d;
        Ok(DesignStats {
            d,
            p_double_bar,
            pq_double_bar,
            pop_over_d: self.p.len() as f64 / d,
        })
    }

    /// Restriction of the variance-style sums to one subset of units.
    pub fn subset_stats(&self, units: &[usize]) -> Result<SubsetStats> {
        let sorted = self.check_subset(units)?;
        let term = |f: fn(f64) -> f64| stable_sum(sorted.iter().map(|&i| f(self.p[i])));
        Ok(SubsetStats {
            b1: term(|p| p),
            b2: term(|p| p * (1.0 - p)),
            b3: term(|p| p * (1.0 - p) * (1.0 - 2.0 * p)),
            b4: term(|p| p * (1.0 - p) * (1.0 - 6.0 * p + 6.0 * p * p)),
        })
    }
}

/// Statistics of the unconditioned indicator sum `K = sum I_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignStats {
    /// Variance `d = sum p_i (1 - p_i)` of `K` under independent draws.
    pub d: f64,
    /// Weighted average `d^-1 sum p_i^2 (1 - p_i)`.
    pub p_double_bar: f64,
    /// Weighted average `d^-1 sum p_i^2 (1 - p_i)^2`.
    pub pq_double_bar: f64,
    /// Ratio of population size to `d`; bounded ratios keep expansions honest.
    pub pop_over_d: f64,
}

/// Subset-restricted sums used by conditional expansion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetStats {
    /// `sum_{i in A} p_i`.
    pub b1: f64,
    /// `sum_{i in A} p_i (1 - p_i)`.
    pub b2: f64,
    /// `sum_{i in A} p_i (1 - p_i)(1 - 2 p_i)`.
    pub b3: f64,
    /// `sum_{i in A} p_i (1 - p_i)(1 - 6 p_i + 6 p_i^2)`.
    pub b4: f64,
}
