//! Edgeworth corrections for the distribution of the indicator sum.
//!
//! With `d` the variance and `kappa_m` the cumulants of `K`, the order-`m`
//! approximation to `P(K = l)` at the standardised point `x = (l - n)/sqrt(d)`
//! is
//!
//! ```text
//! f_m(x) = d^{-1/2} phi(x) (1 + P_1(x) + ... + P_m(x))
//! ```
//!
//! where `phi` is the standard normal density and each correction term sums
//! over the ways of building total weight `j` from parts of size `1..=j`:
//!
//! ```text
//! P_j(x) = d^{-j/2} * sum over {k_1..k_j : sum m k_m = j} of
//!          He_{j+2r}(x) * prod_m (1/k_m!) (1/(m+2)!)^{k_m} (kappa_{m+2}/d)^{k_m},
//! r = k_1 + ... + k_j.
//! ```
//!
//! Odd corrections vanish at `x = 0` because odd-degree Hermite polynomials
//! have no constant term, so at the central count only `P_2, P_4, ...`
//! contribute; for example
//! `P_2(0) = -(15/72) kappa_3^2 / d^3 + (3/24) kappa_4 / d^2`.
//!
//! [`lemma1_constants`] exposes the second-order constants of the matching
//! central-probability expansions
//! `P(K = n) = (2 pi d)^{-1/2} (1 + c_1/d + O(d^-2))` and, conditionally on
//! forcing a subset `A` of size `k` into the sample,
//! `P(K = n | I_A = 1) = (2 pi d)^{-1/2} (1 + c_2/d + O(d^-2))` with
//!
//! ```text
//! c_1 = (1/8)(1 - 6 pq_double_bar) - (5/24)(1 - 2 p_double_bar)^2
//! c_2 = (1/2)(B_2 - (B_1 - k)^2) - (1/2)(B_1 - k)(1 - 2 p_double_bar) + c_1.
//! ```

use crate::cumulant::{cumulants, CumulantSet};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::hermite::HermiteTable;

/// Largest Edgeworth correction order `P_j` that can be assembled.
pub const MAX_TERM_ORDER: usize = 10;

/// Largest approximation order accepted by [`edgeworth_pmf_approx`].
pub const MAX_PMF_ORDER: usize = 4;

/// One solution of `k_1 + 2 k_2 + ... + j k_j = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSolution {
    /// Multiplicities `k_1 ..= k_j`.
    pub counts: Vec<usize>,
    /// `r = k_1 + ... + k_j`.
    pub r: usize,
}

/// All solutions for one weight `j`, in a fixed deterministic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSolutionSet {
    j: usize,
    solutions: Vec<PartitionSolution>,
}

impl PartitionSolutionSet {
    /// The target weight `j`.
    pub fn weight(&self) -> usize {
        self.j
    }

    /// The enumerated solutions.
    pub fn solutions(&self) -> &[PartitionSolution] {
        &self.solutions
    }
}

/// Enumerates the multiplicity vectors of integer partitions of `j`.
pub fn partition_solutions(j: usize) -> Result<PartitionSolutionSet> {
    const LIMIT: usize = 20;
    if j == 0 || j > LIMIT {
        return Err(Error::OrderTooLarge {
            order: j,
            limit: LIMIT,
            context: "partition enumeration",
        });
    }
    let mut solutions = Vec::new();
    let mut counts = vec![0_usize; j];
    fn recurse(
        part: usize,
        remaining: usize,
        counts: &mut Vec<usize>,
        out: &mut Vec<PartitionSolution>,
    ) {
        if remaining == 0 {
            out.push(PartitionSolution {
                counts: counts.clone(),
                r: counts.iter().sum(),
            });
            return;
        }
        if part > remaining {
            return;
        }
        for multiplicity in 0..=remaining / part {
            counts[part - 1] = multiplicity;
            recurse(part + 1, remaining - multiplicity * part, counts, out);
            counts[part - 1] = 0;
        }
    }
    recurse(1, j, &mut counts, &mut solutions);
    Ok(PartitionSolutionSet { j, solutions })
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, v| acc * v as f64)
}

/// The correction term `P_j(x)` for a design with variance `d`.
///
/// Requires cumulants up to order `j + 2` in `set`.
pub fn edgeworth_term(set: &CumulantSet, d: f64, j: usize, x: f64) -> Result<f64> {
    if j == 0 || j > MAX_TERM_ORDER {
        return Err(Error::OrderTooLarge {
            order: j,
            limit: MAX_TERM_ORDER,
            context: "Edgeworth correction",
        });
    }
    let hermite = HermiteTable::new(3 * j)?;
    let mut total = 0.0;
    for solution in partition_solutions(j)?.solutions() {
        let mut product = hermite.eval(j + 2 * solution.r, x)?;
        for (m_minus_1, &count) in solution.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let m = m_minus_1 + 1;
            let scaled = set.kappa(m + 2)? / d;
            product *= (scaled / factorial(m + 2)).powi(count as i32) / factorial(count);
        }
        total += product;
    }
    Ok(total / d.powf(j as f64 / 2.0))
}

/// Order-`m` Edgeworth approximation of `P(K = l)`.
pub fn edgeworth_pmf_approx(design: &Design, l: usize, m: usize) -> Result<f64> {
    if m > MAX_PMF_ORDER {
        return Err(Error::OrderTooLarge {
            order: m,
            limit: MAX_PMF_ORDER,
            context: "Edgeworth density order",
        });
    }
    if l > design.population() {
        return Err(Error::BadIndex { index: l });
    }
    let stats = design.stats()?;
    let set = cumulants(design, m + 2)?;
    let d = stats.d;
    let x = (l as f64 - design.sample_size() as f64) / d.sqrt();
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut correction = 1.0;
    for j in 1..=m {
        correction += edgeworth_term(&set, d, j, x)?;
    }
    Ok(phi / d.sqrt() * correction)
}

/// Second-order constants of the central-probability expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Constants {
    /// Unconditional constant `c_1`.
    pub c1: f64,
    /// Conditional constant `c_2` for the forced subset.
    pub c2: f64,
    /// Standardised offset `(B_1 - k) / sqrt(d - B_2)` of the forced subset.
    pub x_tilde: f64,
    /// Conditional variance `d - B_2`.
    pub d_tilde: f64,
}

/// Computes `c_1`, `c_2`, and the conditional centring for forcing `units`.
pub fn lemma1_constants(design: &Design, units: &[usize]) -> Result<Lemma1Constants> {
    let stats = design.stats()?;
    let subset = design.subset_stats(units)?;
    let k = units.len() as f64;
    let skew = 1.0 - 2.0 * stats.p_double_bar;
    let c1 = (1.0 - 6.0 * stats.pq_double_bar) / 8.0 - 5.0 / 24.0 * skew * skew;
    let d_tilde = stats.d - subset.b2;
    if d_tilde <= 0.0 {
        return Err(Error::DTildeNonpositive { value: d_tilde });
    }
    let offset = subset.b1 - k;
    let c2 = 0.5 * (subset.b2 - offset * offset) - 0.5 * offset * skew + c1;
    Ok(Lemma1Constants {
        c1,
        c2,
        x_tilde: offset / d_tilde.sqrt(),
        d_tilde,
    })
}
