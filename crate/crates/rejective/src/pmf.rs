//! Poisson-binomial distributions of indicator sums.
//!
//! The distribution of `K = I_1 + ... + I_N` for independent Bernoulli
//! indicators is built by iterated convolution: starting from the point mass
//! at zero, each unit updates the count vector with
//! `v'[j] = (1 - p) v[j] + p v[j-1]`.  Deterministic units (`p` equal to 0 or
//! 1) never enter the convolution; forced inclusions are tracked as an integer
//! shift of the support instead, which keeps the convolved vector as short as
//! possible and the shifted entries exactly zero.
//!
//! Conditioning arguments evaluate many "leave a subset out" distributions at
//! a single count.  Two supports for that live here:
//!
//! * a `cap` on the carried vector length.  Counts can only grow, so entries
//!   at or below the cap are exact even when larger counts are dropped;
//! * [`SplitTables`], prefix and suffix distributions of the unit order, which
//!   reduce a leave-one-out evaluation to a short dot product and seed
//!   leave-subset-out sweeps without restarting from unit zero.
//!
//! Leave-out values are always produced by freshly convolving the retained
//! units.  Dividing a Bernoulli factor back out of the full distribution would
//! be cheaper but amplifies rounding badly, so it is never done here.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::sum::neumaier_sum;

/// A count distribution stored as a support shift plus a probability vector.
///
/// `P(X = shift + j) = probs[j]`; entries beyond the vector are either exactly
/// zero or were truncated away by the build cap (and are never read back).
#[derive(Debug, Clone)]
pub(crate) struct CountDist {
    pub(crate) shift: usize,
    pub(crate) probs: Vec<f64>,
}

impl CountDist {
    pub(crate) fn point_mass() -> Self {
        Self {
            shift: 0,
            probs: vec![1.0],
        }
    }

    /// Probability at the absolute count `t` (zero off the stored support).
    pub(crate) fn at(&self, t: usize) -> f64 {
        if t < self.shift {
            return 0.0;
        }
        self.probs.get(t - self.shift).copied().unwrap_or(0.0)
    }

    /// Folds one Bernoulli unit into the distribution, keeping at most
    /// `cap + 1` stored entries (absolute counts above `shift + cap` are
    /// dropped; lower entries stay exact).
    pub(crate) fn push(&mut self, p: f64, cap: usize) {
        if p == 1.0 {
            self.shift += 1;
            return;
        }
        if p == 0.0 {
            return;
        }
        let q = 1.0 - p;
        let stored_cap = cap.saturating_sub(self.shift);
        if self.probs.len() <= stored_cap {
            self.probs.push(0.0);
        }
        for j in (0..self.probs.len()).rev() {
            let below = if j > 0 { self.probs[j - 1] } else { 0.0 };
            self.probs[j] = q * self.probs[j] + p * below;
        }
    }

    /// `P(X + Y = t)` for independent summands with distributions `self`, `rhs`.
    pub(crate) fn convolved_at(&self, rhs: &CountDist, t: usize) -> f64 {
        if t < self.shift + rhs.shift {
            return 0.0;
        }
        let r = t - self.shift - rhs.shift;
        let lo = (r + 1).saturating_sub(rhs.probs.len());
        let hi = r.min(self.probs.len() - 1);
        let mut acc = 0.0;
        for x in lo..=hi {
            acc += self.probs[x] * rhs.probs[r - x];
        }
        if lo > hi {
            0.0
        } else {
            acc
        }
    }
}

/// Builds the count distribution of the given Bernoulli probabilities,
/// keeping entries up to absolute count `cap` exact.
pub(crate) fn count_distribution<I>(probs: I, cap: usize) -> CountDist
where
    I: IntoIterator<Item = f64>,
{
    let mut dist = CountDist::point_mass();
    for p in probs {
        dist.push(p, cap);
    }
    dist
}

/// The distribution of a sum of independent Bernoulli indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBinomialPmf {
    probs: Vec<f64>,
}

impl PoissonBinomialPmf {
    /// Distribution of the number of successes among arbitrary Bernoulli
    /// probabilities (no fixed-size constraint involved).
    pub fn from_probs(p: &[f64]) -> Result<Self> {
        for (index, &value) in p.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { index, value });
            }
        }
        let dist = count_distribution(p.iter().copied(), p.len());
        let mut probs = vec![0.0; p.len() + 1];
        for (j, &v) in dist.probs.iter().enumerate() {
            probs[dist.shift + j] = v;
        }
        Ok(Self { probs })
    }

    /// Full support probabilities: entry `l` is `P(K = l)`, `0 <= l <= N`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(K = l)`, zero outside the support.
    pub fn at(&self, l: usize) -> f64 {
        self.probs.get(l).copied().unwrap_or(0.0)
    }

    /// Mean of the count.
    pub fn mean(&self) -> f64 {
        neumaier_sum(self.probs.iter().enumerate().map(|(l, &p)| l as f64 * p))
    }

    /// Variance of the count.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        neumaier_sum(
            self.probs
                .iter()
                .enumerate()
                .map(|(l, &p)| (l as f64 - m) * (l as f64 - m) * p),
        )
    }

    /// Total probability mass (should be 1 up to accumulated rounding).
    pub fn total(&self) -> f64 {
        neumaier_sum(self.probs.iter().copied())
    }
}

/// Distribution of `K` for the whole design.
pub fn pmf(design: &Design) -> PoissonBinomialPmf {
    PoissonBinomialPmf::from_probs(design.p()).expect("design probabilities already validated")
}

/// Distribution of the indicator sum over all units outside `units`.
pub fn pmf_excluding(design: &Design, units: &[usize]) -> Result<PoissonBinomialPmf> {
    let sorted = design.check_subset(units)?;
    let mut kept: Vec<f64> = Vec::with_capacity(design.population() - sorted.len());
    let mut next = sorted.iter().copied().peekable();
    for (i, &p) in design.p().iter().enumerate() {
        if next.peek() == Some(&i) {
            next.next();
        } else {
            kept.push(p);
        }
    }
    PoissonBinomialPmf::from_probs(&kept)
}

/// Prefix and suffix count distributions over the unit order of a design.
///
/// `prefix[i]` is the distribution of `I_0 + ... + I_{i-1}` and `suffix[i]`
/// the distribution of `I_i + ... + I_{N-1}`, both exact up to count `cap`.
/// The sum over all units except `i` then evaluates at a count `t` as the
/// convolution of `prefix[i]` and `suffix[i + 1]` at `t`.
#[derive(Debug)]
pub(crate) struct SplitTables {
    pub(crate) cap: usize,
    pub(crate) prefix: Vec<CountDist>,
    pub(crate) suffix: Vec<CountDist>,
}

impl SplitTables {
    pub(crate) fn new(p: &[f64], cap: usize) -> Self {
        let mut prefix = Vec::with_capacity(p.len() + 1);
        let mut cur = CountDist::point_mass();
        prefix.push(cur.clone());
        for &pi in p {
            cur.push(pi, cap);
            prefix.push(cur.clone());
        }
        let mut suffix = vec![CountDist::point_mass(); p.len() + 1];
        let mut cur = CountDist::point_mass();
        for i in (0..p.len()).rev() {
            cur.push(p[i], cap);
            suffix[i] = cur.clone();
        }
        Self { cap, prefix, suffix }
    }

    /// `P(sum of all units except i equals t)`; requires `t <= cap`.
    pub(crate) fn leave_one_out_at(&self, i: usize, t: usize) -> f64 {
        debug_assert!(t <= self.cap);
        self.prefix[i].convolved_at(&self.suffix[i + 1], t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn staircase() -> Design {
        Design::new(vec![0.2, 0.4, 0.6, 0.8], 2).unwrap()
    }

    #[test]
    fn staircase_count_probability_matches_enumeration() {
        // Sum over the six pairs of p_i p_j prod_{k not in pair} (1 - p_k):
        // 0.0064 + 0.0144 + 0.0384 + 0.0384 + 0.1024 + 0.2304 = 0.4304.
        let pmf = pmf(&staircase());
        assert!((pmf.at(2) - 0.4304).abs() < 1e-15);
    }

    #[test]
    fn binomial_case_is_exact() {
        let d = Design::new(vec![0.5; 4], 2).unwrap();
        let pmf = pmf(&d);
        // All arithmetic on p = 1/2 is dyadic, so these are exact.
        assert_eq!(pmf.probs(), &[0.0625, 0.25, 0.375, 0.25, 0.0625]);
    }

    #[test]
    fn forced_unit_shifts_the_support() {
        let pmf = PoissonBinomialPmf::from_probs(&[1.0, 0.5]).unwrap();
        assert_eq!(pmf.probs(), &[0.0, 0.5, 0.5]);
        let d = Design::new(vec![1.0, 0.5, 0.5], 2).unwrap();
        assert_eq!(super::pmf(&d).probs(), &[0.0, 0.25, 0.5, 0.25]);
    }

    #[test]
    fn mass_mean_and_variance_match_design() {
        let d = staircase();
        let stats = d.stats().unwrap();
        let pmf = pmf(&d);
        assert!((pmf.total() - 1.0).abs() < 1e-12);
        assert!((pmf.mean() - 2.0).abs() < 1e-9);
        assert!((pmf.variance() - stats.d).abs() < 1e-9);
    }

    #[test]
    fn excluding_one_unit_matches_hand_computation() {
        // Without unit 0: P(exactly one of 0.4, 0.6, 0.8 fires)
        //   = 0.4*0.4*0.2 + 0.6*0.6*0.2 + 0.8*0.6*0.4 = 0.296.
        let pmf = pmf_excluding(&staircase(), &[0]).unwrap();
        assert_eq!(pmf.probs().len(), 4);
        assert!((pmf.at(1) - 0.296).abs() < 1e-15);
    }

    #[test]
    fn excluding_every_unit_leaves_a_point_mass_at_zero() {
        let pmf = pmf_excluding(&staircase(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(pmf.probs(), &[1.0]);
    }

    #[test]
    fn excluding_rejects_bad_subsets() {
        assert!(pmf_excluding(&staircase(), &[2, 2]).is_err());
        assert!(pmf_excluding(&staircase(), &[9]).is_err());
    }

    #[test]
    fn capped_build_matches_full_build_below_the_cap() {
        let p = [0.3, 0.7, 0.45, 0.9, 0.12, 0.5];
        let full = count_distribution(p.iter().copied(), p.len());
        let capped = count_distribution(p.iter().copied(), 3);
        for t in 0..=3 {
            assert_eq!(full.at(t).to_bits(), capped.at(t).to_bits());
        }
    }

    #[test]
    fn split_tables_agree_with_direct_leave_one_out() {
        let p = [0.2, 0.4, 0.6, 0.8, 0.35];
        let tables = SplitTables::new(&p, p.len());
        for i in 0..p.len() {
            let direct: Vec<f64> = p
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            let dist = count_distribution(direct.iter().copied(), direct.len());
            for t in 0..p.len() {
                let a = tables.leave_one_out_at(i, t);
                let b = dist.at(t);
                assert!((a - b).abs() < 1e-15, "i={i} t={t}: {a} vs {b}");
            }
        }
    }
}
