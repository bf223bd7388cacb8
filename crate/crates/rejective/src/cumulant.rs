//! Cumulants of Bernoulli sums.
//!
//! The `m`-th cumulant of a single Bernoulli(`p`) indicator is a polynomial
//! `e_m(p)` generated by the recurrence
//!
//! ```text
//! e_1(p) = p,    e_{m+1}(p) = p (1 - p) d/dp e_m(p),
//! ```
//!
//! so `e_2 = p(1-p)`, `e_3 = p(1-p)(1-2p)`, `e_4 = p(1-p)(1-6p+6p^2)`.  For
//! `m >= 2` each `e_m` carries the factor `p(1-p)`; the cofactor `R_m` has
//! degree at most `m - 1`, which is what keeps every cumulant of the
//! indicator total `K` of the same order as its variance `d`.
//!
//! Cumulants are additive over independent units, so the design-level
//! cumulant is `kappa_m = sum_i e_m(p_i)`.  In particular
//! `kappa_3 = d (1 - 2 p_double_bar)` and `kappa_4 = d (1 - 6 pq_double_bar)`.
//!
//! All coefficients are exact integers maintained in checked `i128`.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::sum::stable_sum;

/// Largest single-unit cumulant order the polynomial recurrence will build.
pub const MAX_CUMULANT_ORDER: usize = 24;

/// The polynomial `e_m(p)` giving the `m`-th Bernoulli cumulant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliCumulantPoly {
    order: usize,
    /// Coefficients of `e_m`, constant term first.
    coeffs: Vec<i128>,
    /// Coefficients of the cofactor `R_m` with `e_m = p (1 - p) R_m`,
    /// present for `m >= 2`.
    factored: Option<Vec<i128>>,
}

fn overflow(order: usize) -> Error {
    Error::OrderTooLarge {
        order,
        limit: MAX_CUMULANT_ORDER,
        context: "Bernoulli cumulant coefficients",
    }
}

/// Builds `e_m` by iterating the derivative recurrence from `e_1 = p`.
pub fn bernoulli_cumulant_poly(m: usize) -> Result<BernoulliCumulantPoly> {
    if m == 0 || m > MAX_CUMULANT_ORDER {
        return Err(Error::OrderTooLarge {
            order: m,
            limit: MAX_CUMULANT_ORDER,
            context: "Bernoulli cumulant order",
        });
    }
    let mut coeffs: Vec<i128> = vec![0, 1];
    for step in 1..m {
        // Differentiate, then multiply by p - p^2.
        let mut derivative = vec![0_i128; coeffs.len().max(2) - 1];
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            derivative[j - 1] = c.checked_mul(j as i128).ok_or_else(|| overflow(step + 1))?;
        }
        let mut next = vec![0_i128; derivative.len() + 2];
        for (j, &c) in derivative.iter().enumerate() {
            next[j + 1] = next[j + 1].checked_add(c).ok_or_else(|| overflow(step + 1))?;
            next[j + 2] = next[j + 2].checked_sub(c).ok_or_else(|| overflow(step + 1))?;
        }
        while next.len() > 1 && *next.last().unwrap() == 0 {
            next.pop();
        }
        coeffs = next;
    }
    let factored = if m >= 2 {
        Some(divide_out_p_one_minus_p(&coeffs)?)
    } else {
        None
    };
    Ok(BernoulliCumulantPoly {
        order: m,
        coeffs,
        factored,
    })
}

/// Exact division of a polynomial by `p (1 - p)`; the remainder must vanish.
fn divide_out_p_one_minus_p(coeffs: &[i128]) -> Result<Vec<i128>> {
    assert_eq!(coeffs[0], 0, "cumulant polynomials vanish at p = 0");
    let shifted = &coeffs[1..];
    // Divide by (1 - p): with a_j the input coefficients, the quotient obeys
    // q_j = a_j + q_{j-1} and the remainder is a_D + q_{D-1}.
    let degree = shifted.len() - 1;
    let mut quotient = vec![0_i128; degree.max(1)];
    let mut carry = 0_i128;
    for j in 0..degree {
        carry = shifted[j].checked_add(carry).ok_or_else(|| overflow(0))?;
        quotient[j] = carry;
    }
    let remainder = shifted[degree] + carry;
    assert_eq!(remainder, 0, "cumulant polynomials vanish at p = 1");
    while quotient.len() > 1 && *quotient.last().unwrap() == 0 {
        quotient.pop();
    }
    Ok(quotient)
}

impl BernoulliCumulantPoly {
    /// The cumulant order `m`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients of `e_m`, constant term first.
    pub fn coefficients(&self) -> &[i128] {
        &self.coeffs
    }

    /// Coefficients of `R_m` where `e_m = p (1 - p) R_m`, for `m >= 2`.
    pub fn factored(&self) -> Option<&[i128]> {
        self.factored.as_deref()
    }

    /// Evaluates `e_m(p)` by Horner's rule.
    pub fn eval(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * p + c as f64;
        }
        acc
    }
}

/// Design-level cumulants `kappa_1 ..= kappa_max_order` of the indicator sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    kappa: Vec<f64>,
}

impl CumulantSet {
    /// `kappa_m`; errors if the set was not built up to order `m`.
    pub fn kappa(&self, m: usize) -> Result<f64> {
        if m == 0 || m > self.kappa.len() {
            return Err(Error::MissingCumulant {
                order: m,
                have: self.kappa.len(),
            });
        }
        Ok(self.kappa[m - 1])
    }

    /// Largest order stored.
    pub fn max_order(&self) -> usize {
        self.kappa.len()
    }
}

/// Sums the per-unit cumulant polynomials over the design.
pub fn cumulants(design: &Design, max_order: usize) -> Result<CumulantSet> {
    let mut kappa = Vec::with_capacity(max_order);
    for m in 1..=max_order {
        let poly = bernoulli_cumulant_poly(m)?;
        kappa.push(stable_sum(design.p().iter().map(|&p| poly.eval(p))));
    }
    Ok(CumulantSet { kappa })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_polynomials_match_hand_expansion() {
        assert_eq!(bernoulli_cumulant_poly(1).unwrap().coefficients(), &[0, 1]);
        assert_eq!(
            bernoulli_cumulant_poly(2).unwrap().coefficients(),
            &[0, 1, -1]
        );
        assert_eq!(
            bernoulli_cumulant_poly(3).unwrap().coefficients(),
            &[0, 1, -3, 2]
        );
        assert_eq!(
            bernoulli_cumulant_poly(4).unwrap().coefficients(),
            &[0, 1, -7, 12, -6]
        );
    }

    #[test]
    fn factored_forms_match_and_stay_low_degree() {
        for m in 2..=MAX_CUMULANT_ORDER {
            let poly = bernoulli_cumulant_poly(m).unwrap();
            let r = poly.factored().unwrap();
            assert!(r.len() <= m - 1, "deg R_{m} = {} too high", r.len() - 1);
            // The coefficient of p^k in p (1 - p) R is r_{k-1} - r_{k-2},
            // so the factorization can be checked in exact integers.
            let coeffs = poly.coefficients();
            for (k, &c) in coeffs.iter().enumerate() {
                let from_r = |j: usize| {
                    if j < r.len() {
                        r[j]
                    } else {
                        0
                    }
                };
                let lower = if k >= 1 { from_r(k - 1) } else { 0 };
                let upper = if k >= 2 { from_r(k - 2) } else { 0 };
                assert_eq!(c, lower - upper, "m={m} coefficient of p^{k}");
            }
        }
    }

    #[test]
    fn quartic_cofactor_is_the_expected_quadratic() {
        let poly = bernoulli_cumulant_poly(4).unwrap();
        assert_eq!(poly.factored().unwrap(), &[1, -6, 6]);
    }

    #[test]
    fn symmetric_bernoulli_has_vanishing_odd_cumulants() {
        for m in [3, 5, 7, 9] {
            assert_eq!(bernoulli_cumulant_poly(m).unwrap().eval(0.5), 0.0);
        }
        assert_eq!(bernoulli_cumulant_poly(8).unwrap().eval(0.5), -17.0 / 16.0);
    }

    #[test]
    fn order_guards_reject_zero_and_excess() {
        assert!(bernoulli_cumulant_poly(0).is_err());
        assert!(bernoulli_cumulant_poly(MAX_CUMULANT_ORDER + 1).is_err());
    }

    #[test]
    fn design_cumulants_match_the_closed_forms() {
        let design = Design::new(vec![0.2, 0.4, 0.6, 0.8], 2).unwrap();
        let stats = design.stats().unwrap();
        let set = cumulants(&design, 4).unwrap();
        assert!((set.kappa(1).unwrap() - 2.0).abs() < 1e-12);
        assert!((set.kappa(2).unwrap() - stats.d).abs() < 1e-12);
        let kappa3 = stats.d * (1.0 - 2.0 * stats.p_double_bar);
        let kappa4 = stats.d * (1.0 - 6.0 * stats.pq_double_bar);
        assert!((set.kappa(3).unwrap() - kappa3).abs() < 1e-12);
        assert!((set.kappa(4).unwrap() - kappa4).abs() < 1e-12);
        assert!((set.kappa(4).unwrap() + 0.1984).abs() < 1e-12);
    }

    #[test]
    fn equal_half_design_has_quartic_cumulant_minus_half() {
        let design = Design::new(vec![0.5; 4], 2).unwrap();
        let set = cumulants(&design, 4).unwrap();
        assert!((set.kappa(4).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn missing_orders_are_reported() {
        let design = Design::new(vec![0.5; 4], 2).unwrap();
        let set = cumulants(&design, 4).unwrap();
        assert!(matches!(
            set.kappa(5),
            Err(Error::MissingCumulant { order: 5, have: 4 })
        ));
    }

    #[test]
    fn cumulant_to_variance_ratio_is_size_free_for_equal_designs() {
        // kappa_m / d = e_m(1/2) / e_2(1/2) does not depend on N.
        let mut ratios: Vec<Vec<f64>> = Vec::new();
        for exponent in [4_u32, 7, 10] {
            let npop = 2_usize.pow(exponent);
            let design = Design::new(vec![0.5; npop], npop / 2).unwrap();
            let d = design.stats().unwrap().d;
            let set = cumulants(&design, 8).unwrap();
            ratios.push((1..=8).map(|m| set.kappa(m).unwrap() / d).collect());
        }
        for m in 0..8 {
            assert!((ratios[0][m] - ratios[1][m]).abs() < 1e-12);
            assert!((ratios[0][m] - ratios[2][m]).abs() < 1e-12);
            assert!(ratios[0][m].abs() <= 5.0);
        }
    }
}
