//! Closed-form approximations of joint inclusion probabilities.
//!
//! For a subset `A` of `k >= 2` units, both supported correction forms start
//! from the product of the exact first-order probabilities and subtract a
//! pairwise term of size `d^{-1}`:
//!
//! ```text
//! pi_A ~= (prod over i in A of pi_i) * (1 - d^{-1} * sum over i<j in A of w_i w_j)
//! ```
//!
//! with `w_i = 1 - p_i` for [`Formula::Theorem1P`] and `w_i = 1 - pi_i` for
//! [`Formula::Theorem1Pi`]. The second form restricted to `k = 2` is the
//! classical pair approximation [`hajek_second_order`], tagged `hajek2`.
//!
//! The remaining pieces are the first-order relation between the independent
//! draw probabilities `p_i` and the fixed-size probabilities `pi_i`, a
//! fixed-point calibration that inverts it exactly, and the error-scaling
//! study that measures how fast the corrections earn their `d^{-2}` remainder.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::exact::DesignOracle;
use crate::family::DesignFamily;
use crate::study::{ScalingStudy, StudyPoint, TupleSet};
use crate::sum::stable_sum;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Which correction formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    /// Pair weights from the independent-draw probabilities `1 - p_i`.
    Theorem1P,
    /// Pair weights from the inclusion probabilities `1 - pi_i`.
    Theorem1Pi,
    /// The `k = 2` special case of the `pi` form.
    Hajek2,
}

impl Formula {
    /// Stable token used on the command line and in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Formula::Theorem1P => "theorem1-p",
            Formula::Theorem1Pi => "theorem1-pi",
            Formula::Hajek2 => "hajek2",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Formula> {
        match s {
            "theorem1-p" => Ok(Formula::Theorem1P),
            "theorem1-pi" => Ok(Formula::Theorem1Pi),
            "hajek2" => Ok(Formula::Hajek2),
            other => Err(Error::Parse(format!(
                "unknown formula \"{other}\" (expected theorem1-p, theorem1-pi, or hajek2)"
            ))),
        }
    }
}

/// An approximate joint inclusion probability next to its exact value.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    /// The queried units, sorted ascending.
    pub units: Vec<usize>,
    /// Value of the chosen approximation formula.
    pub approx_value: f64,
    /// Exact joint probability, when the oracle was consulted.
    pub exact_value: Option<f64>,
    /// `|approx_value - exact_value|`.
    pub abs_error: Option<f64>,
    /// Absolute error relative to `|exact_value|`; absent when the exact
    /// value is zero.
    pub rel_error: Option<f64>,
    /// The variance `d` entering the correction.
    pub d: f64,
    /// Which formula produced `approx_value`.
    pub formula: Formula,
}

/// Pair approximation `pi_i pi_j (1 - d^{-1} (1 - pi_i)(1 - pi_j))`.
pub fn hajek_second_order(pi_i: f64, pi_j: f64, d: f64) -> f64 {
    (pi_i * pi_j) * (1.0 - (1.0 - pi_i) * (1.0 - pi_j) / d)
}

/// Joint approximation from first-order probabilities alone.
///
/// `pi` holds one inclusion probability per population unit and `units`
/// selects the subset; for two units this is exactly [`hajek_second_order`].
pub fn theorem1_pi(pi: &[f64], d: f64, units: &[usize]) -> Result<f64> {
    if units.len() < 2 {
        return Err(Error::TooSmall {
            size: units.len(),
            minimum: 2,
            context: "joint-probability correction",
        });
    }
    if d <= 0.0 {
        return Err(Error::ZeroDenominator {
            context: "variance d in the pair correction",
        });
    }
    let mut seen = units.to_vec();
    seen.sort_unstable();
    for (pos, &u) in seen.iter().enumerate() {
        if u >= pi.len() || (pos > 0 && seen[pos - 1] == u) {
            return Err(Error::BadIndex { index: u });
        }
        let value = pi[u];
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { index: u, value });
        }
    }
    let values: Vec<f64> = units.iter().map(|&u| pi[u]).collect();
    Ok(corrected_product(&values, &values, d))
}

fn corrected_product(leading: &[f64], weights_from: &[f64], d: f64) -> f64 {
    let mut product = 1.0;
    for &v in leading {
        product *= v;
    }
    let mut pair_sum = 0.0;
    for a in 0..weights_from.len() {
        for b in a + 1..weights_from.len() {
            pair_sum += (1.0 - weights_from[a]) * (1.0 - weights_from[b]);
        }
    }
    product * (1.0 - pair_sum / d)
}

/// Evaluates `formula` on `units` and reports it next to the exact value.
///
/// The leading product always uses the oracle's exact first-order
/// probabilities; the formulas differ only in the pairwise correction.
pub fn approx_inclusion(
    oracle: &DesignOracle,
    units: &[usize],
    formula: Formula,
) -> Result<ApproxReport> {
    let sorted = oracle.design().check_subset(units)?;
    let k = sorted.len();
    if k < 2 {
        return Err(Error::TooSmall {
            size: k,
            minimum: 2,
            context: "joint-probability correction",
        });
    }
    if formula == Formula::Hajek2 && k > 2 {
        return Err(Error::TooLarge {
            size: k,
            limit: 2,
            context: "the hajek2 pair formula",
        });
    }
    let d = oracle.design().stats()?.d;
    let pi: Vec<f64> = sorted.iter().map(|&u| oracle.first_order()[u]).collect();
    let approx_value = match formula {
        Formula::Hajek2 => hajek_second_order(pi[0], pi[1], d),
        Formula::Theorem1Pi => corrected_product(&pi, &pi, d),
        Formula::Theorem1P => {
            let p: Vec<f64> = sorted.iter().map(|&u| oracle.design().p()[u]).collect();
            corrected_product(&pi, &p, d)
        }
    };
    let exact = oracle.inclusion(&sorted)?.value;
    let abs_error = (approx_value - exact).abs();
    Ok(ApproxReport {
        units: sorted,
        approx_value,
        exact_value: Some(exact),
        abs_error: Some(abs_error),
        rel_error: (exact != 0.0).then(|| abs_error / exact.abs()),
        d,
        formula,
    })
}

/// The `p`-weighted correction form with full error reporting.
pub fn theorem1_p(oracle: &DesignOracle, units: &[usize]) -> Result<ApproxReport> {
    approx_inclusion(oracle, units, Formula::Theorem1P)
}

/// First-order relation `pi_i ~= p_i (1 + d^{-1} (p_i - p_bar)(1 - p_i))`,
/// where `p_bar` is the `p_i(1-p_i)`-weighted mean of the probabilities.
///
/// The outputs are not renormalised; their sum drifts from `n` by the size of
/// the neglected `d^{-2}` terms.
pub fn first_order_relation(design: &Design) -> Result<Vec<f64>> {
    let stats = design.stats()?;
    Ok(design
        .p()
        .iter()
        .map(|&p| p * (1.0 + (p - stats.p_double_bar) * (1.0 - p) / stats.d))
        .collect())
}

/// Finds a design whose exact first-order probabilities match `target_pi`.
///
/// Fixed-point iteration on the exact oracle: each round multiplies the
/// current `p` by `target / pi(p)` and rescales the result to sum to `n`.
pub fn calibrate_design(
    target_pi: &[f64],
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Design> {
    for (index, &value) in target_pi.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 || value >= 1.0 {
            return Err(Error::InfeasibleTarget { index, value });
        }
    }
    let total = stable_sum(target_pi.iter().copied());
    if (total - n as f64).abs() > 1e-6 {
        return Err(Error::SumMismatch {
            sum: total,
            n,
            tol: 1e-6,
        });
    }
    let mut p = target_pi.to_vec();
    rescale_to_sum(&mut p, n)?;
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iter {
        let design = Design::new(p.clone(), n)?;
        let oracle = DesignOracle::new(design)?;
        residual = oracle
            .first_order()
            .iter()
            .zip(target_pi)
            .map(|(pi, target)| (pi - target).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok(oracle.design().clone());
        }
        if iteration == max_iter {
            break;
        }
        for (value, (&pi, &target)) in p
            .iter_mut()
            .zip(oracle.first_order().iter().zip(target_pi))
        {
            if pi <= 0.0 {
                return Err(Error::ZeroDenominator {
                    context: "a first-order probability vanished during calibration",
                });
            }
            *value *= target / pi;
        }
        rescale_to_sum(&mut p, n)?;
    }
    Err(Error::NoConvergence {
        residual,
        iterations: max_iter,
    })
}

/// Rescales `p` multiplicatively so it sums to `n`, capping entries just
/// below one and redistributing the excess onto the uncapped entries.
fn rescale_to_sum(p: &mut [f64], n: usize) -> Result<()> {
    const CAP: f64 = 1.0 - 1e-9;
    for _ in 0..200 {
        let total = stable_sum(p.iter().copied());
        if (total - n as f64).abs() <= 1e-12 * (n as f64).max(1.0) {
            return Ok(());
        }
        let capped = stable_sum(p.iter().copied().filter(|&v| v >= CAP));
        let free = total - capped;
        let want = n as f64 - capped;
        if free <= 0.0 || want <= 0.0 {
            return Err(Error::ZeroDenominator {
                context: "no adjustable probability mass left while rescaling",
            });
        }
        let scale = want / free;
        for value in p.iter_mut() {
            if *value < CAP {
                *value = (*value * scale).min(CAP);
            }
        }
    }
    Ok(())
}

/// Fits the decay of the worst-case approximation error across a family.
///
/// Pairs (`order == 2`) are scanned exhaustively; larger orders use a seeded
/// tuple selection of at most `tuple_budget` subsets plus the extreme tuples.
pub fn error_scaling_study(
    family: &DesignFamily,
    order: usize,
    formula: Formula,
    tuple_budget: usize,
    seed: u64,
) -> Result<ScalingStudy> {
    if order < 2 {
        return Err(Error::TooSmall {
            size: order,
            minimum: 2,
            context: "approximation order",
        });
    }
    if order > 4 {
        return Err(Error::OrderTooLarge {
            order,
            limit: 4,
            context: "approximation study",
        });
    }
    if formula == Formula::Hajek2 && order != 2 {
        return Err(Error::TooLarge {
            size: order,
            limit: 2,
            context: "the hajek2 pair formula",
        });
    }
    let mut points = Vec::new();
    for design in family.designs()? {
        let population = design.population();
        let d = design.stats()?.d;
        let oracle = DesignOracle::new(design)?;
        let max_abs_error = if order == 2 {
            let pi = oracle.first_order();
            let p = oracle.design().p();
            oracle.pair_scan_max(|i, j, pi_ij| {
                let approx = match formula {
                    Formula::Theorem1P => {
                        (pi[i] * pi[j]) * (1.0 - (1.0 - p[i]) * (1.0 - p[j]) / d)
                    }
                    Formula::Theorem1Pi | Formula::Hajek2 => {
                        hajek_second_order(pi[i], pi[j], d)
                    }
                };
                (approx - pi_ij).abs()
            })
        } else {
            let tuples = TupleSet::generate(oracle.design(), order, tuple_budget, seed)?;
            tuples
                .tuples()
                .par_iter()
                .map(|tuple| {
                    let report = approx_inclusion(&oracle, tuple, formula)?;
                    Ok(report.abs_error.expect("exact value always computed"))
                })
                .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?
        };
        points.push(StudyPoint {
            population,
            d,
            max_abs_error,
        });
    }
    ScalingStudy::fit(
        format!("{} formula={formula} k={order}", family.describe()),
        points,
    )
}
