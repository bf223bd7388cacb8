//! Probabilists' Hermite polynomials with exact integer coefficients.
//!
//! `He_k` is defined by `He_k(x) = (-1)^k e^{x^2/2} (d/dx)^k e^{-x^2/2}`, so
//! `He_0 = 1`, `He_1 = x`, and the three-term recurrence
//! `He_{k+1}(x) = x He_k(x) - k He_{k-1}(x)` holds.  The derivative form
//! `He_{k+1}(x) = x He_k(x) - He_k'(x)` produces the same table and doubles as
//! an internal consistency check.
//!
//! Coefficients are integers; the table keeps them as checked `i64`, which is
//! ample up to the supported order.  Edgeworth corrections of order `m` need
//! `He` up to degree `3m`, so the default ceiling of 30 covers every
//! expansion this crate can produce, with slack.

use crate::error::{Error, Result};

/// Largest polynomial order a table will tabulate.
pub const MAX_ORDER: usize = 30;

/// Coefficient table for `He_0 ..= He_k_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermiteTable {
    /// `coeffs[k][j]` is the coefficient of `x^j` in `He_k`.
    coeffs: Vec<Vec<i64>>,
}

fn overflow() -> Error {
    Error::OrderTooLarge {
        order: MAX_ORDER + 1,
        limit: MAX_ORDER,
        context: "Hermite coefficient overflow",
    }
}

impl HermiteTable {
    /// Tabulates coefficients up to order `k_max` via the three-term
    /// recurrence.
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max > MAX_ORDER {
            return Err(Error::OrderTooLarge {
                order: k_max,
                limit: MAX_ORDER,
                context: "Hermite table",
            });
        }
        let mut coeffs: Vec<Vec<i64>> = Vec::with_capacity(k_max + 1);
        coeffs.push(vec![1]);
        if k_max >= 1 {
            coeffs.push(vec![0, 1]);
        }
        for k in 1..k_max {
            let mut next = vec![0_i64; k + 2];
            for (j, &c) in coeffs[k].iter().enumerate() {
                next[j + 1] = next[j + 1].checked_add(c).ok_or_else(overflow)?;
            }
            for (j, &c) in coeffs[k - 1].iter().enumerate() {
                let scaled = c.checked_mul(k as i64).ok_or_else(overflow)?;
                next[j] = next[j].checked_sub(scaled).ok_or_else(overflow)?;
            }
            coeffs.push(next);
        }
        Ok(Self { coeffs })
    }

    /// Same table built from `He_{k+1} = x He_k - He_k'`.
    pub fn new_from_derivative_recurrence(k_max: usize) -> Result<Self> {
        if k_max > MAX_ORDER {
            return Err(Error::OrderTooLarge {
                order: k_max,
                limit: MAX_ORDER,
                context: "Hermite table",
            });
        }
        let mut coeffs: Vec<Vec<i64>> = Vec::with_capacity(k_max + 1);
        coeffs.push(vec![1]);
        for k in 0..k_max {
            let mut next = vec![0_i64; k + 2];
            for (j, &c) in coeffs[k].iter().enumerate() {
                next[j + 1] = next[j + 1].checked_add(c).ok_or_else(overflow)?;
                if j >= 1 {
                    let derivative = c.checked_mul(j as i64).ok_or_else(overflow)?;
                    next[j - 1] = next[j - 1].checked_sub(derivative).ok_or_else(overflow)?;
                }
            }
            coeffs.push(next);
        }
        Ok(Self { coeffs })
    }

    /// Largest tabulated order.
    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Integer coefficients of `He_k`, constant term first.
    pub fn coefficients(&self, k: usize) -> Result<&[i64]> {
        self.coeffs.get(k).map(Vec::as_slice).ok_or(Error::OrderTooLarge {
            order: k,
            limit: self.k_max(),
            context: "Hermite evaluation",
        })
    }

    /// Evaluates `He_k(x)` by Horner's rule.
    pub fn eval(&self, k: usize, x: f64) -> Result<f64> {
        let coeffs = self.coefficients(k)?;
        let mut acc = 0.0;
        for &c in coeffs.iter().rev() {
            acc = acc * x + c as f64;
        }
        Ok(acc)
    }

    /// `He_k(0)`, exactly (the constant coefficient).
    pub fn at_zero(&self, k: usize) -> Result<f64> {
        Ok(self.coefficients(k)?[0] as f64)
    }
}
