//! Compensated summation helpers.
//!
//! Scalar reductions over population units (variance `d`, weighted averages,
//! cumulant totals) all go through [`stable_sum`], which sorts the terms into
//! a canonical order before running a Neumaier accumulation.  Sorting makes
//! the result a function of the term multiset alone, so permuting a design's
//! probability vector reproduces every derived statistic bit for bit.

/// Neumaier (improved Kahan) summation in the order the iterator yields terms.
pub fn neumaier_sum<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated sum over a canonical (sorted) ordering of the terms.
///
/// The ordering uses `f64::total_cmp`, so any permutation of the same multiset
/// of terms returns the identical bit pattern.
pub fn stable_sum<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut buf: Vec<f64> = terms.into_iter().collect();
    buf.sort_by(f64::total_cmp);
    neumaier_sum(buf)
}
