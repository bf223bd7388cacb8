use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the design, oracle, approximation, and sampler layers.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// The probabilities do not add up to the declared sample size.
    #[error("probabilities sum to {sum} but the sample size is {n} (tolerance {tol})")]
    SumMismatch { sum: f64, n: usize, tol: f64 },

    /// A probability lies outside `[0, 1]` (or is not finite).
    #[error("probability p[{index}] = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    /// Deterministic units make a sample of the declared size impossible.
    #[error("infeasible design: {ones} forced inclusions and {zeros} forced exclusions \
             are incompatible with sample size {n} out of {population}")]
    Infeasible {
        ones: usize,
        zeros: usize,
        n: usize,
        population: usize,
    },

    /// All units are deterministic, so the indicator sum has zero variance.
    #[error("degenerate design: every unit has p in {{0, 1}}, so d = 0")]
    DegenerateDesign,

    /// A unit index is out of range or repeated within one subset.
    #[error("bad unit index {index}: out of range or duplicated in the subset")]
    BadIndex { index: usize },

    /// A conditioning probability vanished, so a ratio is undefined.
    #[error("zero denominator: {context}")]
    ZeroDenominator { context: &'static str },

    /// A request exceeds a hard size guard (for example full enumeration).
    #[error("population of {size} exceeds the supported limit {limit} for {context}")]
    TooLarge {
        size: usize,
        limit: usize,
        context: &'static str,
    },

    /// A request falls below a minimum size (for example a pair formula).
    #[error("size {size} is below the minimum {minimum} for {context}")]
    TooSmall {
        size: usize,
        minimum: usize,
        context: &'static str,
    },

    /// A polynomial or expansion order exceeds what is tabulated.
    #[error("order {order} exceeds the supported maximum {limit} for {context}")]
    OrderTooLarge {
        order: usize,
        limit: usize,
        context: &'static str,
    },

    /// An Edgeworth term needs a cumulant that was not computed.
    #[error("cumulant of order {order} is missing (have up to order {have})")]
    MissingCumulant { order: usize, have: usize },

    /// The conditional variance `d - B2` is not positive for this subset.
    #[error("conditional variance d - B2 = {value} is not positive")]
    DTildeNonpositive { value: f64 },

    /// Fixed-point calibration did not reach the tolerance.
    #[error("calibration did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    /// A calibration target cannot be matched by any valid design.
    #[error("infeasible target: pi[{index}] = {value} must lie strictly inside (0, 1)")]
    InfeasibleTarget { index: usize, value: f64 },

    /// Not enough usable points for a log-log slope fit.
    #[error("degenerate fit: {points} usable points, need at least {needed}")]
    DegenerateFit { points: usize, needed: usize },

    /// An enumeration table has no entry for the requested subset.
    #[error("no enumeration entry for subset {units:?}")]
    MissingEntry { units: Vec<usize> },

    /// The rejection sampler gave up before producing a fixed-size sample.
    #[error("rejection sampler exceeded {attempts} attempts")]
    MaxAttemptsExceeded { attempts: u64 },

    /// Stress-construction parameters violate the required strict ordering.
    #[error("parameters must satisfy 0 < gamma < alpha < 1 - delta < 1; \
             got gamma = {gamma}, alpha = {alpha}, delta = {delta}")]
    ParameterOrderViolated { gamma: f64, alpha: f64, delta: f64 },

    /// A conditional probability left `[0, 1]` by more than the guard band.
    #[error("numeric guard: conditional probability {value} outside [-1e-12, 1 + 1e-12]")]
    NumericGuard { value: f64 },

    /// A file or JSON document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// An underlying I/O operation failed.
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}
