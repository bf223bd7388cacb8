//! Fixed-size sampling designs with unequal probabilities, implemented around
//! the conditional Poisson (also called rejective, or maximum entropy) scheme:
//! independent Bernoulli draws conditioned on the total number of successes.
//!
//! The crate is organised in layers:
//!
//! * [`design`]: validated probability vectors with a fixed sample size and
//!   their summary statistics.
//! * [`pmf`]: Poisson-binomial distributions of indicator sums, including
//!   leave-out evaluations used everywhere else.
//! * [`exact`]: exact joint inclusion probabilities, indicator-pattern
//!   probabilities, and brute-force enumeration for small populations.
//! * [`hermite`], [`cumulant`], [`edgeworth`]: probabilists' Hermite
//!   polynomials, Bernoulli-sum cumulants, and Edgeworth density corrections
//!   for the indicator sum.
//! * [`approx`]: closed-form approximations of joint inclusion probabilities
//!   with error reports, plus design calibration.
//! * [`study`], [`family`]: log-log error-scaling studies over families of
//!   growing designs.
//! * [`correlation`]: central moments of inclusion indicators, decompositions
//!   into joint-probability differences, asymptotic-condition diagnostics, and
//!   a two-block stress construction.
//! * [`sampler`]: Poisson, rejection, and sequential conditional samplers
//!   with Monte Carlo estimators.
//!
//! Unit indices are `0`-based throughout the API; command-line front ends are
//! expected to translate from 1-based user input.

pub mod approx;
pub mod correlation;
pub mod cumulant;
pub mod design;
pub mod edgeworth;
mod error;
pub mod exact;
pub mod family;
pub mod hermite;
pub mod pmf;
pub mod sampler;
pub mod study;
pub mod sum;
pub mod testkit;

pub use approx::{ApproxReport, Formula};
pub use correlation::{ArratiaExample, CentralMomentQuery, ConditionReport};
pub use design::{Design, DesignStats, SubsetStats};
pub use error::{Error, Result};
pub use exact::{DesignOracle, InclusionResult, Method, RejectiveEnumeration};
pub use family::DesignFamily;
pub use pmf::PoissonBinomialPmf;
pub use sampler::{McEstimate, Sample, SampleMethod};
pub use study::ScalingStudy;
