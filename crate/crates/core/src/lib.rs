//! Small-sample universal hypothesis testing on large finite alphabets.
//!
//! The toolkit covers the regime `n = o(m)`, `m = o(n^2)` in which the
//! natural normalization of error exponents is `n^2/m` rather than `n`:
//!
//! * [`pmf`]: distributions, the worst-case bi-uniform alternatives and the
//!   chi-square functional;
//! * [`statistics`]: occupancy fingerprints, separable statistics and
//!   threshold rules;
//! * [`exponents`]: closed forms for the optimal exponent pair and the
//!   region boundary, plus slope estimation from simulated error rates;
//! * [`oracle`]: exact laws of integer-valued separable statistics by
//!   dynamic programming, and brute-force checks;
//! * [`montecarlo`]: reproducible parallel estimation of error
//!   probabilities and regime sweeps.

pub mod error;
pub mod exponents;
pub mod montecarlo;
pub mod oracle;
pub mod pmf;
pub mod statistics;

pub use error::{Error, Result};
pub use exponents::{
    equalizing_tau, estimate_exponent, jf_star, jm_star, kappa_bar, rate_function, region_curve,
    ExponentPoint,
};
pub use montecarlo::{
    estimate_pf, estimate_pm, sweep, ErrorEstimate, MRule, SimPlan, SweepConfig, SweepRow,
};
pub use pmf::Pmf;
pub use statistics::{
    make_threshold, occupancy, OccupancyFingerprint, SeparableStatistic, ThresholdRule,
};
