//! Occupancy fingerprints and the separable statistics built from them.
//!
//! A separable statistic has the form `S = shift + sum_j f_j(c_j)` where
//! `c_j` is the number of times symbol `j` occurs in the sample. When every
//! `f_j` is the same function the statistic only depends on the occupancy
//! fingerprint `Phi_l = #{j : c_j = l}`.
//!
//! | kind                  | `f(l)` (l = 0, 1, 2, >=3)             | shift     |
//! |-----------------------|---------------------------------------|-----------|
//! | coincidence           | 0, -1, 0, 0                           | 0         |
//! | Pearson               | `l^2`                                 | `-n^2/m`  |
//! | truncated Pearson     | 0, 1, 4, 0                            | `-n^2/m`  |
//! | extended coincidence  | 0, -1, `v_2`, `v_l` up to `l_max`     | 0         |
//! | weighted coincidence  | `n^2 p_j^2 / 2`, `-n p_j`, 1, 0       | 0         |

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::kappa_bar;
use crate::pmf::Pmf;

/// Counts `Phi_l` of symbols that occur exactly `l` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct OccupancyFingerprint {
    n: u64,
    m: usize,
    /// `phi[l]`, trimmed so that the last entry is non-zero.
    phi: Vec<u64>,
}

impl OccupancyFingerprint {
    /// Builds a fingerprint from per-level counts `phi[l]`.
    pub fn from_levels(mut phi: Vec<u64>) -> Result<Self> {
        while phi.len() > 1 && phi.last() == Some(&0) {
            phi.pop();
        }
        let m: u64 = phi.iter().sum();
        if m == 0 {
            return Err(Error::InvalidAlphabet(0));
        }
        let n = phi.iter().enumerate().map(|(l, &c)| l as u64 * c).sum();
        Ok(Self {
            n,
            m: m as usize,
            phi,
        })
    }

    /// Sample size `sum_l l Phi_l`.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Alphabet size `sum_l Phi_l`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `Phi_l`, zero beyond the largest occupied level.
    pub fn phi(&self, l: usize) -> u64 {
        self.phi.get(l).copied().unwrap_or(0)
    }

    pub fn levels(&self) -> &[u64] {
        &self.phi
    }

    pub fn max_level(&self) -> usize {
        self.phi.len() - 1
    }
}

/// Aggregates per-symbol counts into an occupancy fingerprint.
pub fn occupancy(counts: &[u64]) -> Result<OccupancyFingerprint> {
    if counts.is_empty() {
        return Err(Error::InvalidAlphabet(0));
    }
    let max = *counts.iter().max().unwrap() as usize;
    let mut phi = vec![0u64; max + 1];
    for &c in counts {
        phi[c as usize] += 1;
    }
    OccupancyFingerprint::from_levels(phi)
}

/// The separable statistics supported by the toolkit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparableStatistic {
    /// `-Phi_1`.
    Coincidence,
    /// `sum_j (c_j - n/m)^2 = sum_l l^2 Phi_l - n^2/m`, uniform reference.
    Pearson,
    /// Pearson with the levels `l >= 3` removed: `-n^2/m + Phi_1 + 4 Phi_2`.
    PearsonTruncated,
    /// `-Phi_1 + sum_{l=2}^{l_max} v_l Phi_l`; `weights[i]` is `v_{i+2}`.
    ExtendedCoincidence { weights: Vec<f64> },
    /// Coincidence statistic re-weighted for a non-uniform reference `p`.
    WeightedCoincidence { reference: Pmf },
}

impl SeparableStatistic {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Coincidence => "coincidence",
            Self::Pearson => "pearson",
            Self::PearsonTruncated => "pearson_truncated",
            Self::ExtendedCoincidence { .. } => "extended_coincidence",
            Self::WeightedCoincidence { .. } => "weighted_coincidence",
        }
    }

    /// Whether the same `f` applies to every symbol.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::WeightedCoincidence { reference } => reference.is_uniform(),
            _ => true,
        }
    }

    /// Whether the extended-coincidence weights satisfy `v_2 = 0` and
    /// `v_l >= 0` for `l >= 3`, the conditions under which the test keeps the
    /// optimal exponents. Other kinds report `true`.
    pub fn weights_valid(&self) -> bool {
        match self {
            Self::ExtendedCoincidence { weights } => {
                weights.first().is_none_or(|&v2| v2 == 0.0)
                    && weights.iter().skip(1).all(|&v| v >= 0.0)
            }
            _ => true,
        }
    }

    /// Largest level with a non-zero `f`, or `None` when `f` is unbounded in
    /// the level (Pearson).
    pub fn max_level(&self) -> Option<usize> {
        match self {
            Self::Coincidence => Some(1),
            Self::Pearson => None,
            Self::PearsonTruncated | Self::WeightedCoincidence { .. } => Some(2),
            Self::ExtendedCoincidence { weights } => Some(1 + weights.len()),
        }
    }

    /// `f_j(level)` for a sample of size `n`, without the
    /// constant shift.
    pub fn symbol_value(&self, symbol: usize, level: u64, n: u64) -> f64 {
        match (self, level) {
            (Self::Coincidence, 1) => -1.0,
            (Self::Coincidence, _) => 0.0,
            (Self::Pearson, l) => (l * l) as f64,
            (Self::PearsonTruncated, 1) => 1.0,
            (Self::PearsonTruncated, 2) => 4.0,
            (Self::PearsonTruncated, _) => 0.0,
            (Self::ExtendedCoincidence { .. }, 0) => 0.0,
            (Self::ExtendedCoincidence { .. }, 1) => -1.0,
            (Self::ExtendedCoincidence { weights }, l) => {
                weights.get(l as usize - 2).copied().unwrap_or(0.0)
            }
            (Self::WeightedCoincidence { reference }, l) => {
                let np = n as f64 * reference[symbol];
                match l {
                    0 => 0.5 * np * np,
                    1 => -np,
                    2 => 1.0,
                    _ => 0.0,
                }
            }
        }
    }

    /// Constant added to `sum_j f_j(c_j)`.
    pub fn shift(&self, n: u64, m: usize) -> f64 {
        match self {
            Self::Pearson | Self::PearsonTruncated => -((n * n) as f64) / m as f64,
            _ => 0.0,
        }
    }

    /// Evaluates the statistic from an occupancy fingerprint.
    ///
    /// The weighted coincidence statistic with a non-uniform reference
    /// depends on which symbols carry which counts; use
    /// [`evaluate_counts`](Self::evaluate_counts) for it.
    pub fn evaluate(&self, fp: &OccupancyFingerprint) -> Result<f64> {
        let n = fp.n() as f64;
        let m = fp.m() as f64;
        let phi = |l| fp.phi(l) as f64;
        Ok(match self {
            Self::Coincidence => -phi(1),
            Self::Pearson => {
                let squares: f64 = fp
                    .levels()
                    .iter()
                    .enumerate()
                    .map(|(l, &c)| (l * l) as f64 * c as f64)
                    .sum();
                squares - n * n / m
            }
            Self::PearsonTruncated => -n * n / m + phi(1) + 4.0 * phi(2),
            Self::ExtendedCoincidence { weights } => {
                -phi(1)
                    + weights
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| v * phi(i + 2))
                        .sum::<f64>()
            }
            Self::WeightedCoincidence { reference } => {
                if reference.len() != fp.m() {
                    return Err(Error::Dimension {
                        left: reference.len(),
                        right: fp.m(),
                    });
                }
                if !reference.is_uniform() {
                    return Err(Error::NeedsCounts(
                        "weighted coincidence with a non-uniform reference".into(),
                    ));
                }
                phi(0) * n * n / (2.0 * m * m) - phi(1) * n / m + phi(2)
            }
        })
    }

    /// Evaluates the statistic directly from per-symbol counts.
    pub fn evaluate_counts(&self, counts: &[u64]) -> Result<f64> {
        let m = counts.len();
        if let Self::WeightedCoincidence { reference } = self {
            if reference.len() != m {
                return Err(Error::Dimension {
                    left: reference.len(),
                    right: m,
                });
            }
        }
        if m == 0 {
            return Err(Error::InvalidAlphabet(0));
        }
        let n: u64 = counts.iter().sum();
        let body: f64 = counts
            .iter()
            .enumerate()
            .map(|(j, &c)| self.symbol_value(j, c, n))
            .sum();
        Ok(body + self.shift(n, m))
    }
}

/// Pearson's statistic against a general reference `p`:
/// `sum_j (c_j - n p_j)^2 (n/m) / (n p_j)` over the support of `p`.
///
/// For uniform `p` this is `sum_j (c_j - n/m)^2`.
pub fn pearson_direct(counts: &[u64], p: &Pmf) -> Result<f64> {
    if counts.len() != p.len() {
        return Err(Error::Dimension {
            left: counts.len(),
            right: p.len(),
        });
    }
    let n = counts.iter().sum::<u64>() as f64;
    if n == 0.0 {
        return Ok(0.0);
    }
    let m = p.len() as f64;
    let mut total = 0.0;
    for (j, (&c, &pj)) in counts.iter().zip(p.probs()).enumerate() {
        if pj == 0.0 {
            if c > 0 {
                return Err(Error::AbsoluteContinuity {
                    symbol: j,
                    mass: c as f64 / n,
                });
            }
            continue;
        }
        let expected = n * pj;
        let d = c as f64 - expected;
        total += d * d * (n / m) / expected;
    }
    Ok(total)
}

/// Binomial(n, p) probabilities for `k = 0..=k_max`, via the ratio
/// recurrence in log space.
pub(crate) fn binomial_pmf_row(n: u64, p: f64, k_max: u64) -> Vec<f64> {
    let k_max = k_max.min(n);
    let mut row = vec![0.0; k_max as usize + 1];
    if p <= 0.0 {
        row[0] = 1.0;
        return row;
    }
    if p >= 1.0 {
        if k_max == n {
            row[n as usize] = 1.0;
        }
        return row;
    }
    let ln_q = (-p).ln_1p();
    let ln_odds = p.ln() - ln_q;
    let mut ln_pk = n as f64 * ln_q;
    for k in 0..=k_max {
        row[k as usize] = ln_pk.exp();
        ln_pk += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + ln_odds;
    }
    row
}

/// Exact `E[S]` for `n` i.i.d. draws from the uniform distribution on `m`
/// symbols, using linearity over the Binomial(n, 1/m) marginals.
pub fn uniform_expectation(stat: &SeparableStatistic, n: u64, m: usize) -> f64 {
    if let SeparableStatistic::Coincidence = stat {
        return coincidence_mean_uniform(n, m);
    }
    let k_max = stat.max_level().map_or(n, |l| (l as u64).min(n));
    let row = binomial_pmf_row(n, 1.0 / m as f64, k_max);
    let body: f64 = (0..m)
        .map(|j| {
            row.iter()
                .enumerate()
                .map(|(k, &w)| w * stat.symbol_value(j, k as u64, n))
                .sum::<f64>()
        })
        .sum();
    body + stat.shift(n, m)
}

/// `E[-Phi_1] = -n (1 - 1/m)^(n-1)` under the uniform distribution.
pub fn coincidence_mean_uniform(n: u64, m: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    -(n as f64) * ((n - 1) as f64 * (-1.0 / m as f64).ln_1p()).exp()
}

/// A decision rule `reject H0 iff S >= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRule {
    pub stat: SeparableStatistic,
    /// Normalized threshold (offset divided by `n^2/m`), when the rule was
    /// built from one.
    pub tau: Option<f64>,
    pub n: u64,
    pub m: usize,
    /// Realized threshold in statistic units.
    pub threshold: f64,
}

impl ThresholdRule {
    /// A rule with an absolute threshold in statistic units.
    pub fn absolute(stat: SeparableStatistic, n: u64, m: usize, threshold: f64) -> Self {
        Self {
            stat,
            tau: None,
            n,
            m,
            threshold,
        }
    }

    /// Decision for an observed statistic value. Values within a relative
    /// 1e-9 of the threshold count as reaching it, so that integer-valued
    /// statistics compare cleanly against thresholds assembled in floating
    /// point.
    pub fn rejects(&self, value: f64) -> bool {
        value >= self.threshold - 1e-9 * self.threshold.abs().max(1.0)
    }
}

/// Builds the decision rule for `stat` at normalized threshold `tau`.
///
/// * coincidence, extended coincidence, truncated Pearson:
///   `S >= E_p[S] + (n^2/m) tau` with the exact uniform expectation; `tau`
///   is clamped to `[0, kappa_bar(eps) - 1]`.
/// * Pearson: `S >= n + (n^2/m)(kappa_bar(eps) - 1)/2`; `tau` is not used.
/// * weighted coincidence: `S >= (n^2/m) tau`.
///
/// For a null that is uniform on `k < m` symbols, pass `m = k`.
pub fn make_threshold(
    stat: &SeparableStatistic,
    tau: f64,
    n: u64,
    m: usize,
    eps: f64,
) -> Result<ThresholdRule> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidThreshold(format!("tau = {tau} must be >= 0")));
    }
    if m < 2 {
        return Err(Error::InvalidAlphabet(m));
    }
    let kappa = kappa_bar(eps)?;
    let r = (n * n) as f64 / m as f64;
    let (tau, threshold) = match stat {
        SeparableStatistic::Pearson => {
            let t = 0.5 * (kappa - 1.0);
            (t, n as f64 + r * t)
        }
        SeparableStatistic::WeightedCoincidence { .. } => (tau, r * tau),
        _ => {
            let hi = kappa - 1.0;
            let t = if tau > hi {
                warn!("tau = {tau} above kappa_bar - 1 = {hi}; clamped");
                hi
            } else {
                tau
            };
            (t, uniform_expectation(stat, n, m) + r * t)
        }
    };
    Ok(ThresholdRule {
        stat: stat.clone(),
        tau: Some(tau),
        n,
        m,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::uniform;
    use approx::assert_abs_diff_eq;

    #[test]
    fn occupancy_examples() {
        let fp = occupancy(&[1, 1, 1, 0, 0]).unwrap();
        assert_eq!((fp.phi(0), fp.phi(1), fp.n(), fp.m()), (2, 3, 3, 5));
        let fp = occupancy(&[2, 1, 1, 0]).unwrap();
        assert_eq!((fp.phi(0), fp.phi(1), fp.phi(2), fp.n()), (1, 2, 1, 4));
        let fp = occupancy(&[0, 0]).unwrap();
        assert_eq!((fp.phi(0), fp.n(), fp.m()), (2, 0, 2));
        assert_eq!(fp.levels(), &[2]);
        assert!(occupancy(&[]).is_err());
    }

    #[test]
    fn from_levels_trims() {
        let fp = OccupancyFingerprint::from_levels(vec![3, 2, 1, 0, 0]).unwrap();
        assert_eq!(fp.levels(), &[3, 2, 1]);
        assert_eq!((fp.n(), fp.m(), fp.max_level()), (4, 6, 2));
    }

    #[test]
    fn coincidence_all_distinct() {
        let counts = vec![1u64; 7].into_iter().chain([0; 5]).collect::<Vec<_>>();
        let fp = occupancy(&counts).unwrap();
        assert_eq!(SeparableStatistic::Coincidence.evaluate(&fp).unwrap(), -7.0);
    }

    #[test]
    fn pearson_two_forms() {
        let counts = [2, 1, 1, 0];
        let fp = occupancy(&counts).unwrap();
        let occ = SeparableStatistic::Pearson.evaluate(&fp).unwrap();
        let direct = pearson_direct(&counts, &uniform(4).unwrap()).unwrap();
        assert_abs_diff_eq!(occ, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(direct, 2.0, epsilon = 1e-12);
        // -n^2/m + Phi_1 + 4 Phi_2 with nothing above level 2
        assert_eq!(
            SeparableStatistic::PearsonTruncated.evaluate(&fp).unwrap(),
            2.0
        );
    }

    #[test]
    fn weighted_uniform() {
        let stat = SeparableStatistic::WeightedCoincidence {
            reference: uniform(2).unwrap(),
        };
        let fp = occupancy(&[2, 0]).unwrap();
        assert_abs_diff_eq!(stat.evaluate(&fp).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(stat.evaluate_counts(&[2, 0]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(stat.evaluate_counts(&[1, 1]).unwrap(), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn weighted_nonuniform_needs_counts() {
        let stat = SeparableStatistic::WeightedCoincidence {
            reference: Pmf::new(vec![0.75, 0.25]).unwrap(),
        };
        let fp = occupancy(&[1, 1]).unwrap();
        assert!(matches!(stat.evaluate(&fp), Err(Error::NeedsCounts(_))));
        // f_0(1) + f_1(1) = -2*0.75 - 2*0.25
        assert_abs_diff_eq!(stat.evaluate_counts(&[1, 1]).unwrap(), -2.0, epsilon = 1e-15);
        // f_0(2) + f_1(0) = 1 + 0.5 * 0.25
        assert_abs_diff_eq!(stat.evaluate_counts(&[2, 0]).unwrap(), 1.125, epsilon = 1e-15);
    }

    #[test]
    fn extended_weights() {
        let stat = SeparableStatistic::ExtendedCoincidence {
            weights: vec![0.0, 2.0, 1.0],
        };
        assert!(stat.weights_valid());
        let fp = occupancy(&[3, 1, 1, 4, 2, 0]).unwrap();
        // -Phi_1 + 0*Phi_2 + 2*Phi_3 + 1*Phi_4
        assert_eq!(stat.evaluate(&fp).unwrap(), -2.0 + 2.0 + 1.0);
        assert_eq!(stat.evaluate_counts(&[3, 1, 1, 4, 2, 0]).unwrap(), 1.0);
        assert!(!SeparableStatistic::ExtendedCoincidence {
            weights: vec![1.0]
        }
        .weights_valid());
        assert!(!SeparableStatistic::ExtendedCoincidence {
            weights: vec![0.0, -1.0]
        }
        .weights_valid());
    }

    #[test]
    fn empty_sample() {
        let fp = occupancy(&[0, 0, 0]).unwrap();
        assert_eq!(SeparableStatistic::Coincidence.evaluate(&fp).unwrap(), 0.0);
        assert_eq!(SeparableStatistic::Pearson.evaluate(&fp).unwrap(), 0.0);
        let w = SeparableStatistic::WeightedCoincidence {
            reference: uniform(3).unwrap(),
        };
        assert_eq!(w.evaluate(&fp).unwrap(), 0.0);
    }

    #[test]
    fn coincidence_mean_closed_form() {
        assert_abs_diff_eq!(coincidence_mean_uniform(2, 2), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(coincidence_mean_uniform(3, 3), -4.0 / 3.0, epsilon = 1e-15);
        let generic = uniform_expectation(
            &SeparableStatistic::ExtendedCoincidence { weights: vec![] },
            3,
            3,
        );
        assert_abs_diff_eq!(generic, -4.0 / 3.0, epsilon = 1e-14);
        // E[sum c_j^2] = n + n(n-1)/m
        let pearson = uniform_expectation(&SeparableStatistic::Pearson, 10, 7);
        assert_abs_diff_eq!(pearson, 10.0 + 90.0 / 7.0 - 100.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn coincidence_threshold() {
        let rule = make_threshold(&SeparableStatistic::Coincidence, 0.2288, 100, 1000, 0.35)
            .unwrap();
        let expected = -100.0 * 0.999f64.powi(99) + 10.0 * 0.2288;
        assert_abs_diff_eq!(rule.threshold, expected, epsilon = 1e-10);

        let zero = make_threshold(&SeparableStatistic::Coincidence, 0.0, 100, 1000, 0.35).unwrap();
        assert_abs_diff_eq!(
            zero.threshold,
            coincidence_mean_uniform(100, 1000),
            epsilon = 1e-15
        );
        assert!(matches!(
            make_threshold(&SeparableStatistic::Coincidence, -0.1, 100, 1000, 0.35),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn threshold_clamps_tau() {
        let rule = make_threshold(&SeparableStatistic::Coincidence, 5.0, 100, 1000, 0.35).unwrap();
        assert_abs_diff_eq!(rule.tau.unwrap(), 0.49, epsilon = 1e-15);
    }

    #[test]
    fn pearson_threshold() {
        let rule = make_threshold(&SeparableStatistic::Pearson, 0.0, 100, 1000, 0.35).unwrap();
        assert_abs_diff_eq!(rule.threshold, 102.45, epsilon = 1e-12);
    }

    #[test]
    fn normalized_tau_round_trips() {
        let (n, m) = (300u64, 20_000usize);
        let rule = make_threshold(&SeparableStatistic::Coincidence, 0.3, n, m, 0.45).unwrap();
        let offset = rule.threshold - coincidence_mean_uniform(n, m);
        assert_abs_diff_eq!(m as f64 * offset / (n * n) as f64, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn rejects_at_threshold() {
        let rule = ThresholdRule::absolute(SeparableStatistic::Coincidence, 3, 3, 0.0);
        assert!(rule.rejects(0.0));
        assert!(!rule.rejects(-1.0));
    }

    #[test]
    fn binomial_row_sums_to_one() {
        let row = binomial_pmf_row(40, 0.3, 40);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row[1], 40.0 * 0.3 * 0.7f64.powi(39), epsilon = 1e-15);
        assert_eq!(binomial_pmf_row(5, 1.0, 5)[5], 1.0);
        assert_eq!(binomial_pmf_row(5, 0.0, 2), vec![1.0, 0.0, 0.0]);
    }
}
