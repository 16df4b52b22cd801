//! Generalized error exponents and the boundary of the achievable region.
//!
//! Exponents are normalized by `r = n^2/m`. For a normalized threshold
//! `tau` in `[0, kappa_bar(eps) - 1]` the optimal false-alarm and
//! missed-detection exponents are
//!
//! ```text
//! J_F(tau) = sup_{t>=0} t*tau - (e^{2t} - 1 - 2t)/2
//!          = ((1+tau) ln(1+tau) - tau) / 2
//! J_M(tau) = sup_{t>=0} t*(k-1-tau) - (e^{-2t} - 1 + 2t) k / 2
//!          = (k - 1 - tau + (1+tau) ln((1+tau)/k)) / 2,   k = kappa_bar(eps)
//! ```
//!
//! Both suprema are attained at the stationary point, which gives the
//! closed forms used here.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};

/// Slack allowed when checking `tau` against the ends of its range.
const RANGE_TOL: f64 = 1e-12;

/// Worst-case value of the chi-square functional over alternatives at total
/// variation distance `eps` from uniform, to leading order.
pub fn kappa_bar(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps(eps));
    }
    Ok(if eps < 0.5 {
        1.0 + 4.0 * eps * eps
    } else {
        1.0 + eps / (1.0 - eps)
    })
}

/// Optimal false-alarm exponent at normalized threshold `tau`.
pub fn jf_star(tau: f64) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidThreshold(format!("tau = {tau} must be >= 0")));
    }
    Ok(0.5 * ((1.0 + tau) * tau.ln_1p() - tau).max(0.0))
}

fn check_tau_range(tau: f64, kappa: f64) -> Result<f64> {
    let hi = kappa - 1.0;
    if tau.is_nan() || tau < -RANGE_TOL || tau > hi + RANGE_TOL {
        return Err(Error::InvalidThreshold(format!(
            "tau = {tau} outside [0, {hi}]"
        )));
    }
    Ok(tau.clamp(0.0, hi))
}

/// Optimal missed-detection exponent at normalized threshold `tau`.
pub fn jm_star(tau: f64, eps: f64) -> Result<f64> {
    let kappa = kappa_bar(eps)?;
    let tau = check_tau_range(tau, kappa)?;
    Ok(missed_detection_closed_form(tau, kappa))
}

fn missed_detection_closed_form(tau: f64, kappa: f64) -> f64 {
    let a = 1.0 + tau;
    (0.5 * (kappa - a + a * (a / kappa).ln())).max(0.0)
}

/// Rate function of the coincidence statistic under an alternative whose
/// chi-square functional is `kappa`:
/// `sup_{t>=0} t(-1-tau) - (e^{-2t} - 1) kappa / 2`.
///
/// The supremum sits at `t = ln(kappa/(1+tau))/2` when `kappa > 1 + tau`
/// and at `t = 0` (value 0) otherwise.
pub fn rate_function(tau: f64, kappa: f64) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidThreshold(format!("tau = {tau} must be >= 0")));
    }
    if !kappa.is_finite() || kappa < 1.0 - RANGE_TOL {
        return Err(Error::InvalidKappa(kappa));
    }
    if kappa <= 1.0 + tau {
        return Ok(0.0);
    }
    Ok(missed_detection_closed_form(tau, kappa))
}

/// Threshold at which `jf_star(tau) == jm_star(tau, eps)`:
/// `(k - 1)/ln k - 1` with `k = kappa_bar(eps)`.
pub fn equalizing_tau(eps: f64) -> Result<f64> {
    let kappa = kappa_bar(eps)?;
    Ok((kappa - 1.0) / kappa.ln() - 1.0)
}

/// One point on the boundary of the achievable region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub tau: f64,
    pub jf: f64,
    pub jm: f64,
    pub eps: f64,
    pub kappa_bar: f64,
}

impl ExponentPoint {
    /// Evaluates both exponents at `tau`, clamping `tau` into
    /// `[0, kappa_bar - 1]` with a warning.
    pub fn new(tau: f64, eps: f64) -> Result<Self> {
        let kappa = kappa_bar(eps)?;
        if tau.is_nan() {
            return Err(Error::InvalidThreshold("tau is NaN".into()));
        }
        let hi = kappa - 1.0;
        let clamped = tau.clamp(0.0, hi);
        if (clamped - tau).abs() > RANGE_TOL {
            warn!("tau = {tau} outside [0, {hi}]; clamped to {clamped}");
        }
        Ok(Self {
            tau: clamped,
            jf: jf_star(clamped)?,
            jm: missed_detection_closed_form(clamped, kappa),
            eps,
            kappa_bar: kappa,
        })
    }
}

/// `npoints` boundary points with `tau` evenly spaced on `[0, kappa_bar - 1]`.
pub fn region_curve(eps: f64, npoints: usize) -> Result<Vec<ExponentPoint>> {
    if npoints < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 points, got {npoints}"
        )));
    }
    let hi = kappa_bar(eps)? - 1.0;
    (0..npoints)
        .map(|i| {
            // pin the last point to the exact endpoint
            let tau = if i + 1 == npoints {
                hi
            } else {
                hi * i as f64 / (npoints - 1) as f64
            };
            ExponentPoint::new(tau, eps)
        })
        .collect()
}

/// Least-squares fit of `-ln(p_hat)` against `r`. Returns
/// `(slope, intercept)`; the slope is the empirical generalized exponent.
pub fn estimate_exponent(rows: &[(f64, f64)]) -> Result<(f64, f64)> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: rows.len(),
        });
    }
    let mut points = Vec::with_capacity(rows.len());
    for (row, &(r, p)) in rows.iter().enumerate() {
        if p.is_nan() || p <= 0.0 {
            return Err(Error::ZeroEstimate { row });
        }
        if p > 1.0 || !r.is_finite() {
            return Err(Error::InvalidInput(format!("row {row}: ({r}, {p})")));
        }
        points.push((r, -p.ln()));
    }
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all rows share the same r".into()));
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    Ok((slope, mean_y - slope * mean_x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kappa_bar_branches() {
        assert_abs_diff_eq!(kappa_bar(0.35).unwrap(), 1.49, epsilon = 1e-15);
        assert_eq!(kappa_bar(0.5).unwrap(), 2.0);
        assert_abs_diff_eq!(1.0 + 4.0 * 0.25, 2.0);
        assert_abs_diff_eq!(kappa_bar(0.8).unwrap(), 5.0, epsilon = 1e-12);
        assert_eq!(kappa_bar(0.0), Err(Error::InvalidEps(0.0)));
        assert_eq!(kappa_bar(1.0), Err(Error::InvalidEps(1.0)));
    }

    #[test]
    fn kappa_bar_is_c1_at_half() {
        let h = 1e-7;
        let left = (kappa_bar(0.5).unwrap() - kappa_bar(0.5 - h).unwrap()) / h;
        let right = (kappa_bar(0.5 + h).unwrap() - kappa_bar(0.5).unwrap()) / h;
        assert!((left - 4.0).abs() < 1e-6, "left slope {left}");
        assert!((right - 4.0).abs() < 1e-6, "right slope {right}");
    }

    #[test]
    fn jf_examples() {
        assert_eq!(jf_star(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(jf_star(1.0).unwrap(), 0.1931471805599453, epsilon = 1e-12);
        // high-precision reference values
        assert_abs_diff_eq!(jf_star(0.228761).unwrap(), 0.0121857810147097, epsilon = 1e-12);
        assert_abs_diff_eq!(jf_star(0.228761).unwrap(), 0.012180, epsilon = 1e-5);
        assert!(jf_star(-0.1).is_err());
    }

    #[test]
    fn jm_examples() {
        for eps in [0.1, 0.35, 0.6] {
            let hi = kappa_bar(eps).unwrap() - 1.0;
            assert_eq!(jm_star(hi, eps).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(jm_star(0.0, 0.35).unwrap(), 0.045612, epsilon = 1e-6);
        assert_abs_diff_eq!(jm_star(0.0, 0.35).unwrap(), 0.0456119400213161, epsilon = 1e-12);
        assert_abs_diff_eq!(jm_star(0.365183, 0.45).unwrap(), 0.0298915129997660, epsilon = 1e-12);
        assert!(jm_star(0.6, 0.35).is_err());
        assert!(jm_star(-0.01, 0.35).is_err());
    }

    #[test]
    fn rate_function_examples() {
        assert_eq!(rate_function(0.3, 1.3).unwrap(), 0.0);
        assert_eq!(rate_function(0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            rate_function(0.2, 1.49).unwrap(),
            jm_star(0.2, 0.35).unwrap(),
            epsilon = 1e-15
        );
        assert_eq!(rate_function(0.0, 0.9), Err(Error::InvalidKappa(0.9)));
    }

    #[test]
    fn equalizer_values() {
        assert_abs_diff_eq!(equalizing_tau(0.35).unwrap(), 0.228759635989198, epsilon = 1e-12);
        assert_abs_diff_eq!(equalizing_tau(0.45).unwrap(), 0.365183467504899, epsilon = 1e-12);
        for eps in [0.05, 0.2, 0.5, 0.7, 0.95] {
            let t = equalizing_tau(eps).unwrap();
            assert!(t > 0.0 && t < kappa_bar(eps).unwrap() - 1.0);
            assert_abs_diff_eq!(jf_star(t).unwrap(), jm_star(t, eps).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn region_endpoints() {
        let pts = region_curve(0.35, 3).unwrap();
        assert_eq!(pts.len(), 3);
        assert_abs_diff_eq!(pts[1].tau, 0.245, epsilon = 1e-12);
        assert_eq!(pts[0].jf, 0.0);
        assert_abs_diff_eq!(pts[0].jm, 0.045612, epsilon = 1e-6);
        assert_eq!(pts[2].jm, 0.0);
        assert_abs_diff_eq!(pts[2].tau, 0.49, epsilon = 1e-15);
        assert_eq!(pts[2].jf, jf_star(pts[2].tau).unwrap());
        assert!(region_curve(0.35, 1).is_err());
    }

    #[test]
    fn region_monotone() {
        for eps in [0.1, 0.45, 0.8] {
            let pts = region_curve(eps, 50).unwrap();
            for w in pts.windows(2) {
                assert!(w[1].jf >= w[0].jf);
                assert!(w[1].jm <= w[0].jm);
            }
        }
    }

    #[test]
    fn point_clamps() {
        let p = ExponentPoint::new(2.0, 0.35).unwrap();
        assert_abs_diff_eq!(p.tau, 0.49, epsilon = 1e-15);
        assert_eq!(p.jm, 0.0);
        assert_eq!(ExponentPoint::new(-1.0, 0.35).unwrap().jf, 0.0);
    }

    #[test]
    fn slope_fits() {
        let rows: Vec<_> = [5.0, 10.0, 40.0]
            .iter()
            .map(|&r| (r, (-0.03f64 * r).exp()))
            .collect();
        let (s, c) = estimate_exponent(&rows).unwrap();
        assert_abs_diff_eq!(s, 0.03, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);

        let (s, c) =
            estimate_exponent(&[(10.0, (-1.0f64).exp()), (20.0, (-2.0f64).exp())]).unwrap();
        assert_abs_diff_eq!(s, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);

        assert!(matches!(
            estimate_exponent(&[(1.0, 0.5)]),
            Err(Error::TooFewRows { .. })
        ));
        assert_eq!(
            estimate_exponent(&[(1.0, 0.5), (2.0, 0.0)]),
            Err(Error::ZeroEstimate { row: 1 })
        );
    }
}
