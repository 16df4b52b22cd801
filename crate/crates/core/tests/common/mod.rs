//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the closed forms or the dynamic program of the crate
//! under test: exponents come from numeric maximization, laws from brute
//! enumeration of every sequence, statistics from their textbook
//! definitions.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Maximizes a unimodal `g` on `[lo, hi]` by golden-section search.
pub fn golden_max<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if ga < gb {
            lo = a;
            a = b;
            ga = gb;
            b = lo + ratio * (hi - lo);
            gb = g(b);
        } else {
            hi = b;
            b = a;
            gb = ga;
            a = hi - ratio * (hi - lo);
            ga = g(a);
        }
    }
    // the sup over theta >= 0 may sit on the boundary
    g(0.5 * (lo + hi)).max(g(0.0))
}

pub const THETA_MAX: f64 = 20.0;

pub fn kappa_ref(eps: f64) -> f64 {
    if eps < 0.5 {
        1.0 + 4.0 * eps * eps
    } else {
        1.0 + eps / (1.0 - eps)
    }
}

/// `sup_{theta >= 0} theta tau - (e^{2 theta} - 1 - 2 theta) / 2`.
pub fn jf_numeric(tau: f64) -> f64 {
    golden_max(
        |t| t * tau - 0.5 * ((2.0 * t).exp_m1() - 2.0 * t),
        0.0,
        THETA_MAX,
    )
}

/// `sup_{theta >= 0} theta (kappa - 1 - tau) - kappa (e^{-2 theta} - 1 + 2 theta) / 2`.
pub fn jm_numeric(tau: f64, eps: f64) -> f64 {
    let k = kappa_ref(eps);
    golden_max(
        |t| t * (k - 1.0 - tau) - 0.5 * k * ((-2.0 * t).exp_m1() + 2.0 * t),
        0.0,
        THETA_MAX,
    )
}

/// `sup_{theta >= 0} theta (-1 - tau) - kappa (e^{-2 theta} - 1) / 2`.
pub fn rate_numeric(tau: f64, kappa: f64) -> f64 {
    golden_max(
        |t| -t * (1.0 + tau) - 0.5 * kappa * (-2.0 * t).exp_m1(),
        0.0,
        THETA_MAX,
    )
}

/// Root of an increasing `g` on `[lo, hi]` by bisection.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Reference statistics computed from raw counts.
#[derive(Debug, Clone)]
pub enum RefStat {
    Coincidence,
    Pearson,
    PearsonTruncated,
    /// `v_l` for `l = 2, 3, ...`.
    Extended(Vec<f64>),
    Weighted(Vec<f64>),
}

impl RefStat {
    pub fn eval(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let n = n as f64;
        let m = counts.len() as f64;
        let exactly = |l: u64| counts.iter().filter(|&&c| c == l).count() as f64;
        match self {
            Self::Coincidence => -exactly(1),
            Self::Pearson => counts
                .iter()
                .map(|&c| (c as f64 - n / m).powi(2))
                .sum(),
            Self::PearsonTruncated => -n * n / m + exactly(1) + 4.0 * exactly(2),
            Self::Extended(v) => {
                -exactly(1)
                    + v.iter()
                        .enumerate()
                        .map(|(i, w)| w * exactly(i as u64 + 2))
                        .sum::<f64>()
            }
            Self::Weighted(p) => counts
                .iter()
                .zip(p)
                .map(|(&c, &pj)| match c {
                    0 => 0.5 * (n * pj).powi(2),
                    1 => -n * pj,
                    2 => 1.0,
                    _ => 0.0,
                })
                .sum(),
        }
    }
}

/// Law of `stat` over all `m^n` sequences drawn i.i.d. from `p`, keyed by the
/// value rounded to 1e-9.
pub fn enumerate_law(stat: &RefStat, p: &[f64], n: u32) -> BTreeMap<i64, (f64, f64)> {
    let m = p.len();
    let mut law: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let total = (m as u64).pow(n);
    for code in 0..total {
        let mut counts = vec![0u64; m];
        let mut prob = 1.0;
        let mut c = code;
        for _ in 0..n {
            let j = (c % m as u64) as usize;
            c /= m as u64;
            counts[j] += 1;
            prob *= p[j];
        }
        if prob == 0.0 {
            continue;
        }
        let v = stat.eval(&counts);
        let e = law.entry((v * 1e9).round() as i64).or_insert((v, 0.0));
        e.1 += prob;
    }
    law
}

/// All count vectors of length `m` summing to `n`.
pub fn compositions(n: u64, m: usize) -> Vec<Vec<u64>> {
    if m == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, m - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
