//! Exact small-instance ground truth.
//!
//! The law of a separable statistic under multinomial sampling is computed
//! by a dynamic program over symbols. Conditioning independent Poisson
//! counts on their total gives
//!
//! ```text
//! P(c_1, .., c_m) = n! prod_j p_j^{c_j} / c_j!
//! ```
//!
//! so after `j` symbols the table `E_j[t][v] = t! * (mass of partial
//! assignments using t draws with partial statistic v)` obeys
//!
//! ```text
//! E_j[t][v] = sum_k C(t, k) p_j^k E_{j-1}[t-k][v - f_j(k)]
//! ```
//!
//! and the law of the statistic is `E_m[n][.]`. Every row carries its own
//! log-scale so that rows which are tiny relative to others do not
//! underflow.
//!
//! Statistic values are keyed by integers: the per-symbol table is scaled
//! by the smallest common denominator that makes it integral, and the
//! constant shift (for instance `-n^2/m` for Pearson) is applied only when
//! values are reported.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::statistics::{binomial_pmf_row, SeparableStatistic, ThresholdRule};

/// Default ceiling on `m * (n+1) * (value range + 1)`.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Largest denominator tried when rationalizing a table entry.
const MAX_DENOMINATOR: i64 = 1_000_000;
/// Largest common denominator accepted for a whole table.
const MAX_SCALE: i64 = 1_000_000_000;

/// Per-symbol values `f_j(k)` for `k = 0..=n`, plus a constant shift.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticTable {
    n: u64,
    m: usize,
    /// One row per symbol, or a single shared row.
    rows: Vec<Vec<f64>>,
    shift: f64,
}

impl StatisticTable {
    /// Tabulates one of the built-in statistics for samples of size `n` on
    /// `m` symbols.
    pub fn from_statistic(stat: &SeparableStatistic, m: usize, n: u64) -> Self {
        let row = |j: usize| (0..=n).map(|k| stat.symbol_value(j, k, n)).collect();
        let rows = if stat.is_symmetric() {
            vec![row(0)]
        } else {
            (0..m).map(row).collect()
        };
        Self {
            n,
            m,
            rows,
            shift: stat.shift(n, m),
        }
    }

    /// A user-supplied table `f(symbol, count)` with no shift.
    pub fn from_fn<F>(m: usize, n: u64, f: F) -> Self
    where
        F: Fn(usize, u64) -> f64,
    {
        Self {
            n,
            m,
            rows: (0..m).map(|j| (0..=n).map(|k| f(j, k)).collect()).collect(),
            shift: 0.0,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn row(&self, symbol: usize) -> &[f64] {
        if self.rows.len() == 1 {
            &self.rows[0]
        } else {
            &self.rows[symbol]
        }
    }

    /// Integer keys for every entry and the common denominator.
    fn integer_keys(&self) -> Result<(Vec<Vec<i64>>, i64)> {
        let mut scale: i64 = 1;
        for &x in self.rows.iter().flatten() {
            let (_, q) = rationalize(x).ok_or_else(|| {
                Error::Scaling(format!("table entry {x} has no small rational form"))
            })?;
            scale = lcm(scale, q);
            if scale > MAX_SCALE {
                return Err(Error::Scaling(format!(
                    "common denominator exceeds {MAX_SCALE}"
                )));
            }
        }
        let keys = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&x| (x * scale as f64).round() as i64).collect())
            .collect();
        Ok((keys, scale))
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// Best rational approximation `p/q` with `q <= MAX_DENOMINATOR` that lies
/// within a relative 1e-13 of `x`.
fn rationalize(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-13 * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = rest - a as f64;
        if frac == 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

/// Exact law of a statistic: distinct values in increasing order with their
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDistribution {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| p * (v - mu) * (v - mu))
            .sum()
    }

    /// Probability that `rule` rejects.
    pub fn reject_probability(&self, rule: &ThresholdRule) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| rule.rejects(**v))
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability of the value `v` (exact match on the reported support).
    pub fn prob_of(&self, v: f64) -> f64 {
        self.support
            .iter()
            .position(|&s| (s - v).abs() <= 1e-9 * v.abs().max(1.0))
            .map_or(0.0, |i| self.probs[i])
    }
}

/// One DP row: `mantissa * exp(log_scale)` per integer key.
#[derive(Debug, Clone, Default)]
struct ScaledRow {
    log_scale: f64,
    cells: BTreeMap<i64, f64>,
}

impl ScaledRow {
    fn renormalize(&mut self) {
        let max = self.cells.values().fold(0.0f64, |a, &b| a.max(b));
        if max > 0.0 {
            for w in self.cells.values_mut() {
                *w /= max;
            }
            self.log_scale += max.ln();
        }
    }
}

fn ln_binomials(t_max: u64) -> Vec<Vec<f64>> {
    let mut ln_fact = vec![0.0f64; t_max as usize + 1];
    for k in 1..=t_max as usize {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    (0..=t_max as usize)
        .map(|t| (0..=t).map(|k| ln_fact[t] - ln_fact[k] - ln_fact[t - k]).collect())
        .collect()
}

/// Exact law of a built-in statistic for `n` draws from `p`, with the
/// default cell budget.
pub fn exact_distribution(
    stat: &SeparableStatistic,
    p: &Pmf,
    n: u64,
) -> Result<ExactDistribution> {
    let table = StatisticTable::from_statistic(stat, p.len(), n);
    exact_distribution_table(&table, p, DEFAULT_BUDGET)
}

/// Exact law of a tabulated statistic for `table.n()` draws from `p`.
pub fn exact_distribution_table(
    table: &StatisticTable,
    p: &Pmf,
    budget: u128,
) -> Result<ExactDistribution> {
    let m = p.len();
    if table.m() != m {
        return Err(Error::Dimension {
            left: table.m(),
            right: m,
        });
    }
    let n = table.n();
    let (keys, scale) = table.integer_keys()?;
    let key_row = |j: usize| -> &[i64] {
        if keys.len() == 1 {
            &keys[0]
        } else {
            &keys[j]
        }
    };

    let (mut lo, mut hi) = (0i128, 0i128);
    for j in 0..m {
        let row = key_row(j);
        lo += *row.iter().min().unwrap() as i128;
        hi += *row.iter().max().unwrap() as i128;
    }
    let cells = m as u128 * (n as u128 + 1) * ((hi - lo) as u128 + 1);
    if cells > budget {
        return Err(Error::OracleTooLarge { cells, budget });
    }

    let ln_binom = ln_binomials(n);
    let mut layer: Vec<ScaledRow> = (0..=n).map(|_| ScaledRow::default()).collect();
    layer[0].cells.insert(0, 1.0);
    let empty = |row: &ScaledRow| row.cells.is_empty();

    for j in 0..m {
        let pj = p[j];
        let ln_p = pj.ln();
        let fk = key_row(j);
        let last = j + 1 == m;
        let mut next: Vec<ScaledRow> = (0..=n).map(|_| ScaledRow::default()).collect();
        for t in 0..=n {
            // only the full-sample row matters after the last symbol
            if last && t != n {
                continue;
            }
            let k_max = if pj > 0.0 { t } else { 0 };
            let log_factors: Vec<Option<f64>> = (0..=k_max)
                .map(|k| {
                    let prev = &layer[(t - k) as usize];
                    (!empty(prev)).then(|| {
                        let w = if k == 0 { 0.0 } else { k as f64 * ln_p };
                        prev.log_scale + ln_binom[t as usize][k as usize] + w
                    })
                })
                .collect();
            let Some(top) = log_factors
                .iter()
                .flatten()
                .copied()
                .reduce(f64::max)
            else {
                continue;
            };
            let out = &mut next[t as usize];
            out.log_scale = top;
            for (k, lf) in log_factors.iter().enumerate() {
                let Some(lf) = lf else { continue };
                let factor = (lf - top).exp();
                if factor == 0.0 {
                    continue;
                }
                let shift = fk[k];
                for (&v, &w) in &layer[t as usize - k].cells {
                    *out.cells.entry(v + shift).or_insert(0.0) += w * factor;
                }
            }
            out.renormalize();
        }
        layer = next;
    }

    let last = &layer[n as usize];
    let mut support = Vec::with_capacity(last.cells.len());
    let mut probs = Vec::with_capacity(last.cells.len());
    for (&v, &w) in &last.cells {
        let prob = w * last.log_scale.exp();
        if prob > 0.0 {
            support.push(v as f64 / scale as f64 + table.shift());
            probs.push(prob);
        }
    }
    Ok(ExactDistribution { support, probs })
}

/// Exact `(P_F, P_M)` of `rule` with null `p_null` and alternative `p_alt`.
pub fn exact_error_probs(rule: &ThresholdRule, p_null: &Pmf, p_alt: &Pmf) -> Result<(f64, f64)> {
    exact_error_probs_with_budget(rule, p_null, p_alt, DEFAULT_BUDGET)
}

pub fn exact_error_probs_with_budget(
    rule: &ThresholdRule,
    p_null: &Pmf,
    p_alt: &Pmf,
    budget: u128,
) -> Result<(f64, f64)> {
    let null = StatisticTable::from_statistic(&rule.stat, p_null.len(), rule.n);
    let alt = StatisticTable::from_statistic(&rule.stat, p_alt.len(), rule.n);
    let under_null = exact_distribution_table(&null, p_null, budget)?;
    let under_alt = exact_distribution_table(&alt, p_alt, budget)?;
    let pf = under_null.reject_probability(rule).min(1.0);
    let pm = (1.0 - under_alt.reject_probability(rule)).max(0.0);
    Ok((pf, pm))
}

/// Exact `E[S]` for `n` draws from `p`, by linearity over the
/// Binomial(n, p_j) marginals.
pub fn exact_expectation(stat: &SeparableStatistic, p: &Pmf, n: u64) -> f64 {
    let k_max = stat.max_level().map_or(n, |l| l as u64);
    let body: f64 = (0..p.len())
        .map(|j| {
            binomial_pmf_row(n, p[j], k_max)
                .iter()
                .enumerate()
                .map(|(k, &w)| {
                    let f = stat.symbol_value(j, k as u64, n);
                    if f == 0.0 {
                        0.0
                    } else {
                        w * f
                    }
                })
                .sum::<f64>()
        })
        .sum();
    body + stat.shift(n, p.len())
}

/// Exact `E[S]` for a tabulated statistic.
pub fn exact_expectation_table(table: &StatisticTable, p: &Pmf) -> f64 {
    let n = table.n();
    let body: f64 = (0..p.len())
        .map(|j| {
            binomial_pmf_row(n, p[j], n)
                .iter()
                .zip(table.row(j))
                .map(|(w, f)| w * f)
                .sum::<f64>()
        })
        .sum();
    body + table.shift()
}

/// Leading-order moments of a separable statistic under `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticMoments {
    /// `sum_j f_j(0) + n sum_j nu_j (f_j(1) - f_j(0))
    ///  + (n^2/2) sum_j nu_j^2 (f_j(0) - 2 f_j(1) + f_j(2))`, plus the
    /// statistic's constant shift. The error is `O(n^3/m^2)`.
    pub mean: f64,
    /// `(n^2/m)/2 * (f(2) - 2 f(1))^2 * (m sum_j nu_j^2)`; only defined for
    /// symmetric statistics with `f(0) = 0` and `f(2) != 2 f(1)`.
    pub variance: Option<f64>,
}

/// Second-order moment approximations for `n` draws from `nu`.
///
/// The shift convention follows [`SeparableStatistic::shift`]: the
/// coincidence statistic is `-Phi_1` with no shift, so its mean comes out
/// as `-n + n^2 sum_j nu_j^2`; Pearson carries `-n^2/m`, so its mean is
/// `n` under the uniform law.
pub fn asymptotic_moments(stat: &SeparableStatistic, nu: &Pmf, n: u64) -> AsymptoticMoments {
    let m = nu.len();
    let nf = n as f64;
    let mut mean = stat.shift(n, m);
    for j in 0..m {
        let f = |k| stat.symbol_value(j, k, n);
        let v = nu[j];
        mean += f(0) + nf * v * (f(1) - f(0)) + 0.5 * nf * nf * v * v * (f(0) - 2.0 * f(1) + f(2));
    }
    let variance = if stat.is_symmetric() {
        let f = |k| stat.symbol_value(0, k, n);
        let curvature = f(2) - 2.0 * f(1);
        (f(0) == 0.0 && curvature != 0.0).then(|| {
            let collision = m as f64 * nu.probs().iter().map(|v| v * v).sum::<f64>();
            0.5 * nf * nf / m as f64 * curvature * curvature * collision
        })
    } else {
        None
    };
    AsymptoticMoments { mean, variance }
}

/// Grid minimizer of the chi-square functional against the uniform law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMinimum {
    /// Minimizing grid point, entries in non-increasing order.
    pub argmin: Pmf,
    pub value: f64,
}

/// Minimizes `m sum_j q_j^2` over grid points `q = a/mesh` of the simplex
/// with `tv(q, uniform) >= eps`.
///
/// Both the objective and the constraint are symmetric, so only
/// non-increasing compositions are enumerated.
pub fn worst_case_bruteforce(m: usize, eps: f64, mesh: usize) -> Result<GridMinimum> {
    if !(2..=6).contains(&m) {
        return Err(Error::InvalidInput(format!(
            "brute force supports 2 <= m <= 6, got {m}"
        )));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEps(eps));
    }
    if mesh == 0 {
        return Err(Error::InvalidInput("mesh must be positive".into()));
    }
    // 2 m mesh * tv = sum_j |m a_j - mesh|
    let need = 2.0 * eps * (m * mesh) as f64 - 1e-9;
    let mut best: Option<(i64, Vec<usize>)> = None;
    let mut parts = vec![0usize; m];

    #[allow(clippy::too_many_arguments)]
    fn walk(
        idx: usize,
        remaining: usize,
        cap: usize,
        parts: &mut Vec<usize>,
        m: usize,
        mesh: usize,
        need: f64,
        best: &mut Option<(i64, Vec<usize>)>,
    ) {
        if idx + 1 == m {
            if remaining > cap {
                return;
            }
            parts[idx] = remaining;
            let spread: i64 = parts
                .iter()
                .map(|&a| (m as i64 * a as i64 - mesh as i64).abs())
                .sum();
            if (spread as f64) < need {
                return;
            }
            let sq: i64 = parts.iter().map(|&a| (a * a) as i64).sum();
            if best.as_ref().is_none_or(|(b, _)| sq < *b) {
                *best = Some((sq, parts.clone()));
            }
            return;
        }
        // remaining mass must fit into the m - idx parts no larger than cap
        let slots = m - idx;
        let lo = remaining.div_ceil(slots);
        for a in (lo..=cap.min(remaining)).rev() {
            parts[idx] = a;
            walk(idx + 1, remaining - a, a, parts, m, mesh, need, best);
        }
    }

    walk(0, mesh, mesh, &mut parts, m, mesh, need, &mut best);
    let (sq, parts) = best.ok_or(Error::Infeasible { eps, mesh })?;
    let argmin = Pmf::new(parts.iter().map(|&a| a as f64 / mesh as f64).collect())?;
    let value = m as f64 * sq as f64 / (mesh * mesh) as f64;
    Ok(GridMinimum { argmin, value })
}
