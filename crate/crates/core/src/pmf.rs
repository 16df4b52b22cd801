//! Probability mass functions on a finite alphabet `{0, .., m-1}`.
//!
//! Besides the constructors for the null (uniform) and for the worst-case
//! bi-uniform alternatives, this module holds the distances used to define
//! the alternative set (total variation), the chi-square functional
//! `sum_j q_j^2 / p_j` that governs the missed-detection exponent, and a
//! generic f-divergence with a grid certificate for its regularity
//! conditions.
//!
//! Symbols are 0-based throughout.

use serde::Serialize;

use crate::error::{Error, Result};

/// Normalization tolerance accepted as-is.
pub const SUM_TOL: f64 = 1e-12;
/// Drift up to this size is silently renormalized; anything larger is an error.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// A probability mass function on `m >= 2` symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidAlphabet(probs.len()));
        }
        if let Some((j, &x)) = probs
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0)
        {
            return Err(Error::InvalidPmf(format!("entry {j} is {x}")));
        }
        let total: f64 = probs.iter().sum();
        let drift = (total - 1.0).abs();
        if drift <= SUM_TOL {
            Ok(Self { probs })
        } else if drift <= RENORMALIZE_TOL {
            Ok(Self {
                probs: probs.into_iter().map(|x| x / total).collect(),
            })
        } else {
            Err(Error::InvalidPmf(format!("entries sum to {total}")))
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Alphabet size `m`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Number of symbols with positive mass.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&x| x > 0.0).count()
    }

    /// True when every symbol carries mass `1/m`.
    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.probs.iter().all(|&x| (x - u).abs() <= SUM_TOL)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.probs[j]
    }
}

/// The uniform distribution on `m` symbols.
pub fn uniform(m: usize) -> Result<Pmf> {
    if m < 2 {
        return Err(Error::InvalidAlphabet(m));
    }
    Ok(Pmf {
        probs: vec![1.0 / m as f64; m],
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps(eps))
    }
}

/// Entry values `(high, low)` of the bi-uniform alternative for `eps < 0.5`.
fn biuniform_levels(m: usize, eps: f64) -> (f64, f64) {
    let heavy = (m / 2) as f64;
    let light = m.div_ceil(2) as f64;
    let base = 1.0 / m as f64;
    (base + eps / heavy, base - eps / light)
}

/// Number of symbols kept when `eps >= 0.5`: `floor(m(1-eps))`.
///
/// The product is nudged by 1e-9 before flooring so that values such as
/// `10 * (1 - 0.9)` (which is `0.99999...` in binary) floor to the intended
/// integer.
fn kept_symbols(m: usize, eps: f64) -> usize {
    (m as f64 * (1.0 - eps) + 1e-9).floor() as usize
}

/// Worst-case alternative at total variation distance `eps` from uniform.
///
/// For `eps < 0.5` the first `floor(m/2)` symbols are raised and the rest
/// lowered; for `eps >= 0.5` the mass is spread uniformly over the first
/// `floor(m(1-eps))` symbols.
pub fn biuniform_worst_case(m: usize, eps: f64) -> Result<Pmf> {
    if m < 2 {
        return Err(Error::InvalidAlphabet(m));
    }
    check_eps(eps)?;
    let probs = if eps < 0.5 {
        let (hi, lo) = biuniform_levels(m, eps);
        (0..m).map(|j| if j < m / 2 { hi } else { lo.max(0.0) }).collect()
    } else {
        let k = kept_symbols(m, eps);
        if k == 0 {
            return Err(Error::DegenerateAlternative { m, eps });
        }
        (0..m)
            .map(|j| if j < k { 1.0 / k as f64 } else { 0.0 })
            .collect()
    };
    Pmf::new(probs)
}

/// The bi-uniform alternative with the raised symbols placed on `subset`.
///
/// `subset` must contain exactly `floor(m/2)` distinct symbols.
pub fn permuted_worst_case(m: usize, eps: f64, subset: &[usize]) -> Result<Pmf> {
    if m < 2 {
        return Err(Error::InvalidAlphabet(m));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidEps(eps));
    }
    let mut raised = vec![false; m];
    for &j in subset {
        if j >= m || raised[j] {
            return Err(Error::InvalidSubset {
                expected: m / 2,
                m,
                got: subset.to_vec(),
            });
        }
        raised[j] = true;
    }
    if subset.len() != m / 2 {
        return Err(Error::InvalidSubset {
            expected: m / 2,
            m,
            got: subset.to_vec(),
        });
    }
    let (hi, lo) = biuniform_levels(m, eps);
    Pmf::new(raised.into_iter().map(|r| if r { hi } else { lo }).collect())
}

fn same_alphabet(q: &Pmf, p: &Pmf) -> Result<()> {
    if q.len() == p.len() {
        Ok(())
    } else {
        Err(Error::Dimension {
            left: q.len(),
            right: p.len(),
        })
    }
}

/// Pairs `(q_j, p_j)` over the support of `p`, failing if `q` has mass
/// outside it.
fn on_support<'a>(q: &'a Pmf, p: &'a Pmf) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    same_alphabet(q, p)?;
    if let Some((symbol, (&mass, _))) = q
        .probs
        .iter()
        .zip(&p.probs)
        .enumerate()
        .find(|(_, (&qj, &pj))| pj == 0.0 && qj > 0.0)
    {
        return Err(Error::AbsoluteContinuity { symbol, mass });
    }
    Ok(q.probs
        .iter()
        .zip(&p.probs)
        .filter(|(_, &pj)| pj > 0.0)
        .map(|(&qj, &pj)| (qj, pj)))
}

/// Total variation distance, computed as half the L1 distance.
pub fn tv_distance(q: &Pmf, p: &Pmf) -> Result<f64> {
    same_alphabet(q, p)?;
    let l1: f64 = q.probs.iter().zip(&p.probs).map(|(a, b)| (a - b).abs()).sum();
    Ok(0.5 * l1)
}

/// `sum_j q_j^2 / p_j` over the support of `p`. At least 1, with equality
/// iff `q = p`.
pub fn chi_square_functional(q: &Pmf, p: &Pmf) -> Result<f64> {
    Ok(on_support(q, p)?.map(|(qj, pj)| qj * qj / pj).sum())
}

/// `max_j q_j / p_j` over the support of `p`.
pub fn likelihood_ratio_bound(q: &Pmf, p: &Pmf) -> Result<f64> {
    Ok(on_support(q, p)?
        .map(|(qj, pj)| qj / pj)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `sum_j p_j f(q_j / p_j)` over the support of `p`.
pub fn f_divergence<F>(q: &Pmf, p: &Pmf, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut total = 0.0;
    for (qj, pj) in on_support(q, p)? {
        let x = qj / pj;
        let v = f(x);
        if v.is_nan() {
            return Err(Error::Evaluation { x, value: v });
        }
        total += pj * v;
    }
    Ok(total)
}

/// Sampling plan for [`check_fdiv_conditions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdivGrid {
    /// Interior points of (0, 1) probed for the strict midpoint condition.
    pub midpoint_points: usize,
    /// Upper end of the range `[0, x_max]` probed for the quadratic bound.
    pub x_max: f64,
    /// Number of intervals in `[0, x_max]`.
    pub quadratic_points: usize,
}

impl Default for FdivGrid {
    fn default() -> Self {
        Self {
            midpoint_points: 1000,
            x_max: 100.0,
            quadratic_points: 100_000,
        }
    }
}

/// Distances from 1 at which `f(x) / (x-1)^2` is probed.
const NEAR_ONE_STEPS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
/// Allowed growth of that ratio between the coarsest and finest probe.
const NEAR_ONE_GROWTH: f64 = 10.0;

fn alpha_floor(f1: f64) -> f64 {
    1e-12 * (1.0 + f1.abs())
}

/// Grid certificate for the two regularity conditions on `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdivReport {
    /// Some `x` in (0, 1) with `(f(1-x) + f(1+x)) / 2 > f(1)`.
    pub midpoint_holds: bool,
    pub midpoint_witness: Option<f64>,
    /// `f(x) <= alpha (x-1)^2` on the grid with the reported `alpha`.
    pub quadratic_holds: bool,
    pub alpha: f64,
}

/// Checks, on a grid, that `f` is strictly convex somewhere around 1 and
/// is dominated by a multiple of `(x-1)^2`. The quadratic bound is also
/// probed at distances down to 1e-6 from `x = 1`.
///
/// These are certificates over finitely many points, not proofs.
pub fn check_fdiv_conditions<F>(f: F, grid: &FdivGrid) -> Result<FdivReport>
where
    F: Fn(f64) -> f64,
{
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_nan() {
            Err(Error::Evaluation { x, value: v })
        } else {
            Ok(v)
        }
    };
    let f1 = eval(1.0)?;
    let tol = 1e-12 * (1.0 + f1.abs());

    let mut witness = None;
    let k = grid.midpoint_points.max(1);
    for i in 1..=k {
        let x = i as f64 / (k + 1) as f64;
        if 0.5 * (eval(1.0 - x)? + eval(1.0 + x)?) > f1 + tol {
            witness = Some(x);
            break;
        }
    }

    let mut alpha = f64::NEG_INFINITY;
    let n = grid.quadratic_points.max(1);
    for i in 0..=n {
        let x = grid.x_max * i as f64 / n as f64;
        if (x - 1.0).abs() < 1e-12 {
            continue;
        }
        alpha = alpha.max(eval(x)? / ((x - 1.0) * (x - 1.0)));
    }

    // A finite grid misses blow-up at x = 1 (e.g. |x-1|), so probe the ratio
    // on both sides at shrinking distances and require it to level off.
    let near_ratio = |h: f64| -> Result<f64> {
        let side = |x: f64| -> Result<f64> { Ok(eval(x)? / ((x - 1.0) * (x - 1.0))) };
        Ok(side(1.0 - h)?.max(side(1.0 + h)?))
    };
    let coarse = near_ratio(NEAR_ONE_STEPS[0])?;
    let mut fine = coarse;
    for &h in &NEAR_ONE_STEPS[1..] {
        fine = near_ratio(h)?;
        alpha = alpha.max(fine);
    }
    let bounded_near_one = fine <= NEAR_ONE_GROWTH * coarse.max(alpha_floor(f1));

    Ok(FdivReport {
        midpoint_holds: witness.is_some(),
        midpoint_witness: witness,
        quadratic_holds: alpha.is_finite() && bounded_near_one,
        alpha,
    })
}
