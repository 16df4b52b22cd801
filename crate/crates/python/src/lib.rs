//! Python bindings for `gee-core`, importable as `gee`.
//!
//! Symbols are 0-based. Library errors surface as `ValueError` for rejected
//! inputs and `RuntimeError` for everything else.

use std::cell::RefCell;

use gee_core::montecarlo::{self, MRule};
use gee_core::{exponents, oracle, pmf, statistics, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidAlphabet(_)
        | Error::InvalidPmf(_)
        | Error::InvalidSubset { .. }
        | Error::Dimension { .. }
        | Error::InvalidEps(_)
        | Error::InvalidThreshold(_)
        | Error::InvalidKappa(_)
        | Error::InvalidInput(_)
        | Error::Domain(_)
        | Error::TooFewRows { .. }
        | Error::ZeroEstimate { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gee_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A probability mass function on `{0, ..., m-1}`.
#[pyclass(name = "Pmf", module = "gee", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPmf(gee_core::Pmf);

#[pymethods]
impl PyPmf {
    #[new]
    fn new(probs: Vec<f64>) -> PyResult<Self> {
        gee_core::Pmf::new(probs).py_err().map(Self)
    }

    #[staticmethod]
    fn uniform(m: usize) -> PyResult<Self> {
        pmf::uniform(m).py_err().map(Self)
    }

    /// Mass (1+eps)/m on the first floor(m/2) symbols, the rest of the mass
    /// spread over the remaining ones.
    #[staticmethod]
    fn biuniform_worst_case(m: usize, eps: f64) -> PyResult<Self> {
        pmf::biuniform_worst_case(m, eps).py_err().map(Self)
    }

    #[staticmethod]
    fn permuted_worst_case(m: usize, eps: f64, subset: Vec<usize>) -> PyResult<Self> {
        pmf::permuted_worst_case(m, eps, &subset).py_err().map(Self)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    #[getter]
    fn support_size(&self) -> usize {
        self.0.support_size()
    }

    fn is_uniform(&self) -> bool {
        self.0.is_uniform()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Pmf({:?})", self.0.probs())
    }
}

#[pyfunction]
fn tv_distance(q: &PyPmf, p: &PyPmf) -> PyResult<f64> {
    pmf::tv_distance(&q.0, &p.0).py_err()
}

#[pyfunction]
fn chi_square_functional(q: &PyPmf, p: &PyPmf) -> PyResult<f64> {
    pmf::chi_square_functional(&q.0, &p.0).py_err()
}

/// A separable statistic. Build one with the static constructors.
#[pyclass(name = "Statistic", module = "gee", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStatistic(statistics::SeparableStatistic);

#[pymethods]
impl PyStatistic {
    #[staticmethod]
    fn coincidence() -> Self {
        Self(statistics::SeparableStatistic::Coincidence)
    }

    #[staticmethod]
    fn pearson() -> Self {
        Self(statistics::SeparableStatistic::Pearson)
    }

    #[staticmethod]
    fn pearson_truncated() -> Self {
        Self(statistics::SeparableStatistic::PearsonTruncated)
    }

    /// `weights[i]` is the weight of level `i + 2`.
    #[staticmethod]
    fn extended(weights: Vec<f64>) -> Self {
        Self(statistics::SeparableStatistic::ExtendedCoincidence { weights })
    }

    #[staticmethod]
    fn weighted(reference: &PyPmf) -> Self {
        Self(statistics::SeparableStatistic::WeightedCoincidence {
            reference: reference.0.clone(),
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn evaluate_counts(&self, counts: Vec<u64>) -> PyResult<f64> {
        self.0.evaluate_counts(&counts).py_err()
    }

    /// Value from occupancy levels `[Phi_0, Phi_1, ...]`; symmetric
    /// statistics only.
    fn evaluate_levels(&self, levels: Vec<u64>) -> PyResult<f64> {
        let fp = statistics::OccupancyFingerprint::from_levels(levels).py_err()?;
        self.0.evaluate(&fp).py_err()
    }

    fn __repr__(&self) -> String {
        format!("Statistic.{}", self.0.name())
    }
}

/// Occupancy levels `[Phi_0, Phi_1, ...]` of a count vector.
#[pyfunction]
fn occupancy(counts: Vec<u64>) -> PyResult<Vec<u64>> {
    Ok(statistics::occupancy(&counts).py_err()?.levels().to_vec())
}

/// Decision rule `reject iff S >= threshold`.
#[pyclass(name = "ThresholdRule", module = "gee", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRule(statistics::ThresholdRule);

#[pymethods]
impl PyRule {
    #[staticmethod]
    fn absolute(stat: &PyStatistic, n: u64, m: usize, threshold: f64) -> Self {
        Self(statistics::ThresholdRule::absolute(stat.0.clone(), n, m, threshold))
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.0.threshold
    }

    #[getter]
    fn tau(&self) -> Option<f64> {
        self.0.tau
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m
    }

    #[getter]
    fn statistic(&self) -> PyStatistic {
        PyStatistic(self.0.stat.clone())
    }

    fn rejects(&self, value: f64) -> bool {
        self.0.rejects(value)
    }

    fn __repr__(&self) -> String {
        format!(
            "ThresholdRule({}, n={}, m={}, threshold={})",
            self.0.stat.name(),
            self.0.n,
            self.0.m,
            self.0.threshold
        )
    }
}

#[pyfunction]
fn make_threshold(stat: &PyStatistic, tau: f64, n: u64, m: usize, eps: f64) -> PyResult<PyRule> {
    statistics::make_threshold(&stat.0, tau, n, m, eps).py_err().map(PyRule)
}

#[pyfunction]
fn kappa_bar(eps: f64) -> PyResult<f64> {
    exponents::kappa_bar(eps).py_err()
}

#[pyfunction]
fn jf_star(tau: f64) -> PyResult<f64> {
    exponents::jf_star(tau).py_err()
}

#[pyfunction]
fn jm_star(tau: f64, eps: f64) -> PyResult<f64> {
    exponents::jm_star(tau, eps).py_err()
}

#[pyfunction]
fn rate_function(tau: f64, kappa: f64) -> PyResult<f64> {
    exponents::rate_function(tau, kappa).py_err()
}

#[pyfunction]
fn equalizing_tau(eps: f64) -> PyResult<f64> {
    exponents::equalizing_tau(eps).py_err()
}

/// `[(tau, jf, jm), ...]` on an even grid of `[0, kappa_bar - 1]`.
#[pyfunction]
fn region_curve(eps: f64, npoints: usize) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(exponents::region_curve(eps, npoints)
        .py_err()?
        .into_iter()
        .map(|p| (p.tau, p.jf, p.jm))
        .collect())
}

/// Slope and intercept of `-ln p` against `r` over `[(r, p), ...]`.
#[pyfunction]
fn estimate_exponent(rows: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    exponents::estimate_exponent(&rows).py_err()
}

/// Exact law `(support, probs)` of `stat` for `n` draws from `p`.
#[pyfunction]
#[pyo3(signature = (stat, p, n, budget = oracle::DEFAULT_BUDGET))]
fn exact_distribution(
    py: Python<'_>,
    stat: &PyStatistic,
    p: &PyPmf,
    n: u64,
    budget: u128,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let (stat, p) = (stat.0.clone(), p.0.clone());
    let law = py
        .detach(|| {
            let table = oracle::StatisticTable::from_statistic(&stat, p.len(), n);
            oracle::exact_distribution_table(&table, &p, budget)
        })
        .py_err()?;
    Ok((law.support, law.probs))
}

/// Exact `(pf, pm)` of `rule`.
#[pyfunction]
#[pyo3(signature = (rule, p_null, p_alt, budget = oracle::DEFAULT_BUDGET))]
fn exact_error_probs(
    py: Python<'_>,
    rule: &PyRule,
    p_null: &PyPmf,
    p_alt: &PyPmf,
    budget: u128,
) -> PyResult<(f64, f64)> {
    let (rule, p0, p1) = (rule.0.clone(), p_null.0.clone(), p_alt.0.clone());
    py.detach(|| oracle::exact_error_probs_with_budget(&rule, &p0, &p1, budget))
        .py_err()
}

#[pyfunction]
fn exact_expectation(stat: &PyStatistic, p: &PyPmf, n: u64) -> f64 {
    oracle::exact_expectation(&stat.0, &p.0, n)
}

/// Monte Carlo frequency with its 95% half-width.
#[pyclass(name = "ErrorEstimate", module = "gee", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    p_hat: f64,
    exceed_count: u64,
    trials: u64,
    ci95_halfwidth: f64,
}

impl From<montecarlo::ErrorEstimate> for PyEstimate {
    fn from(e: montecarlo::ErrorEstimate) -> Self {
        Self {
            p_hat: e.p_hat,
            exceed_count: e.exceed_count,
            trials: e.trials,
            ci95_halfwidth: e.ci95_halfwidth,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "ErrorEstimate(p_hat={}, exceed_count={}, trials={}, ci95_halfwidth={})",
            self.p_hat, self.exceed_count, self.trials, self.ci95_halfwidth
        )
    }
}

/// A Monte Carlo plan: a rule, the worst-case alternative and the RNG
/// settings. Results do not depend on `streams`.
#[pyclass(name = "SimPlan", module = "gee", frozen, skip_from_py_object)]
struct PySimPlan(montecarlo::SimPlan);

#[pymethods]
impl PySimPlan {
    #[new]
    #[pyo3(signature = (stat, tau, n, m, eps, trials, seed = 0, streams = 8, alternative = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        stat: &PyStatistic,
        tau: f64,
        n: u64,
        m: usize,
        eps: f64,
        trials: u64,
        seed: u64,
        streams: usize,
        alternative: Option<&PyPmf>,
    ) -> PyResult<Self> {
        let mut plan = montecarlo::SimPlan::new(&stat.0, tau, n, m, eps, trials, seed)
            .py_err()?
            .streams(streams);
        if let Some(q) = alternative {
            plan = plan.alternative(q.0.clone()).py_err()?;
        }
        Ok(Self(plan))
    }

    #[getter]
    fn rule(&self) -> PyRule {
        PyRule(self.0.rule.clone())
    }

    #[getter]
    fn r(&self) -> f64 {
        self.0.r()
    }

    fn estimate_pf(&self, py: Python<'_>) -> PyResult<PyEstimate> {
        let plan = &self.0;
        py.detach(|| montecarlo::estimate_pf(plan)).py_err().map(Into::into)
    }

    fn estimate_pm(&self, py: Python<'_>) -> PyResult<PyEstimate> {
        let plan = &self.0;
        py.detach(|| montecarlo::estimate_pm(plan)).py_err().map(Into::into)
    }

    /// Statistic values of every trial under `"null"` or `"alternative"`.
    fn simulate_values(&self, py: Python<'_>, hypothesis: &str) -> PyResult<Vec<f64>> {
        let hyp = match hypothesis {
            "null" => montecarlo::Hypothesis::Null,
            "alternative" => montecarlo::Hypothesis::Alternative,
            other => {
                return Err(PyValueError::new_err(format!(
                    "hypothesis {other:?}: expected \"null\" or \"alternative\""
                )))
            }
        };
        let plan = &self.0;
        py.detach(|| plan.simulate_values(hyp)).py_err()
    }
}

/// One sample size of a sweep.
#[pyclass(name = "SweepRow", module = "gee", frozen, get_all)]
struct PySweepRow {
    n: u64,
    m: usize,
    r: f64,
    pf: PyEstimate,
    pm: PyEstimate,
    flags: Vec<&'static str>,
}

#[pymethods]
impl PySweepRow {
    fn __repr__(&self) -> String {
        format!(
            "SweepRow(n={}, m={}, pf={}, pm={}, flags={:?})",
            self.n, self.m, self.pf.p_hat, self.pm.p_hat, self.flags
        )
    }
}

/// Estimates both error probabilities for each `n`, with `m` from `m_rule`
/// (`"n^A"` or `"C*n"`).
#[pyfunction]
#[pyo3(signature = (stat, eps, tau, n_list, m_rule = "n^1.5", trials = 100_000, seed = 0, streams = 8))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    stat: &PyStatistic,
    eps: f64,
    tau: f64,
    n_list: Vec<u64>,
    m_rule: &str,
    trials: u64,
    seed: u64,
    streams: usize,
) -> PyResult<Vec<PySweepRow>> {
    let cfg = montecarlo::SweepConfig {
        eps,
        stat: stat.0.clone(),
        tau,
        n_list,
        m_rule: m_rule.parse::<MRule>().py_err()?,
        trials,
        seed,
        streams,
    };
    let rows = py.detach(|| montecarlo::sweep(&cfg)).py_err()?;
    Ok(rows
        .into_iter()
        .map(|row| PySweepRow {
            n: row.n,
            m: row.m,
            r: row.r,
            pf: row.pf.into(),
            pm: row.pm.into(),
            flags: row.flags,
        })
        .collect())
}

/// Draws occupancy counts for `n` samples from `p`.
#[pyfunction]
fn sample_counts(p: &PyPmf, n: u64, seed: u64) -> Vec<u64> {
    use gee_core::montecarlo::{Hypothesis, OccupancySampler, StreamKey};
    let mut rng = StreamKey::new(seed).trial_rng(Hypothesis::Null, 0);
    OccupancySampler::new(&p.0, n).sample_counts(&mut rng)
}

/// 0-based equal-probability cell of `y` under the null quantile function.
#[pyfunction]
fn partition_map(quantile: &Bound<'_, PyAny>, m: usize, y: f64) -> PyResult<usize> {
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let q = |u: f64| match quantile.call1((u,)).and_then(|v| v.extract::<f64>()) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let result = montecarlo::partition_map(q, m, y);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result.py_err()
}

#[pymodule]
fn gee(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPmf>()?;
    m.add_class::<PyStatistic>()?;
    m.add_class::<PyRule>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PySimPlan>()?;
    m.add_class::<PySweepRow>()?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_functional, m)?)?;
    m.add_function(wrap_pyfunction!(occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(make_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_bar, m)?)?;
    m.add_function(wrap_pyfunction!(jf_star, m)?)?;
    m.add_function(wrap_pyfunction!(jm_star, m)?)?;
    m.add_function(wrap_pyfunction!(rate_function, m)?)?;
    m.add_function(wrap_pyfunction!(equalizing_tau, m)?)?;
    m.add_function(wrap_pyfunction!(region_curve, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(exact_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(exact_error_probs, m)?)?;
    m.add_function(wrap_pyfunction!(exact_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sample_counts, m)?)?;
    m.add_function(wrap_pyfunction!(partition_map, m)?)?;
    Ok(())
}
