//! Monte Carlo estimation of false-alarm and missed-detection
//! probabilities.
//!
//! Every trial draws from its own ChaCha8 stream, selected from the key
//! derived from the seed by `(trial << 1) | hypothesis`. Trials are split
//! into `streams` contiguous blocks that run in parallel and whose exceed
//! counts are summed, so results depend only on the seed and never on the
//! number of blocks or worker threads. Plans that share a seed also share
//! their sampled trials, which makes comparisons across thresholds or
//! statistics paired.

use log::warn;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::{biuniform_worst_case, uniform, Pmf};
use crate::statistics::{
    make_threshold, occupancy, OccupancyFingerprint, SeparableStatistic, ThresholdRule,
};

/// Identifier of the random stream layout, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9), stream = 2*trial + hypothesis";

/// Which law a trial samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alternative,
}

impl Hypothesis {
    fn stream_bit(self) -> u64 {
        match self {
            Self::Null => 0,
            Self::Alternative => 1,
        }
    }
}

/// Seed-derived key shared by every trial of a run.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed).get_seed())
    }

    /// Generator for one trial.
    pub fn trial_rng(&self, hypothesis: Hypothesis, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream((trial << 1) | hypothesis.stream_bit());
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Walker/Vose alias table.
#[derive(Debug, Clone)]
struct AliasTable {
    accept: Vec<f64>,
    alias: Vec<u32>,
    /// Every bucket accepts, so the coin flip can be skipped.
    flat: bool,
}

impl AliasTable {
    fn new(p: &Pmf) -> Self {
        let m = p.len();
        let mut scaled: Vec<f64> = p.probs().iter().map(|&x| x * m as f64).collect();
        let mut accept = vec![1.0; m];
        let mut alias: Vec<u32> = (0..m as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..m).partition(|&j| scaled[j] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            accept[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        let flat = p.is_uniform();
        Self {
            accept,
            alias,
            flat,
        }
    }

    #[inline]
    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let j = rng.random_range(0..self.accept.len() as u32) as usize;
        if self.flat || rng.random::<f64>() < self.accept[j] {
            j
        } else {
            self.alias[j] as usize
        }
    }
}

/// How a trial's per-symbol counts are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// `n` alias-table draws, `O(n)` per trial.
    Alias,
    /// One binomial per symbol conditioned on what is left, `O(m)` per trial.
    BinomialChain,
}

impl SamplerKind {
    /// The cheaper path for `n` draws on a law with `support` symbols.
    pub fn cheapest(n: u64, support: usize) -> Self {
        // a binomial variate costs a handful of uniform draws
        if 4 * support as u64 + 16 < n {
            Self::BinomialChain
        } else {
            Self::Alias
        }
    }
}

/// Reusable per-worker state for sampling counts.
#[derive(Debug, Clone)]
pub struct OccupancySampler {
    n: u64,
    kind: SamplerKind,
    alias: AliasTable,
    /// `p_j / sum_{i >= j} p_i`.
    conditional: Vec<f64>,
    counts: Vec<u32>,
    touched: Vec<u32>,
}

impl OccupancySampler {
    pub fn new(p: &Pmf, n: u64) -> Self {
        Self::with_kind(p, n, SamplerKind::cheapest(n, p.support_size()))
    }

    pub fn with_kind(p: &Pmf, n: u64, kind: SamplerKind) -> Self {
        let mut tail = 0.0;
        let mut conditional = vec![0.0; p.len()];
        for j in (0..p.len()).rev() {
            tail += p[j];
            conditional[j] = if tail > 0.0 { (p[j] / tail).min(1.0) } else { 0.0 };
        }
        Self {
            n,
            kind,
            alias: AliasTable::new(p),
            conditional,
            counts: vec![0; p.len()],
            touched: Vec::new(),
        }
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    /// Draws one sample and calls `visit(symbol, count)` for every symbol
    /// with a positive count, in a deterministic order.
    pub fn sample_with<R: Rng, F: FnMut(usize, u64)>(&mut self, rng: &mut R, mut visit: F) {
        match self.kind {
            SamplerKind::Alias => {
                for _ in 0..self.n {
                    let j = self.alias.sample(rng);
                    if self.counts[j] == 0 {
                        self.touched.push(j as u32);
                    }
                    self.counts[j] += 1;
                }
                for &j in &self.touched {
                    let j = j as usize;
                    visit(j, self.counts[j] as u64);
                    self.counts[j] = 0;
                }
                self.touched.clear();
            }
            SamplerKind::BinomialChain => {
                let mut left = self.n;
                for (j, &q) in self.conditional.iter().enumerate() {
                    if left == 0 {
                        break;
                    }
                    let c = if q >= 1.0 {
                        left
                    } else if q <= 0.0 {
                        0
                    } else {
                        Binomial::new(left, q)
                            .expect("conditional probability lies in (0, 1)")
                            .sample(rng)
                    };
                    if c > 0 {
                        visit(j, c);
                        left -= c;
                    }
                }
            }
        }
    }

    /// Draws one sample and returns its full count vector.
    pub fn sample_counts<R: Rng>(&mut self, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.counts.len()];
        self.sample_with(rng, |j, c| counts[j] = c);
        counts
    }
}

/// Occupancy fingerprint of `n` i.i.d. draws from `p`.
pub fn sample_occupancy<R: Rng>(p: &Pmf, n: u64, rng: &mut R) -> OccupancyFingerprint {
    let counts = OccupancySampler::new(p, n).sample_counts(rng);
    occupancy(&counts).expect("alphabet has at least two symbols")
}

/// Evaluates a statistic from the touched symbols only:
/// `S = shift + sum_j f_j(0) + sum_{c_j > 0} (f_j(c_j) - f_j(0))`.
#[derive(Debug, Clone)]
struct DeltaEvaluator<'a> {
    stat: &'a SeparableStatistic,
    n: u64,
    base: f64,
    /// `f(l) - f(0)` for symmetric statistics.
    symmetric: Option<Vec<f64>>,
}

impl<'a> DeltaEvaluator<'a> {
    fn new(stat: &'a SeparableStatistic, n: u64, m: usize) -> Self {
        let symmetric = stat.is_symmetric().then(|| {
            let f0 = stat.symbol_value(0, 0, n);
            (0..=n).map(|l| stat.symbol_value(0, l, n) - f0).collect()
        });
        let zeros: f64 = if stat.is_symmetric() {
            m as f64 * stat.symbol_value(0, 0, n)
        } else {
            (0..m).map(|j| stat.symbol_value(j, 0, n)).sum()
        };
        Self {
            stat,
            n,
            base: zeros + stat.shift(n, m),
            symmetric,
        }
    }

    #[inline]
    fn delta(&self, j: usize, c: u64) -> f64 {
        match &self.symmetric {
            Some(row) => row[c as usize],
            None => self.stat.symbol_value(j, c, self.n) - self.stat.symbol_value(j, 0, self.n),
        }
    }
}

/// A Monte Carlo frequency with its normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub p_hat: f64,
    pub exceed_count: u64,
    pub trials: u64,
    pub ci95_halfwidth: f64,
}

impl ErrorEstimate {
    pub fn from_counts(exceed_count: u64, trials: u64) -> Self {
        let p_hat = exceed_count as f64 / trials as f64;
        let ci95_halfwidth = if exceed_count == 0 || exceed_count == trials {
            0.0
        } else {
            1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
        };
        Self {
            p_hat,
            exceed_count,
            trials,
            ci95_halfwidth,
        }
    }

    /// Standard error `sqrt(p(1-p)/trials)` at a given true `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Everything needed to estimate the error probabilities of one test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPlan {
    pub n: u64,
    pub m: usize,
    pub eps: f64,
    pub rule: ThresholdRule,
    /// Law used for missed detection; the bi-uniform worst case by default.
    pub alternative: Pmf,
    pub trials: u64,
    pub seed: u64,
    pub streams: usize,
}

impl SimPlan {
    /// Plan for `stat` at normalized threshold `tau`, against the worst-case
    /// alternative at distance `eps`.
    pub fn new(
        stat: &SeparableStatistic,
        tau: f64,
        n: u64,
        m: usize,
        eps: f64,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let rule = make_threshold(stat, tau, n, m, eps)?;
        Self::with_rule(rule, eps, trials, seed)
    }

    /// Plan for an explicit rule against the worst-case alternative.
    pub fn with_rule(rule: ThresholdRule, eps: f64, trials: u64, seed: u64) -> Result<Self> {
        let plan = Self {
            n: rule.n,
            m: rule.m,
            eps,
            alternative: biuniform_worst_case(rule.m, eps)?,
            rule,
            trials,
            seed,
            streams: 8,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn streams(mut self, streams: usize) -> Self {
        self.streams = streams;
        self
    }

    pub fn alternative(mut self, q: Pmf) -> Result<Self> {
        if q.len() != self.m {
            return Err(Error::Dimension {
                left: q.len(),
                right: self.m,
            });
        }
        self.alternative = q;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if self.m < 2 {
            return Err(Error::InvalidAlphabet(self.m));
        }
        if self.trials < 1 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.streams < 1 {
            return Err(Error::InvalidInput("streams must be at least 1".into()));
        }
        Ok(())
    }

    /// Sampling law under `hypothesis`.
    pub fn law(&self, hypothesis: Hypothesis) -> Result<Pmf> {
        match hypothesis {
            Hypothesis::Null => uniform(self.m),
            Hypothesis::Alternative => Ok(self.alternative.clone()),
        }
    }

    /// `r = n^2/m`.
    pub fn r(&self) -> f64 {
        (self.n * self.n) as f64 / self.m as f64
    }

    fn blocks(&self) -> Vec<std::ops::Range<u64>> {
        let s = self.streams as u64;
        (0..s)
            .map(|b| b * self.trials / s..(b + 1) * self.trials / s)
            .filter(|r| !r.is_empty())
            .collect()
    }

    /// Runs `f` on the statistic value of every trial of one block.
    fn run_block<F: FnMut(f64)>(
        &self,
        law: &Pmf,
        hypothesis: Hypothesis,
        trials: std::ops::Range<u64>,
        mut f: F,
    ) {
        let key = StreamKey::new(self.seed);
        let mut sampler = OccupancySampler::new(law, self.n);
        let eval = DeltaEvaluator::new(&self.rule.stat, self.n, self.m);
        for t in trials {
            let mut rng = key.trial_rng(hypothesis, t);
            let mut value = eval.base;
            sampler.sample_with(&mut rng, |j, c| value += eval.delta(j, c));
            f(value);
        }
    }

    /// Number of trials under `hypothesis` in which the rule rejects.
    fn count_rejections(&self, hypothesis: Hypothesis) -> Result<u64> {
        self.validate()?;
        let law = self.law(hypothesis)?;
        Ok(self
            .blocks()
            .into_par_iter()
            .map(|block| {
                let mut hits = 0u64;
                self.run_block(&law, hypothesis, block, |v| {
                    hits += self.rule.rejects(v) as u64;
                });
                hits
            })
            .sum())
    }

    /// Statistic values of every trial, in trial order.
    pub fn simulate_values(&self, hypothesis: Hypothesis) -> Result<Vec<f64>> {
        self.validate()?;
        let law = self.law(hypothesis)?;
        let chunks: Vec<Vec<f64>> = self
            .blocks()
            .into_par_iter()
            .map(|block| {
                let mut out = Vec::with_capacity((block.end - block.start) as usize);
                self.run_block(&law, hypothesis, block, |v| out.push(v));
                out
            })
            .collect();
        Ok(chunks.concat())
    }
}

/// Frequency of rejection under the uniform null.
pub fn estimate_pf(plan: &SimPlan) -> Result<ErrorEstimate> {
    let hits = plan.count_rejections(Hypothesis::Null)?;
    Ok(ErrorEstimate::from_counts(hits, plan.trials))
}

/// Frequency of acceptance under the plan's alternative.
pub fn estimate_pm(plan: &SimPlan) -> Result<ErrorEstimate> {
    let hits = plan.count_rejections(Hypothesis::Alternative)?;
    Ok(ErrorEstimate::from_counts(plan.trials - hits, plan.trials))
}

/// How the alphabet size grows with the sample size in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "coef", rename_all = "snake_case")]
pub enum MRule {
    /// `m = ceil(n^a)`.
    Power(f64),
    /// `m = ceil(c n)`.
    Linear(f64),
}

impl MRule {
    pub fn apply(&self, n: u64) -> usize {
        let x = match *self {
            Self::Power(a) => (n as f64).powf(a),
            Self::Linear(c) => c * n as f64,
        };
        // values such as 4^1.5 may land a hair above the integer
        let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
        snapped as usize
    }
}

impl std::str::FromStr for MRule {
    type Err = Error;

    /// Parses `n^A` or `C*n`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("m-rule {s:?}: expected n^A or C*n"));
        if let Some(a) = s.strip_prefix("n^") {
            let a: f64 = a.parse().map_err(|_| bad())?;
            return if a.is_finite() && a > 0.0 {
                Ok(Self::Power(a))
            } else {
                Err(bad())
            };
        }
        if let Some(c) = s.strip_suffix("*n") {
            let c: f64 = c.parse().map_err(|_| bad())?;
            return if c.is_finite() && c > 0.0 {
                Ok(Self::Linear(c))
            } else {
                Err(bad())
            };
        }
        Err(bad())
    }
}

impl std::fmt::Display for MRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Power(a) => write!(f, "n^{a}"),
            Self::Linear(c) => write!(f, "{c}*n"),
        }
    }
}

/// Settings for a sweep over sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub eps: f64,
    pub stat: SeparableStatistic,
    pub tau: f64,
    pub n_list: Vec<u64>,
    pub m_rule: MRule,
    pub trials: u64,
    pub seed: u64,
    pub streams: usize,
}

/// One sample size of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub m: usize,
    pub r: f64,
    pub pf: ErrorEstimate,
    pub pm: ErrorEstimate,
    /// `pf_zero`/`pm_zero` when nothing was observed, `pf_few`/`pm_few` when
    /// fewer than 20 events were observed.
    pub flags: Vec<&'static str>,
}

/// Fewer observed events than this flags the row.
pub const FEW_EVENTS: u64 = 20;

/// Seed used for the row with sample size `n`.
pub fn row_seed(seed: u64, n: u64) -> u64 {
    splitmix64(seed ^ splitmix64(n))
}

/// Estimates both error probabilities for every `n`, in increasing order.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut ns = config.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let m = config.m_rule.apply(n);
            let plan = SimPlan::new(
                &config.stat,
                config.tau,
                n,
                m,
                config.eps,
                config.trials,
                row_seed(config.seed, n),
            )?
            .streams(config.streams);
            let pf = estimate_pf(&plan)?;
            let pm = estimate_pm(&plan)?;
            let mut flags = Vec::new();
            for (name, est, zero, few) in [
                ("pf", &pf, "pf_zero", "pf_few"),
                ("pm", &pm, "pm_zero", "pm_few"),
            ] {
                if est.exceed_count == 0 {
                    flags.push(zero);
                } else if est.exceed_count < FEW_EVENTS {
                    flags.push(few);
                }
                if est.exceed_count < FEW_EVENTS {
                    warn!(
                        "n={n}: only {} {name} events in {} trials",
                        est.exceed_count, est.trials
                    );
                }
            }
            Ok(SweepRow {
                n,
                m,
                r: plan.r(),
                pf,
                pm,
                flags,
            })
        })
        .collect()
}

/// Maps continuous observations to equal-probability cells of the null.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMap {
    /// Interior cut points `Q(j/m)`, `j = 1..m-1`.
    cuts: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl PartitionMap {
    /// Builds the cells from the null quantile function `quantile`.
    pub fn new<Q: Fn(f64) -> f64>(quantile: Q, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidAlphabet(m));
        }
        let cuts: Vec<f64> = (1..m).map(|j| quantile(j as f64 / m as f64)).collect();
        if cuts.iter().any(|c| c.is_nan()) || cuts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "quantile function must be monotone and defined on (0, 1)".into(),
            ));
        }
        Ok(Self {
            cuts,
            lower: quantile(0.0),
            upper: quantile(1.0),
        })
    }

    pub fn m(&self) -> usize {
        self.cuts.len() + 1
    }

    /// 0-based cell containing `y`: cell `j` is `[Q(j/m), Q((j+1)/m))`, the
    /// last cell also containing its right end.
    pub fn map(&self, y: f64) -> Result<usize> {
        let below = !(self.lower.is_nan() || y >= self.lower);
        let above = !(self.upper.is_nan() || y <= self.upper);
        if y.is_nan() || below || above {
            return Err(Error::Domain(y));
        }
        Ok(self.cuts.partition_point(|&c| c <= y))
    }
}

/// `partition_map(quantile, m)(y)` in one call.
pub fn partition_map<Q: Fn(f64) -> f64>(quantile: Q, m: usize, y: f64) -> Result<usize> {
    PartitionMap::new(quantile, m)?.map(y)
}
