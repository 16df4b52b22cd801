use gee_core::exponents::{equalizing_tau, jf_star, jm_star, kappa_bar, region_curve};
use gee_core::montecarlo::{estimate_pf, estimate_pm, sweep, SimPlan, SweepConfig};
use gee_core::oracle::{exact_distribution_table, worst_case_bruteforce, StatisticTable};
use gee_core::pmf::{
    biuniform_worst_case, check_fdiv_conditions, chi_square_functional, tv_distance, uniform,
    FdivGrid,
};
use gee_core::statistics::{make_threshold, SeparableStatistic, ThresholdRule};
use log::warn;
use serde_json::{json, Map, Value};

use crate::args::{
    Cli, Command, ExponentsArgs, FdivArgs, FdivKind, OracleArgs, RegionArgs, SimulateArgs,
    StatChoice, StatKind, SweepArgs, TauChoice, WorstCaseArgs,
};
use crate::error::CliError;
use crate::output::{emit, fmt_float, Output, RunMetadata};

/// Tolerance when checking a user threshold against `[0, kappa_bar - 1]`.
const TAU_TOL: f64 = 1e-12;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut params = serde_json::to_value(&cli.command).map_err(CliError::compute)?;
    let name = params
        .as_object_mut()
        .and_then(|o| o.remove("command"))
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let meta = RunMetadata::new(&name, params, !cli.no_timestamp);
    let (meta, output) = match &cli.command {
        Command::Region(a) => (meta, region(a)?),
        Command::Exponents(a) => (meta, exponents(a)?),
        Command::WorstCase(a) => (meta, worst_case(a)?),
        Command::Simulate(a) => (meta.with_rng(a.run.seed), simulate(a)?),
        Command::Sweep(a) => (meta.with_rng(a.run.seed), sweep_cmd(a)?),
        Command::Oracle(a) => (meta, oracle(a)?),
        Command::FdivCheck(a) => (meta, fdiv_check(a)?),
    };
    emit(&meta, &output, cli.out.as_deref())
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

fn build_stat(choice: &StatChoice, m: usize) -> Result<SeparableStatistic, CliError> {
    if !choice.weights.is_empty() && !matches!(choice.stat, StatKind::Extended) {
        return Err(CliError::Usage("--weights only applies to --stat extended".into()));
    }
    let stat = match choice.stat {
        StatKind::Coincidence => SeparableStatistic::Coincidence,
        StatKind::Pearson => SeparableStatistic::Pearson,
        StatKind::PearsonTruncated => SeparableStatistic::PearsonTruncated,
        StatKind::Extended => SeparableStatistic::ExtendedCoincidence {
            weights: choice.weights.clone(),
        },
        StatKind::Weighted => SeparableStatistic::WeightedCoincidence {
            reference: uniform(m)?,
        },
    };
    if !stat.weights_valid() {
        warn!("weights {:?} do not satisfy v_2 = 0, v_l >= 0", choice.weights);
    }
    Ok(stat)
}

fn resolve_tau(choice: &TauChoice, eps: f64) -> Result<f64, CliError> {
    match choice.tau {
        Some(t) => Ok(t),
        None => Ok(equalizing_tau(eps)?),
    }
}

fn region(a: &RegionArgs) -> Result<Output, CliError> {
    let rows = region_curve(a.eps, a.points)?
        .iter()
        .map(|p| vec![fmt_float(p.tau), fmt_float(p.jf), fmt_float(p.jm)])
        .collect();
    Ok(Output::Csv {
        header: vec!["tau", "jf", "jm"],
        rows,
    })
}

fn exponents(a: &ExponentsArgs) -> Result<Output, CliError> {
    let kappa = kappa_bar(a.eps)?;
    let tau = resolve_tau(&a.threshold, a.eps)?;
    let hi = kappa - 1.0;
    if !(-TAU_TOL..=hi + TAU_TOL).contains(&tau) {
        return Err(CliError::Usage(format!("tau = {tau} outside [0, {hi}]")));
    }
    let tau = tau.clamp(0.0, hi);
    Ok(Output::Json(object(json!({
        "eps": a.eps,
        "kappa_bar": kappa,
        "tau": tau,
        "jf": jf_star(tau)?,
        "jm": jm_star(tau, a.eps)?,
    }))))
}

fn worst_case(a: &WorstCaseArgs) -> Result<Output, CliError> {
    let q = biuniform_worst_case(a.m, a.eps)?;
    let u = uniform(a.m)?;
    let chi = chi_square_functional(&q, &u)?;
    let mut out = object(json!({
        "m": a.m,
        "eps": a.eps,
        "pmf": q.probs(),
        "tv_distance": tv_distance(&q, &u)?,
        "chi_square_functional": chi,
        "kappa_bar": kappa_bar(a.eps)?,
    }));
    if a.bruteforce {
        let grid = worst_case_bruteforce(a.m, a.eps, a.mesh)?;
        out.insert(
            "bruteforce".into(),
            json!({
                "mesh": a.mesh,
                "argmin": grid.argmin.probs(),
                "value": grid.value,
                "gap": grid.value - chi,
            }),
        );
    }
    Ok(Output::Json(out))
}

fn simulate(a: &SimulateArgs) -> Result<Output, CliError> {
    let m = match (a.alphabet.m, a.alphabet.m_rule) {
        (Some(m), _) => m,
        (None, Some(rule)) => rule.apply(a.n),
        (None, None) => unreachable!("clap requires one of --m, --m-rule"),
    };
    let stat = build_stat(&a.stat, m)?;
    let tau = resolve_tau(&a.threshold, a.eps)?;
    let plan = SimPlan::new(&stat, tau, a.n, m, a.eps, a.run.trials, a.run.seed)?
        .streams(a.run.streams);
    let pf = estimate_pf(&plan)?;
    let pm = estimate_pm(&plan)?;
    Ok(Output::Json(object(json!({
        "n": a.n,
        "m": m,
        "r": plan.r(),
        "stat": stat.name(),
        "tau": plan.rule.tau,
        "threshold": plan.rule.threshold,
        "pf": pf,
        "pm": pm,
    }))))
}

fn sweep_cmd(a: &SweepArgs) -> Result<Output, CliError> {
    // a weighted reference is tied to one alphabet size, but m varies with n
    if matches!(a.stat.stat, StatKind::Weighted) {
        return Err(CliError::Usage(
            "sweep supports the symmetric statistics only; use simulate for weighted".into(),
        ));
    }
    let stat = build_stat(&a.stat, 2)?;
    let cfg = SweepConfig {
        eps: a.eps,
        stat,
        tau: resolve_tau(&a.threshold, a.eps)?,
        n_list: a.n.clone(),
        m_rule: a.m_rule,
        trials: a.run.trials,
        seed: a.run.seed,
        streams: a.run.streams,
    };
    let rows = sweep(&cfg)?
        .into_iter()
        .map(|row| {
            vec![
                row.n.to_string(),
                row.m.to_string(),
                fmt_float(row.r),
                fmt_float(row.pf.p_hat),
                fmt_float(row.pf.ci95_halfwidth),
                fmt_float(row.pm.p_hat),
                fmt_float(row.pm.ci95_halfwidth),
                row.flags.join(";"),
            ]
        })
        .collect();
    Ok(Output::Csv {
        header: vec!["n", "m", "r", "pf_hat", "pf_ci", "pm_hat", "pm_ci", "flags"],
        rows,
    })
}

fn oracle(a: &OracleArgs) -> Result<Output, CliError> {
    let stat = build_stat(&a.stat, a.m)?;
    let t = &a.threshold;
    let rule = match (t.tau_abs, a.eps) {
        (Some(x), _) => ThresholdRule::absolute(stat.clone(), a.n, a.m, x),
        (None, Some(eps)) => {
            let tau = match t.tau {
                Some(tau) => tau,
                None => equalizing_tau(eps)?,
            };
            make_threshold(&stat, tau, a.n, a.m, eps)?
        }
        (None, None) => {
            return Err(CliError::Usage("--tau and --equalize need --eps".into()));
        }
    };
    let budget = a.budget as u128;
    let table = StatisticTable::from_statistic(&stat, a.m, a.n);
    let under_null = exact_distribution_table(&table, &uniform(a.m)?, budget)?;
    let mut out = object(json!({
        "n": a.n,
        "m": a.m,
        "stat": stat.name(),
        "tau": rule.tau,
        "threshold": rule.threshold,
        "pf": under_null.reject_probability(&rule).min(1.0),
        "null_mean": under_null.mean(),
        "null_support_size": under_null.support.len(),
    }));
    if let Some(eps) = a.eps {
        let q = biuniform_worst_case(a.m, eps)?;
        let alt = exact_distribution_table(&table, &q, budget)?;
        out.insert("eps".into(), json!(eps));
        out.insert(
            "pm".into(),
            json!((1.0 - alt.reject_probability(&rule)).max(0.0)),
        );
    }
    Ok(Output::Json(out))
}

fn kl(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x * x.ln() - (x - 1.0)
    }
}

fn fdiv_check(a: &FdivArgs) -> Result<Output, CliError> {
    let grid = FdivGrid {
        midpoint_points: a.midpoint_points,
        x_max: a.x_max,
        quadratic_points: a.quadratic_points,
    };
    if a.x_max.is_nan() || a.x_max <= 1.0 {
        return Err(CliError::Usage("--x-max must exceed 1".into()));
    }
    let report = match a.f {
        FdivKind::Kl => check_fdiv_conditions(kl, &grid)?,
        FdivKind::Chi2 => check_fdiv_conditions(|x| (x - 1.0) * (x - 1.0), &grid)?,
        FdivKind::TvLike => check_fdiv_conditions(|x| 0.5 * (x - 1.0).abs(), &grid)?,
    };
    Ok(Output::Json(object(json!({
        "f": a.f,
        "cond1": report.midpoint_holds,
        "cond2": report.quadratic_holds,
        "midpoint_witness": report.midpoint_witness,
        "alpha": report.alpha,
    }))))
}
