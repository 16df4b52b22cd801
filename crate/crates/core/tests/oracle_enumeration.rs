mod common;

use common::{enumerate_law, RefStat};
use gee_core::oracle::{exact_distribution, exact_error_probs, exact_expectation};
use gee_core::pmf::{biuniform_worst_case, uniform, Pmf};
use gee_core::statistics::{coincidence_mean_uniform, make_threshold, SeparableStatistic};

fn pairs(p: &Pmf) -> Vec<(SeparableStatistic, RefStat)> {
    let v = vec![0.0, 2.0, 0.5];
    vec![
        (SeparableStatistic::Coincidence, RefStat::Coincidence),
        (SeparableStatistic::Pearson, RefStat::Pearson),
        (SeparableStatistic::PearsonTruncated, RefStat::PearsonTruncated),
        (
            SeparableStatistic::ExtendedCoincidence { weights: v.clone() },
            RefStat::Extended(v),
        ),
        (
            SeparableStatistic::WeightedCoincidence {
                reference: p.clone(),
            },
            RefStat::Weighted(p.probs().to_vec()),
        ),
    ]
}

fn laws() -> Vec<Pmf> {
    let mut out = Vec::new();
    for m in 2..=4 {
        out.push(uniform(m).unwrap());
        out.push(biuniform_worst_case(m, 0.25).unwrap());
    }
    out.push(Pmf::new(vec![0.5, 0.3, 0.2]).unwrap());
    out.push(Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap());
    out.push(Pmf::new(vec![0.6, 0.4, 0.0]).unwrap());
    out
}

#[test]
fn dp_matches_enumeration() {
    for p in laws() {
        for n in 1..=5u32 {
            for (stat, reference) in pairs(&p) {
                let dp = exact_distribution(&stat, &p, n as u64).unwrap();
                let brute = enumerate_law(&reference, p.probs(), n);
                assert_eq!(
                    dp.support.len(),
                    brute.len(),
                    "{} n={n} p={:?}",
                    stat.name(),
                    p.probs()
                );
                for ((v, w), (bv, bw)) in dp.support.iter().zip(&dp.probs).zip(brute.values()) {
                    assert!((v - bv).abs() < 1e-9, "{}: value {v} vs {bv}", stat.name());
                    assert!((w - bw).abs() < 1e-12, "{}: mass {w} vs {bw}", stat.name());
                }
                let mean = exact_expectation(&stat, &p, n as u64);
                assert!((mean - dp.mean()).abs() < 1e-10, "{}", stat.name());
            }
        }
    }
}

#[test]
fn coincidence_mean_closed_form() {
    let stat = SeparableStatistic::Coincidence;
    for n in [1u64, 2, 7, 50, 199, 200] {
        for m in [2usize, 3, 10, 150, 1000, 10_000] {
            let u = uniform(m).unwrap();
            let expected = -(n as f64) * (1.0 - 1.0 / m as f64).powi(n as i32 - 1);
            let tol = 1e-12 * (1.0 + expected.abs());
            assert!((exact_expectation(&stat, &u, n) - expected).abs() < tol, "n={n} m={m}");
            assert!((coincidence_mean_uniform(n, m) - expected).abs() < tol);
        }
    }
    for &(n, m) in &[(7u64, 3usize), (40, 10), (30, 200)] {
        let u = uniform(m).unwrap();
        let dp = exact_distribution(&stat, &u, n).unwrap();
        let expected = coincidence_mean_uniform(n, m);
        assert!((dp.mean() - expected).abs() < 1e-10 * (1.0 + expected.abs()), "n={n} m={m}");
    }
}

#[test]
fn error_probs_match_enumeration() {
    let (n, m, eps) = (5u64, 4usize, 0.25);
    let null = uniform(m).unwrap();
    let alt = biuniform_worst_case(m, eps).unwrap();
    for tau in [0.0, 0.1, 0.2, 0.25] {
        let rule = make_threshold(&SeparableStatistic::Coincidence, tau, n, m, eps).unwrap();
        let (pf, pm) = exact_error_probs(&rule, &null, &alt).unwrap();
        let reject = |law: &Pmf| -> f64 {
            enumerate_law(&RefStat::Coincidence, law.probs(), n as u32)
                .values()
                .filter(|(v, _)| rule.rejects(*v))
                .map(|(_, w)| w)
                .sum()
        };
        assert!((pf - reject(&null)).abs() < 1e-12);
        assert!((pm - (1.0 - reject(&alt))).abs() < 1e-12);
    }
}
