"""Smoke test for the `gee` extension module.

Build and install first:
    pip install maturin
    (cd crates/python && maturin build --release -o dist)
    pip install crates/python/dist/gee-*.whl
then run `python python/smoke_test.py`.
"""

import math

import gee


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    # exponents
    close(gee.kappa_bar(0.25), 1.25, 1e-15)
    close(gee.kappa_bar(0.6), 2.5, 1e-15)
    tau = gee.equalizing_tau(0.45)
    close(tau, 0.365183, 1e-5)
    close(gee.jf_star(tau), 0.029889, 1e-5)
    close(gee.jf_star(tau), gee.jm_star(tau, 0.45), 1e-12)
    close(gee.rate_function(0.2, 1.49), gee.jm_star(0.2, 0.35), 1e-12)
    curve = gee.region_curve(0.35, 11)
    assert len(curve) == 11 and curve[0][1] == 0.0 and curve[-1][2] == 0.0

    # distributions
    q = gee.Pmf.biuniform_worst_case(4, 0.25)
    u = gee.Pmf.uniform(4)
    assert q.probs == [0.375, 0.375, 0.125, 0.125]
    close(gee.tv_distance(q, u), 0.25, 1e-15)
    close(gee.chi_square_functional(q, u), 1.25, 1e-12)
    try:
        gee.Pmf([0.5, 0.6])
    except ValueError:
        pass
    else:
        raise AssertionError("unnormalized pmf accepted")

    # statistics
    counts = [3, 0, 1, 1, 2]
    assert gee.occupancy(counts) == [1, 2, 1, 1]
    coinc = gee.Statistic.coincidence()
    assert coinc.evaluate_counts(counts) == -2.0
    pearson = gee.Statistic.pearson()
    close(pearson.evaluate_counts(counts), sum((c - 7 / 5) ** 2 for c in counts), 1e-12)

    # exact oracle: three draws on three symbols, all distinct w.p. 6/27
    support, probs = gee.exact_distribution(coinc, gee.Pmf.uniform(3), 3)
    assert support == [-3.0, -1.0, 0.0]
    close(probs[0], 6 / 27, 1e-15)
    rule = gee.ThresholdRule.absolute(coinc, 3, 3, 0.0)
    pf, _ = gee.exact_error_probs(rule, gee.Pmf.uniform(3), gee.Pmf.uniform(3))
    close(pf, 3 / 27, 1e-15)

    # Monte Carlo against the exact law
    plan = gee.SimPlan(coinc, 0.2, 12, 30, 0.35, trials=20000, seed=5)
    pf_exact, pm_exact = gee.exact_error_probs(
        plan.rule, gee.Pmf.uniform(30), gee.Pmf.biuniform_worst_case(30, 0.35)
    )
    for est, exact in ((plan.estimate_pf(), pf_exact), (plan.estimate_pm(), pm_exact)):
        sigma = math.sqrt(exact * (1 - exact) / est.trials)
        assert abs(est.p_hat - exact) <= 4 * sigma, (est, exact)
    one = gee.SimPlan(coinc, 0.2, 12, 30, 0.35, trials=2000, seed=5, streams=1)
    many = gee.SimPlan(coinc, 0.2, 12, 30, 0.35, trials=2000, seed=5, streams=7)
    assert one.simulate_values("null") == many.simulate_values("null")

    rows = gee.sweep(coinc, 0.45, tau, [50, 100], m_rule="n^1.5", trials=2000, seed=1)
    assert [r.m for r in rows] == [354, 1000]
    assert all(0.0 < r.pf.p_hat < 1.0 for r in rows)

    slope, _ = gee.estimate_exponent([(1.0, math.exp(-0.5)), (2.0, math.exp(-1.0))])
    close(slope, 0.5, 1e-12)

    assert sum(gee.sample_counts(gee.Pmf.uniform(10), 100, seed=3)) == 100
    assert gee.partition_map(lambda v: v, 4, 0.30) == 1

    print("gee", gee.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
