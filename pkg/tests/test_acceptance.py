"""Acceptance suite: one PASS/FAIL line per criterion in the terminal summary.

Run with ``pytest tests/test_acceptance.py -v``. Benchmarks are computed once
per session (see ``conftest.py``) and shared by criteria 2-7.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES, ALPHA, SEED, mp_normal_quantile, quadrature_sensitivity
from cvarsens.config import build_model, load_config
from cvarsens.harness import (PUBLISHED_BENCHMARKS, PUBLISHED_VAR_SINGLE_ASSET, StudyConfig, convergence_study,
                              run_replication)
from cvarsens.lowdisc import check_net_property, scramble_linear, scramble_nested, sobol_net
from cvarsens.models import (SingleAssetConfig, bs_value, delta_gamma_loss, equicorrelated, matrix_factor,
                             pca_factor, portfolio_loss, single_asset_loss, single_asset_var)
from cvarsens.rng import derive_seed
from cvarsens.special import inv_normal_cdf

M_VALUES = tuple(range(10, 17))


def record(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def within_se(bench, target, k=3.0):
    z = (bench.value - target) / bench.se
    return abs(z) <= k, z


# ---------------------------------------------------------------------------
# 1-5: published numbers


def test_criterion_1_closed_form_var():
    v = single_asset_var(SingleAssetConfig(), ALPHA)
    record("criterion 1 (closed-form VaR)", round(v, 3) == PUBLISHED_VAR_SINGLE_ASSET,
           f"v = {v:.7f}, target {PUBLISHED_VAR_SINGLE_ASSET}")


def _bench_line(bench, target):
    ok, z = within_se(bench, target)
    return ok, f"{bench.value:.7f} +/- {bench.se:.2g} vs {target} (z = {z:+.2f}, {bench.source})"


def test_criterion_2_case1_benchmark(bench_case1):
    ok, detail = _bench_line(bench_case1, PUBLISHED_BENCHMARKS["case1"])
    record("criterion 2 (case 1 benchmark)", ok, detail)


def test_criterion_3_case2_benchmark(bench_case2):
    ok, detail = _bench_line(bench_case2, PUBLISHED_BENCHMARKS["case2"])
    record("criterion 3 (case 2 benchmark)", ok, detail)


def test_criterion_4_portfolio_a_benchmark(bench_a):
    ok, detail = _bench_line(bench_a, PUBLISHED_BENCHMARKS["portfolioA"])
    record("criterion 4 (portfolio A benchmark)", ok, detail)


def test_criterion_5_portfolio_b_benchmark(bench_b):
    ok, detail = _bench_line(bench_b, PUBLISHED_BENCHMARKS["portfolioB"])
    record("criterion 5 (portfolio B benchmark)", ok, detail)


@pytest.mark.parametrize("case, theta", [("case1", "S0"), ("case2", "r")])
def test_supplement_single_asset_benchmark_vs_quadrature(case, theta, request):
    # independent 1-D quadrature of the exact sensitivity
    bench = request.getfixturevalue(f"bench_{case}")
    truth = quadrature_sensitivity(theta)
    ok, z = within_se(bench, truth)
    record(f"supplement {case} vs quadrature", ok,
           f"{bench.value:.9f} vs {truth:.9f} (z = {z:+.2f})")


@pytest.mark.parametrize("case", ["case1", "case2"])
def test_supplement_single_asset_benchmark_at_published_precision(case, request):
    bench = request.getfixturevalue(f"bench_{case}")
    target = PUBLISHED_BENCHMARKS[case]
    record(f"supplement {case} at 4 decimals", round(bench.value, 4) == target,
           f"round({bench.value:.7f}, 4) = {round(bench.value, 4)} vs {target}")


# ---------------------------------------------------------------------------
# 6-7: rates


@pytest.fixture(scope="module")
def case1_study(case1_model, bench_case1):
    cfg = StudyConfig(case1_model, ALPHA, ("mc", "rqmc-linear", "rqmc-nested", "rqmc2-linear"), M_VALUES,
                      R=30, seed=SEED, benchmark=bench_case1)
    return convergence_study(cfg, diagnostics=True)


@pytest.fixture(scope="module")
def case2_study(case2_model, bench_case2):
    cfg = StudyConfig(case2_model, ALPHA, ("mc", "rqmc-linear", "rqmc-nested", "rqmc2-linear"), M_VALUES,
                      R=30, seed=SEED, benchmark=bench_case2)
    return convergence_study(cfg, diagnostics=True)


@pytest.fixture(scope="module")
def portfolio_a_study(portfolio_a, bench_a):
    cfg = StudyConfig(portfolio_a, ALPHA, ("mc", "rqmc-linear"), M_VALUES, R=30, seed=SEED, benchmark=bench_a)
    return convergence_study(cfg)


def test_criterion_6_rate_separation_d1(case1_study):
    rq, mc = case1_study.slope("rqmc-linear"), case1_study.slope("mc")
    ok = rq <= -0.85 and -0.65 <= mc <= -0.35
    others = ", ".join(f"{m} {case1_study.slope(m):.3f}" for m in ("rqmc-nested", "rqmc2-linear"))
    record("criterion 6 (rate separation, d=1)", ok,
           f"rqmc-linear RMSE slope {rq:.3f} (<= -0.85), mc {mc:.3f} (in [-0.65, -0.35]); {others}")


def test_criterion_7_rate_degradation_d10(portfolio_a_study):
    rep = portfolio_a_study
    rq, mc = rep.slope("rqmc-linear"), rep.slope("mc")
    pairs = [(a.m, a.rmse, b.rmse) for a, b in zip(rep.rows("rqmc-linear"), rep.rows("mc")) if a.m >= 12]
    ordered = all(r < m for _, r, m in pairs)
    ok = -1.0 < rq < mc and ordered
    worst = min(m / r for _, r, m in pairs)
    record("criterion 7 (rate degradation, d=10)", ok,
           f"slopes rqmc {rq:.3f}, mc {mc:.3f}; RQMC < MC at m>=12: {ordered} (min ratio {worst:.2f})")


# ---------------------------------------------------------------------------
# 8: property suite


@pytest.mark.parametrize("scheme", ["linear", "nested"])
def test_criterion_8_net_property(scheme):
    fn = scramble_linear if scheme == "linear" else scramble_nested
    bad = [(d, m, s) for d in (1, 2) for m in range(1, 9)
           for s in range(50) if not check_net_property(fn(sobol_net(m, d), derive_seed(s, "acc")), 0, m, d)]
    record(f"criterion 8 net property ({scheme})", not bad,
           f"{2 * 8 * 50 - len(bad)}/{2 * 8 * 50} scrambled nets are (0,m,d)-nets, d<=2, m<=8, 50 seeds")


@pytest.mark.parametrize("scheme", ["linear", "nested"])
def test_criterion_8_marginal_uniformity(scheme):
    fn = scramble_linear if scheme == "linear" else scramble_nested
    net = sobol_net(6, 2)
    pts = np.array([fn(net, derive_seed(s, "chi")).values[[0, 9, 63]] for s in range(1000)])
    pvals = []
    for i in range(3):
        for j in range(2):
            counts = np.histogram(pts[:, i, j], bins=20, range=(0, 1))[0]
            pvals.append(stats.chisquare(counts).pvalue)
    # Bonferroni over the six tests at the 1% level
    ok = min(pvals) > 0.01 / len(pvals)
    record(f"criterion 8 marginal chi-square ({scheme})", ok, f"min p-value {min(pvals):.3g} over 6 tests")


@pytest.mark.parametrize("case, theta", [("case1", "S0"), ("case2", "r")])
def test_criterion_8_oracle_unbiased(case, theta, request):
    model = request.getfixturevalue(f"{case}_model")
    truth = quadrature_sensitivity(theta)
    est = np.array([run_replication(model, "rqmc2-linear", ALPHA, 8, derive_seed(s, "unbiased")).sens
                    for s in range(200)])
    se = est.std(ddof=1) / math.sqrt(est.size)
    z = (est.mean() - truth) / se
    record(f"criterion 8 oracle unbiasedness ({case})", abs(z) <= 3,
           f"mean {est.mean():.7f} vs {truth:.7f}, z = {z:+.2f} over 200 scramblings at n=256")


def test_criterion_8_bound_and_ties(case1_study, case2_study):
    recs = [r for rep in (case1_study, case2_study) for r in rep.records if r.method != "mc"]
    bound_ok = all(r.bound_ok for r in recs)
    ties = max(r.max_ties for r in recs)
    record("criterion 8 CDF gap bound", bound_ok, f"holds on {sum(bool(r.bound_ok) for r in recs)}/{len(recs)}"
           " RQMC replications of the single-asset studies")
    record("criterion 8 tie census", ties == 1, f"max tie multiplicity {ties} over {len(recs)} samples")


def _fd(f, x, h):
    return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)


def test_criterion_8_ipa_vs_finite_difference(portfolio_a, portfolio_b):
    rng = np.random.default_rng(SEED)
    worst = {}
    for theta in ("S0", "r"):
        cfg = SingleAssetConfig(theta=theta)
        u = rng.uniform(0.001, 0.999, 100)
        x0 = getattr(cfg, theta)
        fd = _fd(lambda x: single_asset_loss(replace(cfg, **{theta: x}), u)[0], x0, 1e-4 * max(x0, 1.0))
        worst[f"single-{theta}"] = np.max(np.abs(single_asset_loss(cfg, u)[1] - fd) / np.abs(fd))
    for name, model in (("portfolioA", portfolio_a), ("portfolioB", portfolio_b)):
        cfg = model.cfg
        u = rng.uniform(0.001, 0.999, (100, cfg.d))
        fd = _fd(lambda r: portfolio_loss(replace(cfg, r=r), u)[0], cfg.r, 1e-4)
        worst[name] = np.max(np.abs(portfolio_loss(cfg, u)[1] - fd) / np.abs(fd))
    dg = build_model(load_config("deltagamma.cfg")).cfg
    u = rng.uniform(0.001, 0.999, (100, dg.d))

    def shifted(x):
        mu = dg.mu.copy()
        mu[dg.k] = x
        return delta_gamma_loss(replace(dg, mu=mu), u)[0]

    fd = _fd(shifted, dg.mu[dg.k], 1e-4)
    worst["delta-gamma"] = np.max(np.abs(delta_gamma_loss(dg, u)[1] - fd) / np.abs(fd))
    ok = max(worst.values()) <= 1e-5
    record("criterion 8 IPA vs finite differences", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (max relative error, 100 points each)")


def test_criterion_8_put_call_parity():
    rng = np.random.default_rng(1)
    S, K = rng.uniform(50, 150, 1000), rng.uniform(50, 150, 1000)
    r, sig, ttm = rng.uniform(-0.02, 0.1, 1000), rng.uniform(0.05, 0.8, 1000), rng.uniform(0.01, 3, 1000)
    gap = max(abs(bs_value(S[i], K[i], r[i], sig[i], ttm[i], "call") - bs_value(S[i], K[i], r[i], sig[i], ttm[i], "put")
                  - (S[i] - K[i] * math.exp(-r[i] * ttm[i]))) for i in range(1000))
    record("criterion 8 put-call parity", gap <= 1e-12, f"max |C - P - (S - K e^-rT)| = {gap:.1e}")


def test_criterion_8_factor_reconstruction():
    rng = np.random.default_rng(2)
    errs = []
    for rho in (equicorrelated(10, 0.2), equicorrelated(5, -0.2), [[1.0, 0.5], [0.5, 1.0]]):
        A = pca_factor(rho)
        errs.append(np.abs(A @ A.T - np.asarray(rho)).max())
    for d in (3, 6, 10):
        b = rng.normal(size=(d, d))
        sigma = b @ b.T + 0.05 * np.eye(d)
        for method in ("cholesky", "pca"):
            C = matrix_factor(sigma, method)
            errs.append(np.abs(C @ C.T - sigma).max())
    record("criterion 8 PCA/Cholesky reconstruction", max(errs) <= 1e-10,
           f"max |C C^T - Sigma| = {max(errs):.1e} over {len(errs)} matrices")


def test_criterion_8_inverse_normal_accuracy():
    grid = np.linspace(1e-10, 1 - 1e-10, 10_000)
    t0 = time.perf_counter()
    ref = np.array([float(mp_normal_quantile(u)) for u in grid])
    err = np.max(np.abs(inv_normal_cdf(grid) - ref))
    record("criterion 8 inverse normal accuracy", err <= 1e-13,
           f"max abs error {err:.1e} on a 10^4-point grid ({time.perf_counter() - t0:.1f}s oracle)")
