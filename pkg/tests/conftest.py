import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr

from cvarsens.harness import BenchmarkSpec, compute_benchmark
from cvarsens.models import PortfolioModel, SingleAssetConfig, SingleAssetModel, reference_portfolio

ALPHA = 0.9
SEED = 2024

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ----------------------------------------------------------------------
# independent oracles


def mp_normal_quantile(u, dps=40):
    """Phi^{-1}(u) by Newton iteration on mpmath's erfc at high precision."""
    with mpmath.workdps(dps):
        u = mpmath.mpf(u)
        x = mpmath.mpf(0) if u == 0.5 else -mpmath.sqrt(-2 * mpmath.log(min(u, 1 - u)))
        if u > 0.5:
            x = -x
        for _ in range(100):
            f = mpmath.erfc(-x / mpmath.sqrt(2)) / 2 - u
            step = f / (mpmath.exp(-x * x / 2) / mpmath.sqrt(2 * mpmath.pi))
            x -= step
            if abs(step) < mpmath.mpf(10) ** (-dps + 5):
                break
        return x


def put_loss_in_z(z, theta, cfg=SingleAssetConfig()):
    """Case 1/2 put loss derivative written directly in z (no quantile)."""
    S0, mu, sig, r, K, T, tau = cfg.S0, cfg.mu, cfg.sigma, cfg.r, cfg.K, cfg.T, cfg.tau
    s = S0 * math.exp((mu - sig**2 / 2) * tau + sig * math.sqrt(tau) * z)

    def d12(S, ttm):
        d1 = (math.log(S / K) + (r + sig**2 / 2) * ttm) / (sig * math.sqrt(ttm))
        return d1, d1 - sig * math.sqrt(ttm)

    a1, a2 = d12(S0, T)
    b1, b2 = d12(s, T - tau)
    if theta == "S0":
        return (ndtr(a1) - 1) - (ndtr(b1) - 1) * s / S0
    return -K * T * math.exp(-r * T) * ndtr(-a2) + K * (T - tau) * math.exp(-r * (T - tau)) * ndtr(-b2)


def quadrature_sensitivity(theta, alpha=ALPHA):
    """CVaR sensitivity of the single put as a 1-D integral over the tail."""
    z_alpha = float(mp_normal_quantile(alpha))
    val, _ = quad(lambda z: put_loss_in_z(z, theta) * math.exp(-z * z / 2) / math.sqrt(2 * math.pi),
                  z_alpha, 12.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / (1 - alpha)


# ----------------------------------------------------------------------
# shared models and benchmarks (computed once per session)


@pytest.fixture(scope="session")
def case1_model():
    return SingleAssetModel(SingleAssetConfig(theta="S0"))


@pytest.fixture(scope="session")
def case2_model():
    return SingleAssetModel(SingleAssetConfig(theta="r"))


@pytest.fixture(scope="session")
def portfolio_a():
    return PortfolioModel(reference_portfolio(0.0), name="portfolioA")


@pytest.fixture(scope="session")
def portfolio_b():
    return PortfolioModel(reference_portfolio(0.2), name="portfolioB")


@pytest.fixture(scope="session")
def bench_case1(case1_model):
    return compute_benchmark(case1_model, ALPHA, BenchmarkSpec("rqmc2-linear", 18, 50), SEED)


@pytest.fixture(scope="session")
def bench_case2(case2_model):
    return compute_benchmark(case2_model, ALPHA, BenchmarkSpec("rqmc2-linear", 18, 50), SEED)


@pytest.fixture(scope="session")
def bench_a(portfolio_a):
    return compute_benchmark(portfolio_a, ALPHA, BenchmarkSpec("rqmc-linear", 18, 50), SEED)


@pytest.fixture(scope="session")
def bench_b(portfolio_b):
    return compute_benchmark(portfolio_b, ALPHA, BenchmarkSpec("rqmc-linear", 18, 50), SEED)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
