"""Empirical VaR, CVaR, and CVaR-sensitivity estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_EXACT_GUARD = 2.0**-40


@dataclass(frozen=True)
class LossSample:
    """Index-aligned losses and pathwise derivatives."""

    losses: np.ndarray = field(repr=False)
    derivs: np.ndarray = field(repr=False)

    def __post_init__(self):
        losses = np.asarray(self.losses, dtype=float).ravel()
        derivs = np.asarray(self.derivs, dtype=float).ravel()
        if losses.size < 1:
            raise ValueError("a loss sample needs at least one observation")
        if losses.shape != derivs.shape:
            raise ValueError(f"length mismatch: {losses.size} losses, {derivs.size} derivatives")
        if not (np.all(np.isfinite(losses)) and np.all(np.isfinite(derivs))):
            raise ValueError("loss sample contains NaN or infinite entries")
        losses.flags.writeable = False
        derivs.flags.writeable = False
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "derivs", derivs)

    @property
    def n(self) -> int:
        return self.losses.size


@dataclass(frozen=True)
class RiskEstimates:
    alpha: float
    var: float
    cvar: float
    sens: float
    n: int


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def order_index(n: int, alpha: float) -> int:
    """``ceil(n * alpha)`` computed as the mathematical ceiling.

    A product within 2**-40 of an integer is snapped to it first, so that
    e.g. ``0.9 * 2**10`` is not pushed up by representation error.
    """
    x = n * alpha
    r = round(x)
    if abs(x - r) <= _EXACT_GUARD:
        x = r
    return min(max(math.ceil(x), 1), n)


def empirical_cdf(sample: LossSample, y: float) -> float:
    """Fraction of losses ``<= y``."""
    return float(np.count_nonzero(sample.losses <= y)) / sample.n


def var_estimate(sample: LossSample, alpha: float) -> float:
    """The ``ceil(n alpha)``-th smallest loss."""
    _check_alpha(alpha)
    k = order_index(sample.n, alpha)
    return float(np.sort(sample.losses, kind="stable")[k - 1])


def cvar_estimate(sample: LossSample, alpha: float) -> float:
    """VaR estimate plus the scaled mean excess over it."""
    v = var_estimate(sample, alpha)
    excess = np.maximum(sample.losses - v, 0.0).sum()
    return v + excess / (sample.n * (1.0 - alpha))


def _tail_mean(sample: LossSample, alpha: float, threshold: float) -> float:
    return float(sample.derivs[sample.losses > threshold].sum()) / (sample.n * (1.0 - alpha))


def cvar_sensitivity_ipa(sample: LossSample, alpha: float) -> float:
    """IPA estimate: derivatives averaged over losses strictly above the VaR estimate."""
    return _tail_mean(sample, alpha, var_estimate(sample, alpha))


def cvar_sensitivity_oracle(sample: LossSample, alpha: float, v_true: float) -> float:
    """IPA sum with the VaR estimate replaced by a known VaR ``v_true``."""
    _check_alpha(alpha)
    return _tail_mean(sample, alpha, v_true)


def estimate_all(sample: LossSample, alpha: float, v_true: float | None = None) -> RiskEstimates:
    """VaR, CVaR and sensitivity from one sort of the sample.

    With ``v_true`` given the sensitivity uses the oracle threshold.
    """
    _check_alpha(alpha)
    n = sample.n
    v = float(np.sort(sample.losses, kind="stable")[order_index(n, alpha) - 1])
    c = v + np.maximum(sample.losses - v, 0.0).sum() / (n * (1.0 - alpha))
    sens = _tail_mean(sample, alpha, v if v_true is None else v_true)
    return RiskEstimates(alpha=alpha, var=v, cvar=float(c), sens=sens, n=n)


def cdf_gap_bound_check(sample: LossSample, alpha: float, v_alpha: float, t: int = 0, b: int = 2) -> bool:
    """Check ``|F_n(v_hat) - F_n(v_alpha)| <= b**t / n + |F_n(v_alpha) - alpha|``.

    Evaluated on counts (both sides times ``n``) so the comparison is exact
    up to the single rounding in ``n * alpha``.
    """
    n = sample.n
    v_hat = var_estimate(sample, alpha)
    c_hat = np.count_nonzero(sample.losses <= v_hat)
    c_true = np.count_nonzero(sample.losses <= v_alpha)
    return abs(int(c_hat) - int(c_true)) <= b**t + abs(int(c_true) - n * alpha)
