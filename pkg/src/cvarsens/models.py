"""Loss models mapping ``u in (0,1)^d`` to a loss ``L`` and its pathwise
derivative ``L'`` with respect to a model parameter.

Three families are provided:

* :class:`SingleAssetModel`: one European option on a GBM asset, loss over
  a short risk horizon, derivative with respect to ``S0`` or ``r``.
* :class:`PortfolioModel`: European calls/puts on correlated GBM assets,
  derivative with respect to ``r``.
* :class:`DeltaGammaModel`: quadratic loss in normal risk-factor changes,
  derivative with respect to one component of the mean.

All evaluators take an ``(n, d)`` array (or ``(n,)`` when ``d == 1``) and
return two length-``n`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError
from .special import inv_normal_cdf, normal_cdf


class NotPSDError(ValueError):
    """Matrix is not positive (semi)definite within tolerance."""


# ----------------------------------------------------------------------
# Black-Scholes and GBM


def gbm_price(S0, mu, sigma, tau, z):
    """Real-world GBM price at horizon ``tau`` driven by standard normal ``z``."""
    return S0 * np.exp((mu - 0.5 * sigma * sigma) * tau + sigma * math.sqrt(tau) * np.asarray(z, dtype=float))


def _check_positive(**kw):
    for name, val in kw.items():
        if np.any(np.asarray(val) <= 0):
            raise ValueError(f"{name} must be positive")


def bs_d1d2(S, K, r, sigma, ttm):
    """Black-Scholes ``(d1, d2)``."""
    _check_positive(S=S, K=K, sigma=sigma, ttm=ttm)
    return _d1d2(S, K, r, sigma, ttm)


def _d1d2(S, K, r, sigma, ttm):
    # sigma == 0 gives d1 = d2 = +-inf, i.e. the deterministic payoff limit.
    sd = sigma * math.sqrt(ttm)
    with np.errstate(divide="ignore"):
        d1 = (np.log(S / K) + (r + 0.5 * sigma * sigma) * ttm) / sd
    return d1, d1 - sd


def bs_value(S, K, r, sigma, ttm, kind="put"):
    """Black-Scholes value of a European ``"put"`` or ``"call"``."""
    _check_positive(S=S, K=K, sigma=sigma, ttm=ttm)
    return _bs_value(S, K, r, sigma, ttm, kind)


def _bs_value(S, K, r, sigma, ttm, kind):
    d1, d2 = _d1d2(S, K, r, sigma, ttm)
    disc = K * math.exp(-r * ttm)
    if kind == "put":
        return disc * normal_cdf(-d2) - S * normal_cdf(-d1)
    if kind == "call":
        return S * normal_cdf(d1) - disc * normal_cdf(d2)
    raise ValueError(f"unknown option kind {kind!r}")


def _bs_delta(S, K, r, sigma, ttm, kind):
    d1, _ = _d1d2(S, K, r, sigma, ttm)
    return normal_cdf(d1) - (1.0 if kind == "put" else 0.0)


def _bs_rho(S, K, r, sigma, ttm, kind):
    _, d2 = _d1d2(S, K, r, sigma, ttm)
    scale = K * ttm * math.exp(-r * ttm)
    return -scale * normal_cdf(-d2) if kind == "put" else scale * normal_cdf(d2)


# ----------------------------------------------------------------------
# Matrix factorizations


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius norm drops below ``tol`` times the
    diagonal norm. Returns ``(eigenvalues, eigenvectors)`` in the original
    (unsorted) diagonal order; eigenvectors are columns.
    """
    a = np.array(a, dtype=float)
    d = a.shape[0]
    if a.shape != (d, d) or not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise ValueError("matrix must be square and symmetric")
    v = np.eye(d)
    for _ in range(max_sweeps):
        # summed directly; sum(a^2) - sum(diag^2) cancels catastrophically
        off = math.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * np.linalg.norm(np.diag(a)) or off == 0.0:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * ap - s * aq, s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def _pca(mat: np.ndarray, psd_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    lam, vec = jacobi_eigh(mat)
    if lam.min() < -psd_tol:
        raise NotPSDError(f"matrix has eigenvalue {lam.min():.3e} < -{psd_tol}")
    # Descending order; near-equal eigenvalues keep their original index order.
    order = list(np.argsort(-lam, kind="stable"))
    tie = 1e-10 * max(1.0, float(np.abs(lam).max()))
    groups, cur = [], [order[0]]
    for i in order[1:]:
        if lam[cur[-1]] - lam[i] <= tie:
            cur.append(i)
        else:
            groups.append(sorted(cur))
            cur = [i]
    groups.append(sorted(cur))
    order = [i for g in groups for i in g]
    lam, vec = lam[order], vec[:, order]
    for j in range(vec.shape[1]):
        if vec[np.argmax(np.abs(vec[:, j])), j] < 0:
            vec[:, j] = -vec[:, j]
    return np.clip(lam, 0.0, None), vec


def pca_factor(rho) -> np.ndarray:
    """Principal-components factor ``A = (sqrt(l1) v1, ..., sqrt(ld) vd)``.

    ``rho`` must be a symmetric PSD matrix with unit diagonal. Columns are
    ordered by decreasing eigenvalue and each eigenvector is signed so its
    largest-magnitude entry is positive.
    """
    rho = np.asarray(rho, dtype=float)
    if not np.allclose(np.diag(rho), 1.0, rtol=0, atol=1e-12):
        raise ValueError("correlation matrix must have unit diagonal")
    lam, vec = _pca(rho)
    return vec * np.sqrt(lam)


def matrix_factor(sigma, method: str = "cholesky") -> np.ndarray:
    """Return ``C`` with ``C @ C.T == sigma`` by Cholesky or PCA."""
    sigma = np.asarray(sigma, dtype=float)
    if method == "cholesky":
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
            raise ValueError("matrix must be symmetric")
        try:
            return np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise NotPSDError("matrix is not positive definite") from None
    if method == "pca":
        lam, vec = _pca(sigma)
        return vec * np.sqrt(lam)
    raise ValueError(f"unknown factorization {method!r}")


def equicorrelated(d: int, rho: float) -> np.ndarray:
    """``d x d`` correlation matrix with every off-diagonal entry ``rho``."""
    out = np.full((d, d), float(rho))
    np.fill_diagonal(out, 1.0)
    return out


# ----------------------------------------------------------------------
# Loss models


def _as_points(u, d: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1 and d == 1:
        u = u[:, None]
    elif u.ndim == 1 and u.shape[0] == d:
        u = u[None, :]
    if u.ndim != 2 or u.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {u.shape}")
    return u


class LossModel:
    """Base class: ``model(u) -> (L, L')``, optional closed-form VaR."""

    dim: int = 1
    name: str = "model"

    def __call__(self, u) -> tuple[np.ndarray, np.ndarray]:
        return self.evaluate(u)

    def evaluate(self, u) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def has_closed_form_var(self) -> bool:
        return False

    def var(self, alpha: float) -> float:
        raise CapabilityError(f"{self.name} has no closed-form VaR")


@dataclass(frozen=True)
class SingleAssetConfig:
    S0: float = 100.0
    mu: float = 0.08
    sigma: float = 0.2
    r: float = 0.03
    K: float = 95.0
    T: float = 0.25
    tau: float = 1.0 / 52.0
    kind: str = "put"
    theta: str = "S0"

    def __post_init__(self):
        # sigma == 0 is accepted as the deterministic limit.
        if self.sigma < 0 or self.S0 <= 0 or self.K <= 0 or not 0 < self.tau < self.T:
            raise ValueError("need sigma >= 0, S0 > 0, K > 0, 0 < tau < T")
        if self.kind not in ("put", "call"):
            raise ValueError(f"unknown option kind {self.kind!r}")
        if self.theta not in ("S0", "r"):
            raise ValueError(f"unknown sensitivity parameter {self.theta!r}")


def single_asset_loss(cfg: SingleAssetConfig, u):
    """Loss ``v_0 - v_tau`` of one option and its derivative in ``cfg.theta``."""
    u = np.asarray(u, dtype=float)
    z = inv_normal_cdf(u)
    s_tau = gbm_price(cfg.S0, cfg.mu, cfg.sigma, cfg.tau, z)
    ttm = cfg.T - cfg.tau
    v0 = _bs_value(cfg.S0, cfg.K, cfg.r, cfg.sigma, cfg.T, cfg.kind)
    v_tau = _bs_value(s_tau, cfg.K, cfg.r, cfg.sigma, ttm, cfg.kind)
    loss = v0 - v_tau
    if cfg.theta == "S0":
        deriv = (_bs_delta(cfg.S0, cfg.K, cfg.r, cfg.sigma, cfg.T, cfg.kind)
                 - _bs_delta(s_tau, cfg.K, cfg.r, cfg.sigma, ttm, cfg.kind) * s_tau / cfg.S0)
    else:
        deriv = (_bs_rho(cfg.S0, cfg.K, cfg.r, cfg.sigma, cfg.T, cfg.kind)
                 - _bs_rho(s_tau, cfg.K, cfg.r, cfg.sigma, ttm, cfg.kind))
    return loss, deriv


def single_asset_var(cfg: SingleAssetConfig, alpha: float) -> float:
    """Closed-form VaR: the loss is increasing in ``u``, so ``v_alpha = g(alpha)``.

    Monotonicity holds for the put; for a call the loss decreases in ``u``
    and the quantile is ``g(1 - alpha)``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    u = alpha if cfg.kind == "put" else 1.0 - alpha
    return float(single_asset_loss(cfg, u)[0])


@dataclass(frozen=True)
class SingleAssetModel(LossModel):
    cfg: SingleAssetConfig = field(default_factory=SingleAssetConfig)
    name: str = "single-asset"
    dim: int = 1

    def evaluate(self, u):
        u = _as_points(u, 1)[:, 0]
        return single_asset_loss(self.cfg, u)

    @property
    def has_closed_form_var(self) -> bool:
        return True

    def var(self, alpha: float) -> float:
        return single_asset_var(self.cfg, alpha)


@dataclass(frozen=True)
class OptionSpec:
    asset: int  # 0-based asset index
    kind: str
    K: float
    T: float


@dataclass(frozen=True)
class PortfolioConfig:
    """European options on correlated GBM assets; derivative in ``r``.

    ``factor`` is ``"identity"`` (requires ``rho == I``), ``"pca"`` or
    ``"cholesky"``.
    """

    S0: tuple[float, ...]
    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    rho: np.ndarray = field(repr=False)
    options: tuple[OptionSpec, ...]
    r: float = 0.03
    tau: float = 1.0 / 52.0
    factor: str = "identity"
    theta: str = "r"
    A: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = len(self.S0)
        rho = np.asarray(self.rho, dtype=float)
        if len(self.mu) != d or len(self.sigma) != d or rho.shape != (d, d):
            raise ValueError("asset parameter lengths and rho shape must agree")
        if not np.allclose(rho, rho.T, rtol=0, atol=1e-12) or not np.allclose(np.diag(rho), 1.0):
            raise ValueError("rho must be symmetric with unit diagonal")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise NotPSDError("rho is not positive semidefinite")
        if self.theta != "r":
            raise ValueError("portfolios support theta='r' only")
        for opt in self.options:
            if not 0 <= opt.asset < d:
                raise ValueError(f"option asset index {opt.asset} outside 0..{d - 1}")
            if opt.kind not in ("put", "call") or opt.K <= 0 or opt.T <= self.tau:
                raise ValueError(f"invalid option {opt}")
        if min(self.S0) <= 0 or min(self.sigma) < 0:
            raise ValueError("need S0 > 0 and sigma >= 0")
        if self.factor == "identity":
            if not np.array_equal(rho, np.eye(d)):
                raise ValueError("identity factor requires rho == I")
            a = np.eye(d)
        elif self.factor == "pca":
            a = pca_factor(rho)
        elif self.factor == "cholesky":
            a = matrix_factor(rho, "cholesky")
        else:
            raise ValueError(f"unknown factor {self.factor!r}")
        rho.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "A", a)

    @property
    def d(self) -> int:
        return len(self.S0)


def portfolio_loss(cfg: PortfolioConfig, u):
    """Summed option losses and summed per-option derivatives in ``r``."""
    u = _as_points(u, cfg.d)
    z = inv_normal_cdf(u)
    b = math.sqrt(cfg.tau) * (z @ cfg.A.T)
    s0 = np.asarray(cfg.S0)
    mu = np.asarray(cfg.mu)
    sig = np.asarray(cfg.sigma)
    s_tau = s0 * np.exp((mu - 0.5 * sig * sig) * cfg.tau + sig * b)
    loss = np.zeros(u.shape[0])
    deriv = np.zeros(u.shape[0])
    for opt in cfg.options:
        k = opt.asset
        ttm = opt.T - cfg.tau
        st = s_tau[:, k]
        loss += (_bs_value(s0[k], opt.K, cfg.r, sig[k], opt.T, opt.kind)
                 - _bs_value(st, opt.K, cfg.r, sig[k], ttm, opt.kind))
        deriv += (_bs_rho(s0[k], opt.K, cfg.r, sig[k], opt.T, opt.kind)
                  - _bs_rho(st, opt.K, cfg.r, sig[k], ttm, opt.kind))
    return loss, deriv


@dataclass(frozen=True)
class PortfolioModel(LossModel):
    cfg: PortfolioConfig
    name: str = "portfolio"

    @property
    def dim(self) -> int:
        return self.cfg.d

    def evaluate(self, u):
        return portfolio_loss(self.cfg, u)


def reference_portfolio(correlation: float = 0.0, d: int = 10) -> PortfolioConfig:
    """Ten-option test portfolio on ``d`` identical assets (K=95, T=0.25).

    Each asset carries one option, calls on assets 1, 3, 5, ... and puts on
    assets 2, 4, 6, ..., so the book holds ``d/2`` calls and ``d/2`` puts.
    ``correlation=0`` uses the identity factor, otherwise the PCA factor of
    the equicorrelated matrix.
    """
    options = tuple(OptionSpec(i, "call" if i % 2 == 0 else "put", 95.0, 0.25) for i in range(d))
    return PortfolioConfig(
        S0=(100.0,) * d,
        mu=(0.08,) * d,
        sigma=(0.2,) * d,
        rho=equicorrelated(d, correlation),
        options=options,
        r=0.03,
        tau=1.0 / 52.0,
        factor="identity" if correlation == 0 else "pca",
    )


@dataclass(frozen=True)
class DeltaGammaConfig:
    """Quadratic loss ``a0 + alpha^T dS + dS^T A dS`` with ``dS ~ N(mu, Sigma)``.

    ``k`` (0-based) selects the mean component the derivative is taken in.
    """

    a0: float
    alpha: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    Sigma: np.ndarray = field(repr=False)
    k: int = 0
    factor: str = "cholesky"
    C: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        A = np.asarray(self.A, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        Sigma = np.asarray(self.Sigma, dtype=float)
        d = alpha.shape[0]
        if A.shape != (d, d) or mu.shape != (d,) or Sigma.shape != (d, d):
            raise ValueError("inconsistent delta-gamma dimensions")
        for name, mat in (("A", A), ("Sigma", Sigma)):
            if not np.allclose(mat, mat.T, rtol=0, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(mat).min() <= 0:
                raise NotPSDError(f"{name} must be positive definite")
        if not 0 <= self.k < d:
            raise ValueError(f"k={self.k} outside 0..{d - 1}")
        C = matrix_factor(Sigma, self.factor)
        if np.linalg.norm(C @ C.T - Sigma) > 1e-12 * np.linalg.norm(Sigma):
            raise ValueError("factor does not reproduce Sigma")
        for name, val in (("alpha", alpha), ("A", A), ("mu", mu), ("Sigma", Sigma), ("C", C)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @property
    def d(self) -> int:
        return self.alpha.shape[0]


def delta_gamma_loss(cfg: DeltaGammaConfig, u):
    """Quadratic loss in ``z = Phi^{-1}(u)`` and its derivative in ``mu_k``."""
    u = _as_points(u, cfg.d)
    z = inv_normal_cdf(u)
    A, C, mu, alpha = cfg.A, cfg.C, cfg.mu, cfg.alpha
    AC = A @ C
    lin = alpha @ C + 2.0 * mu @ AC
    quad = C.T @ AC
    loss = cfg.a0 + alpha @ mu + mu @ A @ mu + z @ lin + np.einsum("ni,ij,nj->n", z, quad, z)
    deriv = alpha[cfg.k] + 2.0 * A[cfg.k] @ mu + 2.0 * (z @ AC[cfg.k])
    return loss, deriv


@dataclass(frozen=True)
class DeltaGammaModel(LossModel):
    cfg: DeltaGammaConfig
    name: str = "delta-gamma"

    @property
    def dim(self) -> int:
        return self.cfg.d

    def evaluate(self, u):
        return delta_gamma_loss(self.cfg, u)
