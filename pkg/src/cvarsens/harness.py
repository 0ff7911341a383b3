"""Replication engine and convergence studies for MC vs. RQMC estimators.

Every replication is a pure function of ``(master seed, method, m, r)``::

    seed = derive_seed(master, method, m, r)

so a study can be run on any number of threads and reproduces bit for bit.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapabilityError
from .lowdisc import PointSet, mc_points, scramble_linear, scramble_nested, sobol_net
from .models import LossModel
from .rng import derive_seed
from .stats import LossSample, RiskEstimates, cdf_gap_bound_check, estimate_all

log = logging.getLogger(__name__)

METHODS = ("mc", "rqmc-linear", "rqmc-nested", "rqmc2-linear")
THREADS_ENV = "CVARSENS_THREADS"

# Published benchmark sensitivities, keyed by experiment name.
PUBLISHED_BENCHMARKS = {
    "case1": -0.1337,
    "case2": -3.8585,
    "portfolioA": 8.0814,
    "portfolioB": 15.1564,
}
PUBLISHED_VAR_SINGLE_ASSET = 0.859

STATS_HEADER = ("method", "m", "n", "rep_count", "mean_estimate", "mean_error", "rmse",
                "se_mean", "se_rmse", "benchmark", "benchmark_se")
SLOPES_HEADER = ("method", "metric", "slope", "intercept", "r2")


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def draw_points(method: str, m: int, d: int, seed: int) -> PointSet:
    """Point set for ``method``: i.i.d. uniforms or a scrambled Sobol' net."""
    _check_method(method)
    if method == "mc":
        return mc_points(2**m, d, seed)
    net = sobol_net(m, d)
    if method.endswith("nested"):
        return scramble_nested(net, seed)
    return scramble_linear(net, seed)


def _oracle_var(model: LossModel, method: str, alpha: float, v_true: float | None) -> float | None:
    if not method.startswith("rqmc2"):
        return None
    if v_true is not None:
        return v_true
    if not model.has_closed_form_var:
        raise CapabilityError(f"{method} needs a closed-form VaR, which {model.name} lacks")
    return model.var(alpha)


def sample_model(model: LossModel, method: str, m: int, seed: int) -> LossSample:
    pts = draw_points(method, m, model.dim, seed)
    losses, derivs = model(pts.values)
    return LossSample(losses, derivs)


def run_replication(model: LossModel, method: str, alpha: float, m: int, seed: int,
                    v_true: float | None = None) -> RiskEstimates:
    """One replication at ``n = 2**m``.

    ``rqmc2-*`` methods report the oracle sensitivity at the model's
    closed-form VaR (or ``v_true`` if given).
    """
    oracle = _oracle_var(model, method, alpha, v_true)
    return estimate_all(sample_model(model, method, m, seed), alpha, oracle)


@dataclass(frozen=True)
class Replication:
    method: str
    m: int
    r: int
    seed: int
    estimates: RiskEstimates
    bound_ok: bool | None = None
    max_ties: int | None = None


def tie_census(sample: LossSample) -> int:
    """Largest number of exactly equal losses in the sample."""
    return max(Counter(sample.losses.tolist()).values())


def _replicate(model, method, alpha, m, r, master, v_true, diagnostics) -> Replication:
    seed = derive_seed(master, method, m, r)
    oracle = _oracle_var(model, method, alpha, v_true)
    sample = sample_model(model, method, m, seed)
    est = estimate_all(sample, alpha, oracle)
    bound_ok = ties = None
    if diagnostics and method != "mc":
        ties = tie_census(sample)
        v_ref = v_true if v_true is not None else (model.var(alpha) if model.has_closed_form_var else None)
        if v_ref is not None and model.dim <= 2:
            bound_ok = cdf_gap_bound_check(sample, alpha, v_ref, t=0, b=2)
    return Replication(method, m, r, seed, est, bound_ok, ties)


def _run_tasks(tasks: Sequence[tuple], fn, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


@dataclass(frozen=True)
class BenchmarkSpec:
    """Self-computed benchmark: mean of ``R`` replications at ``n = 2**m``."""

    method: str = "rqmc2-linear"
    m: int = 18
    R: int = 50


@dataclass(frozen=True)
class Benchmark:
    value: float
    se: float
    source: str
    estimates: tuple[float, ...] = field(default=(), repr=False)


def compute_benchmark(model: LossModel, alpha: float, spec: BenchmarkSpec = BenchmarkSpec(),
                      seed: int = 0, v_true: float | None = None, threads: int | None = None) -> Benchmark:
    """Mean and standard error of ``spec.R`` independent sensitivity estimates.

    Replication seeds are derived under a ``"benchmark"`` label and never
    coincide with those of a convergence study using the same master seed.
    """
    _check_method(spec.method)
    if spec.R < 2:
        raise ValueError("benchmark needs R >= 2")
    threads = default_threads() if threads is None else threads
    master = derive_seed(seed, "benchmark")
    tasks = [(model, spec.method, alpha, spec.m, r, master, v_true, False) for r in range(spec.R)]
    reps = _run_tasks(tasks, _replicate, threads)
    est = np.array([rep.estimates.sens for rep in sorted(reps, key=lambda x: x.r)])
    se = float(est.std(ddof=1) / math.sqrt(est.size))
    return Benchmark(float(est.mean()), se, f"{spec.method} m={spec.m} R={spec.R}", tuple(est.tolist()))


def published_benchmark(value: float) -> Benchmark:
    return Benchmark(float(value), 0.0, "published")


@dataclass(frozen=True)
class ErrorStats:
    """Error summary of ``rep_count`` replications against a benchmark.

    ``mean_error`` is the average absolute error, ``bias`` the absolute error
    of the replication mean. ``se_rmse`` is a delta-method standard error.
    """

    method: str
    m: int
    n: int
    rep_count: int
    mean_estimate: float
    mean_error: float
    rmse: float
    bias: float
    se_mean: float
    se_rmse: float
    benchmark: float
    benchmark_se: float

    @classmethod
    def from_estimates(cls, method: str, m: int, est: Sequence[float], bench: Benchmark) -> "ErrorStats":
        est = np.asarray(est, dtype=float)
        R = est.size
        err = est - bench.value
        abs_err = np.abs(err)
        sq = err * err
        rmse = float(math.sqrt(sq.mean()))
        se_mse = float(sq.std(ddof=1) / math.sqrt(R)) if R > 1 else math.nan
        return cls(
            method=method, m=m, n=2**m, rep_count=R,
            mean_estimate=float(est.mean()),
            mean_error=float(abs_err.mean()),
            rmse=rmse,
            bias=float(abs(est.mean() - bench.value)),
            se_mean=float(abs_err.std(ddof=1) / math.sqrt(R)) if R > 1 else math.nan,
            se_rmse=se_mse / (2.0 * rmse) if rmse > 0 else 0.0,
            benchmark=bench.value,
            benchmark_se=bench.se,
        )

    def row(self) -> list:
        return [getattr(self, k) for k in STATS_HEADER]


def fit_rate(points: Iterable[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares line through ``(log2 n, log2 metric)``.

    Returns ``(slope, intercept, r2)``.
    """
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("fit_rate needs at least 3 points")
    n, y = np.array(pts, dtype=float).T
    if np.any(y <= 0) or np.any(n <= 0):
        raise ValueError("fit_rate needs positive n and metric values")
    x, y = np.log2(n), np.log2(y)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class StudyConfig:
    """What to run: model, level, methods, sizes ``2**m``, replications."""

    model: LossModel
    alpha: float = 0.9
    methods: Sequence[str] = ("mc", "rqmc-linear")
    m_values: Sequence[int] = tuple(range(10, 17))
    R: int = 30
    seed: int = 2024
    benchmark: BenchmarkSpec | Benchmark | float = field(default_factory=BenchmarkSpec)
    v_true: float | None = None
    out_dir: str | None = None
    threads: int | None = None
    name: str = "study"

    def validate(self) -> None:
        if not self.methods:
            raise ValueError("method list is empty")
        for meth in self.methods:
            _check_method(meth)
            if meth.startswith("rqmc2") and self.v_true is None and not self.model.has_closed_form_var:
                raise CapabilityError(f"{meth} needs a closed-form VaR or v_true")
        if not list(self.m_values):
            raise ValueError("m range is empty")
        if self.R < 2:
            raise ValueError("R must be >= 2")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class ConvergenceReport:
    stats: list[ErrorStats]
    fits: dict[tuple[str, str], tuple[float, float, float]]
    benchmark: Benchmark
    records: list[Replication] = field(default_factory=list, repr=False)

    def rows(self, method: str) -> list[ErrorStats]:
        return sorted((s for s in self.stats if s.method == method), key=lambda s: s.m)

    def slope(self, method: str, metric: str = "rmse") -> float:
        return self.fits[(method, metric)][0]

    def stats_csv(self) -> str:
        return _render_csv(STATS_HEADER, [s.row() for s in self.stats])

    def slopes_csv(self) -> str:
        rows = [[meth, metric, *fit] for (meth, metric), fit in sorted(self.fits.items())]
        return _render_csv(SLOPES_HEADER, rows)

    def summary(self) -> str:
        b = self.benchmark
        lines = [f"benchmark {b.value!r} (se {b.se:.3g}, {b.source})",
                 f"{'method':<14}{'m':>3}{'mean_est':>16}{'mean_err':>12}{'rmse':>12}"]
        for s in self.stats:
            lines.append(f"{s.method:<14}{s.m:>3}{s.mean_estimate:>16.8g}{s.mean_error:>12.4g}{s.rmse:>12.4g}")
        for (meth, metric), (slope, _, r2) in sorted(self.fits.items()):
            lines.append(f"slope {meth:<14}{metric:<11}{slope:8.3f}  (r2 {r2:.3f})")
        return "\n".join(lines)

    def write(self, out_dir: str, stem: str = "study") -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        stats_path = os.path.join(out_dir, f"{stem}_errors.csv")
        slopes_path = os.path.join(out_dir, f"{stem}_slopes.csv")
        atomic_write(stats_path, self.stats_csv())
        atomic_write(slopes_path, self.slopes_csv())
        return stats_path, slopes_path


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _resolve_benchmark(config: StudyConfig, threads: int) -> Benchmark:
    b = config.benchmark
    if isinstance(b, Benchmark):
        return b
    if isinstance(b, (int, float)):
        return published_benchmark(b)
    return compute_benchmark(config.model, config.alpha, b, config.seed, config.v_true, threads)


def convergence_study(config: StudyConfig, diagnostics: bool = False) -> ConvergenceReport:
    """Run every ``(method, m, r)`` replication and summarize errors.

    Slopes are fitted per method for both ``mean_error`` and ``rmse``. With
    ``diagnostics`` each RQMC replication also records its tie census and,
    for models of dimension <= 2 with a known VaR, the CDF gap bound check.
    CSVs are written when ``config.out_dir`` is set.
    """
    config.validate()
    threads = default_threads() if config.threads is None else config.threads
    bench = _resolve_benchmark(config, threads)
    tasks = [(config.model, meth, config.alpha, m, r, config.seed, config.v_true, diagnostics)
             for meth in config.methods for m in config.m_values for r in range(config.R)]
    log.info("running %d replications on %d threads", len(tasks), threads)
    records = sorted(_run_tasks(tasks, _replicate, threads),
                     key=lambda x: (config.methods.index(x.method), x.m, x.r))
    stats = []
    for meth in config.methods:
        for m in config.m_values:
            est = [rec.estimates.sens for rec in records if rec.method == meth and rec.m == m]
            stats.append(ErrorStats.from_estimates(meth, m, est, bench))
    fits = {}
    if len(list(config.m_values)) >= 3:
        for meth in config.methods:
            rows = [s for s in stats if s.method == meth]
            for metric in ("mean_error", "rmse"):
                pts = [(s.n, getattr(s, metric)) for s in rows]
                if all(p[1] > 0 for p in pts):
                    fits[(meth, metric)] = fit_rate(pts)
    report = ConvergenceReport(stats, fits, bench, records)
    if config.out_dir:
        report.write(config.out_dir, config.name)
    return report
