"""Study configuration files.

A config is a flat ``key = value`` text with ``[model]``, ``[study]`` and
``[benchmark]`` sections. ``#`` starts a comment (``;`` only at line
start) and indented lines continue the previous value. Numbers may be written as fractions
(``tau = 1/52``). Matrices are inline nested lists (``[[1, 0.2], [0.2, 1]]``),
flat row-major lists, or ``equicorrelated(d, rho)``; ``identity`` is also
accepted for correlation matrices.

Model keys
    type          single-asset | portfolio | delta-gamma
    name          experiment label (case1, case2, portfolioA, ...)
    single-asset  S0 mu sigma r K T tau kind theta
    portfolio     d S0 mu sigma (scalar or list) rho factor r tau options
                  (one option per line: ``call|put ASSET(1-based) K T``)
    delta-gamma   a0 alpha A mu Sigma k(1-based) factor

Study keys
    alpha methods m_min m_max R seed out

Benchmark keys
    source (self | published), method, m, R, reference
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .harness import METHODS, PUBLISHED_BENCHMARKS, Benchmark, BenchmarkSpec, StudyConfig
from .models import (DeltaGammaConfig, DeltaGammaModel, LossModel, OptionSpec, PortfolioConfig,
                     PortfolioModel, SingleAssetConfig, SingleAssetModel, equicorrelated)

SECTIONS = ("model", "study", "benchmark")
BUNDLED = ("case1.cfg", "case2.cfg", "portfolioA.cfg", "portfolioB.cfg", "deltagamma.cfg")


@dataclass
class RawConfig:
    """Parsed key-value pairs with the line each value came from."""

    values: dict[str, dict[str, str]] = field(default_factory=lambda: {s: {} for s in SECTIONS})
    lines: dict[tuple[str, str], int | None] = field(default_factory=dict)
    source: str = "<config>"

    def get(self, section: str, key: str, default=None):
        return self.values[section].get(key, default)

    def has(self, section: str, key: str) -> bool:
        return key in self.values[section]

    def error(self, section: str, key: str, message: str) -> ConfigError:
        return ConfigError(f"[{section}] {key}: {message}", self.lines.get((section, key)), self.source)


def parse_config(text: str, source: str = "<config>") -> RawConfig:
    raw = RawConfig(source=source)
    section = None
    last = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = re.split(r"\s#|^\s*[#;]", line, maxsplit=1)[0].rstrip()
        if not stripped.strip():
            continue
        if line[:1] in " \t" and last is not None:
            sec, key = last
            raw.values[sec][key] += "\n" + stripped.strip()
            continue
        m = re.fullmatch(r"\s*\[\s*(\w+)\s*\]\s*", stripped)
        if m:
            section = m.group(1).lower()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            last = None
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped.strip()!r}", lineno, source)
        if section is None:
            raise ConfigError("key outside of a section", lineno, source)
        key, value = (s.strip() for s in stripped.split("=", 1))
        raw.values[section][key] = value
        raw.lines[(section, key)] = lineno
        last = (section, key)
    return raw


def apply_overrides(raw: RawConfig, overrides: list[str]) -> RawConfig:
    """Apply ``section.key=value`` overrides on top of the parsed file."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not 'section.key=value'", source="--set")
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"override {item!r}: unknown section {section!r}", source="--set")
        raw.values[section][key.strip()] = value.strip()
        raw.lines[(section, key.strip())] = None
    return raw


def resolve_config_path(path: str) -> tuple[str, str]:
    """Return ``(text, label)`` for a file path or a bundled config name."""
    p = Path(path)
    if p.is_file():
        return p.read_text(), str(p)
    if p.name in BUNDLED and not p.parent.name:
        return (resources.files("cvarsens") / "configs" / p.name).read_text(), f"<bundled {p.name}>"
    raise FileNotFoundError(path)


def load_config(path: str, overrides: list[str] = ()) -> RawConfig:
    text, label = resolve_config_path(path)
    return apply_overrides(parse_config(text, label), list(overrides))


# ----------------------------------------------------------------------
# typed accessors


def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        return float(Fraction(text.replace(" ", "")))
    return float(text)


def _num(raw: RawConfig, sec: str, key: str, default=None) -> float:
    val = raw.get(sec, key)
    if val is None:
        if default is None:
            raise raw.error(sec, key, "missing required key")
        return default
    try:
        return _number(val)
    except (ValueError, ZeroDivisionError):
        raise raw.error(sec, key, f"not a number: {val!r}") from None


def _int(raw: RawConfig, sec: str, key: str, default=None) -> int:
    x = _num(raw, sec, key, default)
    if x != int(x):
        raise raw.error(sec, key, f"expected an integer, got {x}")
    return int(x)


def _vector(raw: RawConfig, sec: str, key: str, d: int | None = None, default=None) -> np.ndarray:
    val = raw.get(sec, key)
    if val is None:
        if default is None:
            raise raw.error(sec, key, "missing required key")
        val = str(default)
    try:
        parsed = ast.literal_eval(val.replace("\n", " ")) if val.strip().startswith(("[", "(")) else None
        if parsed is None:
            parts = [p for p in re.split(r"[,\s]+", val.strip()) if p]
            parsed = [_number(p) for p in parts]
        vec = np.atleast_1d(np.asarray(parsed, dtype=float))
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise raw.error(sec, key, f"cannot parse vector {val!r}") from None
    if d is not None:
        if vec.size == 1:
            vec = np.full(d, vec[0])
        elif vec.size != d:
            raise raw.error(sec, key, f"expected {d} entries, got {vec.size}")
    return vec


def _matrix(raw: RawConfig, sec: str, key: str, d: int | None = None) -> np.ndarray:
    val = raw.get(sec, key)
    if val is None:
        raise raw.error(sec, key, "missing required key")
    text = val.replace("\n", " ").strip()
    m = re.fullmatch(r"equicorrelated\(\s*([^,]+),\s*([^)]+)\)", text)
    try:
        if m:
            mat = equicorrelated(int(_number(m.group(1))), _number(m.group(2)))
        elif text == "identity":
            if d is None:
                raise ValueError("identity needs a known dimension")
            mat = np.eye(d)
        else:
            mat = np.asarray(ast.literal_eval(text) if text.startswith("[") else
                             [_number(p) for p in re.split(r"[,\s]+", text) if p], dtype=float)
            if mat.ndim == 1:
                k = int(round(mat.size**0.5))
                if k * k != mat.size:
                    raise ValueError("flat matrix is not square")
                mat = mat.reshape(k, k)
    except (ValueError, SyntaxError, ZeroDivisionError) as exc:
        raise raw.error(sec, key, f"cannot parse matrix: {exc}") from None
    if d is not None and mat.shape != (d, d):
        raise raw.error(sec, key, f"expected a {d}x{d} matrix, got {mat.shape}")
    return mat


def _options(raw: RawConfig, d: int) -> tuple[OptionSpec, ...]:
    val = raw.get("model", "options")
    if val is None:
        raise raw.error("model", "options", "missing required key")
    out = []
    for entry in re.split(r"[\n;]+", val):
        parts = entry.split()
        if not parts:
            continue
        try:
            kind, asset, K, T = parts
            out.append(OptionSpec(int(asset) - 1, kind.lower(), _number(K), _number(T)))
        except ValueError:
            raise raw.error("model", "options", f"bad option {entry.strip()!r}; use 'call|put ASSET K T'") from None
    return tuple(out)


def build_model(raw: RawConfig) -> LossModel:
    kind = raw.get("model", "type", "single-asset")
    try:
        if kind == "single-asset":
            cfg = SingleAssetConfig(
                S0=_num(raw, "model", "S0", 100.0), mu=_num(raw, "model", "mu", 0.08),
                sigma=_num(raw, "model", "sigma", 0.2), r=_num(raw, "model", "r", 0.03),
                K=_num(raw, "model", "K", 95.0), T=_num(raw, "model", "T", 0.25),
                tau=_num(raw, "model", "tau", 1 / 52), kind=raw.get("model", "kind", "put"),
                theta=raw.get("model", "theta", "S0"))
            return SingleAssetModel(cfg, name=raw.get("model", "name", "single-asset"))
        if kind == "portfolio":
            d = _int(raw, "model", "d")
            cfg = PortfolioConfig(
                S0=tuple(_vector(raw, "model", "S0", d)), mu=tuple(_vector(raw, "model", "mu", d)),
                sigma=tuple(_vector(raw, "model", "sigma", d)), rho=_matrix(raw, "model", "rho", d),
                options=_options(raw, d), r=_num(raw, "model", "r", 0.03),
                tau=_num(raw, "model", "tau", 1 / 52), factor=raw.get("model", "factor", "identity"))
            return PortfolioModel(cfg, name=raw.get("model", "name", "portfolio"))
        if kind == "delta-gamma":
            alpha = _vector(raw, "model", "alpha")
            d = alpha.size
            cfg = DeltaGammaConfig(
                a0=_num(raw, "model", "a0", 0.0), alpha=alpha, A=_matrix(raw, "model", "A", d),
                mu=_vector(raw, "model", "mu", d), Sigma=_matrix(raw, "model", "Sigma", d),
                k=_int(raw, "model", "k", 1) - 1, factor=raw.get("model", "factor", "cholesky"))
            return DeltaGammaModel(cfg, name=raw.get("model", "name", "delta-gamma"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise raw.error("model", "type", f"invalid {kind} model: {exc}") from None
    raise raw.error("model", "type", f"unknown model type {kind!r}")


def reference_value(raw: RawConfig) -> float | None:
    """Published benchmark for this experiment, if any."""
    if raw.has("benchmark", "reference"):
        return _num(raw, "benchmark", "reference")
    return PUBLISHED_BENCHMARKS.get(raw.get("model", "name", ""))


def build_benchmark(raw: RawConfig, model: LossModel) -> BenchmarkSpec | Benchmark:
    source = raw.get("benchmark", "source", "self")
    if source == "published":
        ref = reference_value(raw)
        if ref is None:
            raise raw.error("benchmark", "source", "no published value for this experiment")
        return Benchmark(ref, 0.0, "published")
    if source != "self":
        raise raw.error("benchmark", "source", f"expected 'self' or 'published', got {source!r}")
    default = "rqmc2-linear" if model.has_closed_form_var else "rqmc-linear"
    method = raw.get("benchmark", "method", default)
    if method not in METHODS:
        raise raw.error("benchmark", "method", f"unknown method {method!r}")
    return BenchmarkSpec(method, _int(raw, "benchmark", "m", 18), _int(raw, "benchmark", "R", 50))


def build_study(raw: RawConfig, seed: int | None = None, out_dir: str | None = None,
                threads: int | None = None) -> StudyConfig:
    model = build_model(raw)
    methods = tuple(m.strip() for m in raw.get("study", "methods", "mc, rqmc-linear").split(",") if m.strip())
    for meth in methods:
        if meth not in METHODS:
            raise raw.error("study", "methods", f"unknown method {meth!r}")
    if not methods:
        raise raw.error("study", "methods", "method list is empty")
    m_min, m_max = _int(raw, "study", "m_min", 10), _int(raw, "study", "m_max", 16)
    if m_max < m_min:
        raise raw.error("study", "m_max", f"empty m range {m_min}..{m_max}")
    R = _int(raw, "study", "R", 30)
    if R < 2:
        raise raw.error("study", "R", "need at least 2 replications")
    alpha = _num(raw, "study", "alpha", 0.9)
    if not 0 < alpha < 1:
        raise raw.error("study", "alpha", "alpha must lie in (0, 1)")
    if any(m.startswith("rqmc2") for m in methods) and not model.has_closed_form_var:
        raise raw.error("study", "methods", f"rqmc2 methods need a closed-form VaR, {model.name} has none")
    return StudyConfig(
        model=model, alpha=alpha, methods=methods, m_values=tuple(range(m_min, m_max + 1)), R=R,
        seed=_int(raw, "study", "seed", 2024) if seed is None else seed,
        benchmark=build_benchmark(raw, model),
        out_dir=out_dir or raw.get("study", "out"), threads=threads, name=model.name)
