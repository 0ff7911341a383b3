"""Sobol' digital nets, their randomizations, and plain Monte Carlo points.

Coordinates are held as 32-digit binary fractions (``uint32``), digit 1 being
the most significant bit. Randomized coordinates are converted to floats as
``digits / 2**32`` and are never exactly zero, so every point lies strictly
inside the open unit cube.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import IO, Iterable

import numpy as np

from .errors import CapabilityError, DirectionNumberError
from .rng import derive_seed, generator, mix64, uniform_open

DIGITS = 32
_SCALE = 2.0**-DIGITS

MONTE_CARLO = "monte-carlo"
SOBOL_LINEAR = "scrambled-sobol-linear"
SOBOL_NESTED = "scrambled-sobol-nested"


@dataclass(frozen=True)
class DirectionRecord:
    dim: int
    degree: int
    a: int
    m: tuple[int, ...]


@dataclass(frozen=True)
class DirectionNumberTable:
    """Primitive polynomials and initial direction integers, dimensions 2.."""

    records: tuple[DirectionRecord, ...] = ()

    @property
    def max_dim(self) -> int:
        """Highest dimension covered; dimension 1 is always available."""
        return 1 + len(self.records)

    def record(self, dim: int) -> DirectionRecord:
        return self.records[dim - 2]


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode()
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode() if isinstance(data, bytes) else data


def load_direction_numbers(source: IO[bytes] | IO[str] | bytes | str) -> DirectionNumberTable:
    """Parse a Joe-Kuo style table (``d s a m_1 ... m_s`` per line).

    A first line whose first token is not numeric is treated as a header.
    Blank lines are skipped. Records must be sorted by dimension starting at
    2 with no gaps.

    Raises
    ------
    DirectionNumberError
        On a malformed record (the message names the line) or on an
        initial direction integer that is even or not below ``2**j``.
    """
    text = _read_text(source)
    records: list[DirectionRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if not records and lineno == 1 and not tokens[0].lstrip("+-").isdigit():
            continue
        try:
            values = [int(tok) for tok in tokens]
        except ValueError:
            raise DirectionNumberError(f"non-integer token in {line.strip()!r}", lineno) from None
        if len(values) < 3:
            raise DirectionNumberError("expected 'd s a m_1 ... m_s'", lineno)
        dim, degree, a, *m = values
        if degree < 1 or len(m) != degree:
            raise DirectionNumberError(f"degree {degree} but {len(m)} direction integers", lineno)
        if a < 0 or a >= 2 ** (degree - 1):
            raise DirectionNumberError(f"coefficient a={a} out of range for degree {degree}", lineno)
        expected = 2 + len(records)
        if dim != expected:
            raise DirectionNumberError(f"dimension {dim} out of order, expected {expected}", lineno)
        for j, mj in enumerate(m, start=1):
            if mj % 2 == 0 or not 0 < mj < 2**j:
                raise DirectionNumberError(f"m_{j}={mj} must be odd and below 2^{j}", lineno)
        records.append(DirectionRecord(dim, degree, a, tuple(m)))
    return DirectionNumberTable(tuple(records))


@lru_cache(maxsize=1)
def default_table() -> DirectionNumberTable:
    """The bundled new-joe-kuo-6 table (dimensions up to 1111)."""
    ref = resources.files("cvarsens") / "data" / "new-joe-kuo-6.1111"
    return load_direction_numbers(ref.read_text())


def direction_integers(record: DirectionRecord | None, bits: int = DIGITS) -> np.ndarray:
    """Direction integers ``v_1..v_bits`` as ``uint32`` (``v_k = m_k 2^(32-k)``).

    ``record=None`` gives dimension 1 (van der Corput).
    """
    if record is None:
        m = [1] * bits
    else:
        s, a = record.degree, record.a
        m = list(record.m[:bits])
        for k in range(s, bits):
            new = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= m[k - i] << i
            m.append(new)
    return np.array([mk << (DIGITS - k) for k, mk in enumerate(m, start=1)], dtype=np.uint32)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DigitalNet:
    """``2**m`` points in ``[0,1)^d`` stored as 32-digit binary fractions."""

    m: int
    d: int
    digits: np.ndarray = field(repr=False)
    t: int | None = None
    b: int = 2

    def __post_init__(self):
        if self.digits.shape != (self.b**self.m, self.d):
            raise ValueError(f"digits shape {self.digits.shape} != ({self.b ** self.m}, {self.d})")
        _freeze(self.digits)

    @property
    def n(self) -> int:
        return self.b**self.m

    @property
    def values(self) -> np.ndarray:
        return self.digits * _SCALE


@dataclass(frozen=True)
class PointSet:
    """Sample points strictly inside ``(0,1)^d`` with their provenance."""

    values: np.ndarray = field(repr=False)
    provenance: str
    seed: int | None = None
    m: int | None = None
    t: int | None = None
    b: int = 2

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("values must be an n x d array")
        _freeze(self.values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def to_csv(self, dest: str | IO[str]) -> None:
        """Write ``row,u1,...,ud`` with 17 significant digits (rows 1-based)."""
        if isinstance(dest, str):
            with open(dest, "w", newline="") as fh:
                self.to_csv(fh)
            return
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(["row"] + [f"u{j + 1}" for j in range(self.d)])
        for i, row in enumerate(self.values, start=1):
            w.writerow([i] + [format(x, ".17g") for x in row])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def sobol_net(m: int, d: int, table: DirectionNumberTable | None = None) -> DigitalNet:
    """First ``2**m`` Sobol' points in ``d`` dimensions (unrandomized).

    Point 1 is the origin. ``t=0`` is recorded for ``d <= 2``; for higher
    dimensions ``t`` is left unspecified.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0 <= m <= 31:
        raise ValueError("m must be in 0..31")
    table = default_table() if table is None else table
    if d > table.max_dim:
        raise CapabilityError(f"direction-number table covers {table.max_dim} dimensions, {d} requested")
    n = 1 << m
    idx = np.arange(n, dtype=np.uint64)
    digits = np.zeros((n, d), dtype=np.uint32)
    for j in range(d):
        v = direction_integers(None if j == 0 else table.record(j + 1))
        col = np.zeros(n, dtype=np.uint32)
        for k in range(m):
            bit = ((idx >> np.uint64(k)) & np.uint64(1)).astype(np.uint32)
            col ^= bit * v[k]
        digits[:, j] = col
    return DigitalNet(m=m, d=d, digits=digits, t=0 if d <= 2 else None)


def _nonzero_completion(digits: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Redraw the digits beyond position ``m`` of any all-zero coordinate.

    Only digits past the net resolution change, so the net property holds.
    """
    zero = digits == 0
    if zero.any():
        tail = DIGITS - min(m, DIGITS - 1)
        digits[zero] = rng.integers(1, 2**tail, size=int(zero.sum()), dtype=np.uint64).astype(np.uint32)
    return digits


def _linear_scramble_params(rng: np.random.Generator, d: int) -> tuple[np.ndarray, np.ndarray]:
    # Column h of a unit lower-triangular bit matrix: the diagonal bit for
    # digit h plus random bits on the less significant digits.
    pos = DIGITS - np.arange(1, DIGITS + 1, dtype=np.uint64)
    diag = np.uint64(1) << pos
    below = rng.integers(0, 2**DIGITS, size=(d, DIGITS), dtype=np.uint64) & (diag - np.uint64(1))
    cols = (diag | below).astype(np.uint32)
    shifts = rng.integers(0, 2**DIGITS, size=d, dtype=np.uint64).astype(np.uint32)
    return cols, shifts


def identity_linear_params(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Identity matrices and zero shift, for ``scramble_linear(..., params=)``."""
    cols = np.tile(direction_integers(None), (d, 1))
    return cols, np.zeros(d, dtype=np.uint32)


def scramble_linear(
    net: DigitalNet, seed: int, params: tuple[np.ndarray, np.ndarray] | None = None
) -> PointSet:
    """Random linear scrambling plus a digital shift (Matousek).

    Each coordinate gets its own unit lower-triangular ``32 x 32`` bit matrix
    and shift vector. ``params`` overrides the random draw with explicit
    ``(columns, shifts)`` arrays of shape ``(d, 32)`` and ``(d,)``.
    """
    if net.b != 2:
        raise ValueError("only base 2 is supported")
    rng = generator(derive_seed(seed, "linear"))
    cols, shifts = _linear_scramble_params(rng, net.d) if params is None else params
    out = np.empty_like(net.digits)
    for j in range(net.d):
        x = net.digits[:, j]
        y = np.full(net.n, shifts[j], dtype=np.uint32)
        for h in range(DIGITS):
            bit = (x >> np.uint32(DIGITS - 1 - h)) & np.uint32(1)
            y ^= bit * cols[j, h]
        out[:, j] = y
    out = _nonzero_completion(out, net.m, rng)
    return PointSet(out * _SCALE, SOBOL_LINEAR, seed=seed, m=net.m, t=net.t)


def scramble_nested(net: DigitalNet, seed: int) -> PointSet:
    """Nested uniform (Owen) scrambling of all 32 digits.

    The flip applied to digit ``k`` of coordinate ``j`` is a random bit
    indexed by ``(j, k, first k-1 digits)``. The bits come from a keyed
    64-bit mixer, so the whole permutation tree is a pure function of
    ``seed`` and is never materialized. Once the prefixes of two points
    differ, their remaining digits receive independent flips.
    """
    if net.b != 2:
        raise ValueError("only base 2 is supported")
    out = np.empty_like(net.digits)
    for j in range(net.d):
        x = net.digits[:, j].astype(np.uint64)
        y = x.copy()
        key = np.uint64(derive_seed(seed, "nested", j))
        for k in range(1, DIGITS + 1):
            prefix = x >> np.uint64(DIGITS + 1 - k)
            level = mix64(np.array([key ^ np.uint64(k)]))[0]
            flip = mix64(prefix ^ level) >> np.uint64(63)
            y ^= flip << np.uint64(DIGITS - k)
        out[:, j] = y.astype(np.uint32)
    out = _nonzero_completion(out, net.m, generator(derive_seed(seed, "nested-zero")))
    return PointSet(out * _SCALE, SOBOL_NESTED, seed=seed, m=net.m, t=net.t)


def mc_points(n: int, d: int, seed: int) -> PointSet:
    """``n`` i.i.d. uniform points in ``(0,1)^d`` from a Philox stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = uniform_open(generator(derive_seed(seed, "mc")), (n, d))
    return PointSet(u, MONTE_CARLO, seed=seed)


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, shape = -1, []
        for bar in bars:
            shape.append(bar - prev - 1)
            prev = bar
        shape.append(total + parts - 2 - prev)
        yield tuple(shape)


def check_net_property(points: PointSet | DigitalNet | np.ndarray, t: int, m: int, d: int, b: int = 2) -> bool:
    """True iff ``points`` is a ``(t, m, d)``-net in base ``b``.

    Every elementary interval of volume ``b**(t-m)`` must hold exactly
    ``b**t`` points; all shape vectors ``k_1 + ... + k_d = m - t`` are
    enumerated.
    """
    u = points.values if isinstance(points, (PointSet, DigitalNet)) else np.asarray(points, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[0] != b**m:
        raise ValueError(f"expected {b ** m} points, got {u.shape[0]}")
    if u.shape[1] != d:
        raise ValueError(f"expected dimension {d}, got {u.shape[1]}")
    if not 0 <= t <= m:
        raise ValueError("need 0 <= t <= m")
    level = m - t
    cells = b**level
    for shape in _compositions(level, d):
        cell = np.zeros(u.shape[0], dtype=np.int64)
        for j, kj in enumerate(shape):
            cell = cell * b**kj + np.floor(u[:, j] * float(b) ** kj).astype(np.int64)
        counts = np.bincount(cell, minlength=cells)
        if counts.size != cells or not np.all(counts == b**t):
            return False
    return True
