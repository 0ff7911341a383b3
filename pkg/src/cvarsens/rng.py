"""Seed derivation and counter-based generators.

Every random stream in the package comes from a Philox4x64 generator keyed
by an integer seed. Child seeds are derived with a keyed BLAKE2b hash of the
parent seed and a tuple of labels, so that replication ``r`` of method ``q``
at size ``m`` is reproducible on its own, regardless of execution order::

    child = derive_seed(master, "rqmc-linear", m, r)
"""

from __future__ import annotations

import hashlib

import numpy as np

_PERSON = b"cvarsens-seed"


def derive_seed(seed: int, *labels) -> int:
    """Return a 64-bit child seed for ``(seed, *labels)``.

    Labels may be ints or strings. The mapping is a pure function of its
    arguments and collisions between distinct label tuples are negligible.
    """
    payload = "\x1f".join([str(int(seed))] + [f"{type(x).__name__}:{x}" for x in labels])
    h = hashlib.blake2b(payload.encode(), digest_size=8, person=_PERSON)
    return int.from_bytes(h.digest(), "little")


def generator(seed: int) -> np.random.Generator:
    """Philox-backed generator for ``seed`` (any nonnegative int)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws strictly inside (0, 1); exact zeros are redrawn."""
    u = rng.random(size)
    zero = u == 0.0
    while zero.any():
        u[zero] = rng.random(int(zero.sum()))
        zero = u == 0.0
    return u


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=np.uint64) + _GOLDEN
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        return x ^ (x >> np.uint64(31))
