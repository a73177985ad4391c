"""Dense float64 numerics: stable softmax / log-sum-exp, a finite-difference
gradient checker, and the seeded splittable random stream used everywhere.

All public functions operate on plain numpy float64 arrays and are pure.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError

__all__ = [
    "as_vector",
    "softmax",
    "log_sum_exp",
    "check_gradient",
    "RngState",
]

_MAX_UINT64 = 2**64


def as_vector(values, name: str = "input", allow_empty: bool = False) -> np.ndarray:
    """Coerce to a finite, contiguous 1-D float64 array."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def softmax(scores) -> np.ndarray:
    """Normalized exponentials of a score vector.

    Uses max-subtraction so arbitrarily large finite scores never overflow.
    The output sums to 1 within 1e-12 and every entry lies in (0, 1).
    """
    x = as_vector(scores, "scores")
    shifted = x - x.max()
    e = np.exp(shifted)
    return e / e.sum()


def log_sum_exp(scores) -> float:
    """ln(sum(exp(scores))) computed without overflow via max-subtraction."""
    x = as_vector(scores, "scores")
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def check_gradient(
    f: Callable[[np.ndarray], float],
    grad_f: Callable[[np.ndarray], np.ndarray],
    x,
    h: float = 1e-5,
) -> float:
    """Max relative error between central differences of ``f`` and ``grad_f``.

    The relative-error denominator is floored at 1, so tiny gradient entries
    are compared absolutely.
    """
    x = as_vector(x, "x")
    if h <= 0:
        raise ArgumentError(f"step h must be positive, got {h}")
    analytic = as_vector(np.asarray(grad_f(x), dtype=np.float64), "grad_f(x)")
    if analytic.shape != x.shape:
        raise DimensionError(
            f"gradient shape {analytic.shape} does not match input {x.shape}"
        )
    worst = 0.0
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] = x[i] + h
        f_plus = float(f(bumped))
        bumped[i] = x[i] - h
        f_minus = float(f(bumped))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise DomainError(f"f is non-finite near x at coordinate {i}")
        central = (f_plus - f_minus) / (2.0 * h)
        err = abs(central - analytic[i]) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst


class RngState:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Backed by numpy's counter-based Philox generator with the two ids as the
    128-bit key, so equal ids replay the exact same draws on any platform and
    distinct stream ids are independent non-overlapping streams by
    construction. Draw through the ``gen`` attribute; a state is single-owner
    and advances as it is consumed.
    """

    __slots__ = ("seed", "stream_id", "gen")

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not 0 <= seed < _MAX_UINT64:
            raise ArgumentError(f"seed must fit in 64 unsigned bits, got {seed}")
        if not 0 <= stream_id < _MAX_UINT64:
            raise ArgumentError(f"stream_id must fit in 64 unsigned bits, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, stream_id: int) -> "RngState":
        """Fresh independent stream under the same seed."""
        return RngState(self.seed, stream_id)

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed}, stream_id={self.stream_id})"
