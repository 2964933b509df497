"""Core model types: rates, threshold strategies, and triangular state indexing.

Customers arrive at rate ``lam`` to a single exponential server of rate
``mu``.  Each completed service succeeds with probability ``q``; on failure
the customer instantly rejoins the tail of the queue.  A successful
completion pays ``r0``; waiting costs one unit per unit time.

All solvers live on the triangular state space ``{(i, j): 1 <= i <= j <= J}``
where ``j`` counts customers in the system and ``i`` is the position of a
tagged customer.  States are ordered level by level:
``(1,1), (1,2), (2,2), (1,3), (2,3), (3,3), ...``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Fractional parts below this are treated as exactly zero: the chain
#: construction branches on integer thresholds.
INTEGER_EPS = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Arrival rate, service rate, success probability, and service reward.

    The waiting cost rate is normalised to one, so ``r0`` is measured in
    units of expected waiting time.
    """

    lam: float
    mu: float
    q: float
    r0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("lam", "mu", "q", "r0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        if self.lam <= 0.0:
            raise ValueError(f"arrival rate must be positive, got {self.lam}")
        if self.mu <= 0.0:
            raise ValueError(f"service rate must be positive, got {self.mu}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"success probability must lie in (0, 1], got {self.q}")
        if self.r0 < 0.0:
            raise ValueError(f"reward must be nonnegative, got {self.r0}")

    @property
    def rho(self) -> float:
        """Traffic intensity of the effective service process, lam / (mu q)."""
        return self.lam / (self.mu * self.q)

    def with_r0(self, r0: float) -> ModelParams:
        """Copy with a different service reward."""
        return ModelParams(self.lam, self.mu, self.q, r0)


@dataclass(frozen=True)
class Threshold:
    """Join surely at positions <= n, with probability p at n + 1, never beyond."""

    x: float
    n: int
    p: float

    @property
    def is_integer(self) -> bool:
        """True when the fractional part is (numerically) exactly zero."""
        return self.p < INTEGER_EPS


def make_threshold(x: float) -> Threshold:
    """Split a nonnegative real threshold into integer and fractional parts."""
    if not isinstance(x, (int, float)) or not math.isfinite(x) or x < 0.0:
        raise ValueError(f"threshold must be a finite nonnegative real, got {x!r}")
    n = int(math.floor(x))
    return Threshold(x=float(x), n=n, p=float(x) - n)


def as_threshold(x: float | Threshold) -> Threshold:
    return x if isinstance(x, Threshold) else make_threshold(x)


def branch_parts(th: Threshold) -> tuple[int, float]:
    """Integer and fractional parts, with the fraction snapped to zero when
    the threshold is integer-valued (the chain shapes branch on that case)."""
    return th.n, 0.0 if th.is_integer else th.p


def state_index(i: int, j: int) -> int:
    """1-based linear position of state (i, j) in the level-major ordering."""
    _check_state(i, j)
    return j * (j - 1) // 2 + i


def inverse_index(k: int) -> tuple[int, int]:
    """Invert :func:`state_index`; round-trips exactly."""
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"linear index must be a positive integer, got {k!r}")
    j = (math.isqrt(8 * k - 7) + 1) // 2
    i = k - j * (j - 1) // 2
    return i, j


def num_states(depth: int) -> int:
    """Number of states in a chain with levels 1..depth."""
    return depth * (depth + 1) // 2


def level_offset(j: int) -> int:
    """0-based offset of state (1, j) in a value vector."""
    return j * (j - 1) // 2


def _check_state(i: int, j: int) -> None:
    if not (isinstance(i, int) and isinstance(j, int)):
        raise ValueError(f"state coordinates must be integers, got ({i!r}, {j!r})")
    if not 1 <= i <= j:
        raise ValueError(f"state ({i}, {j}) outside the triangular region 1 <= i <= j")
