"""Best responses, critical sojourn values, and Nash equilibrium thresholds.

For each integer m, three sojourn values organise the equilibrium case
structure: ``alpha_m`` (joining the last sure position m when everyone
thresholds at m), ``beta_m`` (joining one past that, nobody reneging), and
``gamma_m`` (joining one past that when the others may renege).  Monotonicity
of sojourn times in both position and threshold makes each case band
``[alpha_m, beta_m]`` / ``(beta_m, alpha_{m+1})`` well ordered, and the mixed
equilibria are bisection roots of a monotone indifference condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import stationary_threshold
from .model import ModelParams, Threshold, as_threshold
from .solver import (
    ConsistencyError,
    ValueVector,
    payoff_vector_n,
    payoff_vector_r_all,
    payoff_vector_r_tagged,
    sojourn_vector,
    sojourn_vector_r_tagged,
)

#: Reward ties with a critical value below this relative size are treated as
#: the measure-zero indifference case.
TIE_TOL = 1e-9

#: Required accuracy of the indifference condition at a mixed root.
ROOT_TOL = 1e-9

#: Bisection iterations; the bracket shrinks to 2^-60 of a unit interval.
BISECT_ITERS = 60

#: Admitted gap between the two routes to the reneging equilibrium payoffs.
PAYOFF_AGREEMENT_TOL = 1e-8

CASE_BALK = "balk"
CASE_INDIFFERENCE = "indifference"
CASE_PURE = "pure"
CASE_MIXED = "mixed"


@dataclass(frozen=True)
class CriticalValues:
    """Critical sojourn values at integer threshold m.

    ``alpha``: expected sojourn joining position m when everyone uses m.
    ``beta``: expected sojourn joining position m+1 under threshold m, no
    reneging.  ``gamma``: the same one-past-the-threshold sojourn when the
    customers ahead may renege; gamma <= beta because reneging ahead can only
    shorten the wait.
    """

    m: int
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class EquilibriumResult:
    """Outcome of an equilibrium search.

    ``x`` is the canonical threshold value (0 for balking and for the
    indifference interval, whose span is in ``interval``).  ``residual`` is
    the absolute value of the indifference condition at a mixed root.
    """

    mode: str
    case: str
    x: float
    m: int | None = None
    interval: tuple[float, float] | None = None
    critical: CriticalValues | None = None
    residual: float | None = None


@dataclass(frozen=True)
class EssReport:
    """Grid verdict on evolutionary stability of an equilibrium threshold."""

    x: float
    is_ess: bool
    checked: int
    strict_best: int
    tie_resolved: int
    failures: tuple[float, ...]
    note: str = ""


def critical_values(params: ModelParams, m: int) -> CriticalValues:
    """alpha_m, beta_m, gamma_m via the chain solvers at integer threshold m."""
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    w = sojourn_vector(params, float(m))
    w_hat = sojourn_vector_r_tagged(params, float(m))
    return CriticalValues(
        m=m, alpha=w.at(m, m), beta=w.at(m + 1, m + 1), gamma=w_hat.at(m + 1, m + 1)
    )


def _bisect_fraction(objective, increasing: bool, iters: int = BISECT_ITERS) -> float:
    """Bisect a monotone objective on the open unit interval.

    The signs at the endpoints are guaranteed by the caller's case analysis
    (negative at 0+ and positive at 1- for an increasing objective), so only
    interior points are ever evaluated and the chain shape never changes mid
    search.
    """
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        value = objective(mid)
        below = value < 0.0 if increasing else value > 0.0
        if below:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _mixed_root_n(params: ModelParams, m: int) -> tuple[float, float]:
    """Root of `sojourn one past the threshold equals the reward` on (m, m+1)."""

    def objective(p: float) -> float:
        return sojourn_vector(params, m + p).at(m + 1, m + 1) - params.r0

    p = _bisect_fraction(objective, increasing=True)
    residual = abs(objective(p))
    if residual > ROOT_TOL:
        raise ConsistencyError(f"mixed-root residual {residual:.3e} exceeds {ROOT_TOL:.1e}")
    return m + p, residual


def _mixed_root_r(params: ModelParams, m: int) -> tuple[float, float]:
    """Root of the one-past-the-threshold payoff, others reneging, on (m, m+1)."""

    def objective(p: float) -> float:
        return payoff_vector_r_tagged(params, m + p).at(m + 1, m + 1)

    p = _bisect_fraction(objective, increasing=False)
    residual = abs(objective(p))
    if residual > ROOT_TOL:
        raise ConsistencyError(f"mixed-root residual {residual:.3e} exceeds {ROOT_TOL:.1e}")
    return m + p, residual


def chi(params: ModelParams, m: int) -> float:
    """The unique threshold in (m, m+1) equating the marginal sojourn to the reward.

    Requires the reward to lie strictly between beta_m and alpha_{m+1} so the
    monotone objective brackets a root.
    """
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    beta_m = sojourn_vector(params, float(m)).at(m + 1, m + 1)
    alpha_next = sojourn_vector(params, float(m + 1)).at(m + 1, m + 1)
    if not beta_m < params.r0 < alpha_next:
        raise ValueError(
            f"reward {params.r0} must lie strictly in ({beta_m}, {alpha_next}) for m={m}"
        )
    return _mixed_root_n(params, m)[0]


def nash_n(params: ModelParams) -> EquilibriumResult:
    """Equilibrium threshold when reneging is forbidden.

    Ascends m until the reward falls below joining position m; termination is
    guaranteed because the sojourn at position m grows at least like m / mu.
    """
    return _nash(params, reneging=False)


def nash_r(params: ModelParams) -> EquilibriumResult:
    """Equilibrium threshold when reneging is allowed.

    Same case structure as the no-reneging game with gamma_m in place of
    beta_m; mixed roots solve the reneging-aware indifference condition, so
    the equilibrium threshold is never smaller than the no-reneging one.
    """
    return _nash(params, reneging=True)


def _nash(params: ModelParams, reneging: bool) -> EquilibriumResult:
    mode = "r" if reneging else "n"
    cv = critical_values(params, 1)
    if abs(params.r0 - cv.alpha) <= TIE_TOL * max(1.0, cv.alpha):
        return EquilibriumResult(
            mode, CASE_INDIFFERENCE, 0.0, m=None, interval=(0.0, 1.0), critical=cv
        )
    if params.r0 < cv.alpha:
        return EquilibriumResult(mode, CASE_BALK, 0.0, critical=cv)
    m = 1
    while True:
        upper = cv.gamma if reneging else cv.beta
        if params.r0 <= upper:
            return EquilibriumResult(mode, CASE_PURE, float(m), m=m, critical=cv)
        nxt = critical_values(params, m + 1)
        if params.r0 < nxt.alpha:
            root, residual = (
                _mixed_root_r(params, m) if reneging else _mixed_root_n(params, m)
            )
            return EquilibriumResult(
                mode, CASE_MIXED, root, m=m, critical=cv, residual=residual
            )
        m += 1
        cv = nxt
        if m > 100_000:  # alpha_m >= m / mu, so this is unreachable
            raise ConsistencyError("equilibrium search failed to terminate")


def best_response_n(params: ModelParams, x: float | Threshold) -> int:
    """Highest joining position with nonnegative payoff; 0 means balk everywhere."""
    diag = payoff_vector_n(params, x).diagonal()
    nonneg = np.nonzero(diag >= 0.0)[0]
    return int(nonneg[-1]) + 1 if nonneg.size else 0


def total_payoff(params: ModelParams, x_tag: float | Threshold, x_others: float | Threshold) -> float:
    """Stationary expected payoff of one customer thresholding at ``x_tag``
    against a population at ``x_others``.

    By PASTA an arrival sees the stationary law; she collects the positional
    payoff wherever her own threshold lets her join (surely up to its integer
    part, with the fractional probability one position higher).
    """
    tag = as_threshold(x_tag)
    others = as_threshold(x_others)
    dist = stationary_threshold(params, others, "n").probs
    z = payoff_vector_n(params, others)
    cap = min(tag.n, z.depth)
    total = sum(dist[i - 1] * z.at(i, i) for i in range(1, cap + 1))
    if not tag.is_integer and tag.n < z.depth:
        total += tag.p * dist[tag.n] * z.at(tag.n + 1, tag.n + 1)
    return float(total)


def ess_check(
    params: ModelParams, x_e: float, deviations, tie_tol: float = TIE_TOL
) -> EssReport:
    """Check evolutionary stability of ``x_e`` over a grid of deviations.

    Each deviation must either do strictly worse against the equilibrium
    population, or tie and then do strictly worse against its own population.
    The reward tie with the lone-customer sojourn is the known degenerate
    case in which every threshold in [0, 1] ties forever; it is reported as
    not evolutionarily stable.
    """
    cv = critical_values(params, 1)
    if abs(params.r0 - cv.alpha) <= tie_tol * max(1.0, cv.alpha):
        grid = tuple(float(d) for d in deviations if abs(float(d) - x_e) > 1e-12)
        return EssReport(
            x=x_e,
            is_ess=False,
            checked=len(grid),
            strict_best=0,
            tie_resolved=0,
            failures=grid,
            note="reward equals the lone-customer sojourn: all thresholds in [0, 1] tie",
        )
    u_ee = total_payoff(params, x_e, x_e)
    scale = max(1.0, abs(u_ee))
    strict = 0
    resolved = 0
    failures: list[float] = []
    checked = 0
    for dev in deviations:
        dx = float(dev)
        if abs(dx - x_e) <= 1e-12:
            continue
        checked += 1
        u_de = total_payoff(params, dx, x_e)
        if u_ee > u_de + tie_tol * scale:
            strict += 1
        elif abs(u_ee - u_de) <= tie_tol * scale:
            u_ed = total_payoff(params, x_e, dx)
            u_dd = total_payoff(params, dx, dx)
            if u_ed > u_dd + tie_tol * max(1.0, abs(u_ed)):
                resolved += 1
            else:
                failures.append(dx)
        else:
            failures.append(dx)
    return EssReport(
        x=x_e,
        is_ess=not failures,
        checked=checked,
        strict_best=strict,
        tie_resolved=resolved,
        failures=tuple(failures),
    )


def equilibrium_payoffs_r(params: ModelParams, result: EquilibriumResult) -> ValueVector:
    """Equilibrium payoffs when reneging is allowed.

    For mixed equilibria the all-reneging payoffs coincide with the
    never-renege-tagged payoffs, because the tagged customer's payoff at the
    boundary position is exactly zero there; both routes are computed and
    must agree.
    """
    if result.mode != "r":
        raise ValueError("expected a reneging-game equilibrium result")
    if result.case == CASE_MIXED:
        direct = payoff_vector_r_all(params, result.x)
        via_tagged = payoff_vector_r_tagged(params, result.x)
        gap = float(np.max(np.abs(direct.values - via_tagged.values)))
        if gap > PAYOFF_AGREEMENT_TOL * max(1.0, float(np.max(np.abs(direct.values)))):
            raise ConsistencyError(
                f"reneging equilibrium payoff routes disagree by {gap:.3e}"
            )
        return direct
    if result.case == CASE_PURE:
        return payoff_vector_r_all(params, float(result.m))
    return payoff_vector_r_all(params, 0.0)
