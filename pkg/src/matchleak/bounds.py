"""Worst-case cost bounds per leakage scenario.

Search-cost estimates for the accept-finding phase (naive pinned-coordinate
enumeration, greedy-cover size with the harmonic guarantee, and the entropy
approximation of the optimal-cover size) plus the per-scenario worst-case
query bound that the harness checks every trial against.

Exact integer arithmetic is used wherever a quantity is exact (naive search,
ball volume, the rational greedy-cover bound); the entropy approximation is
a float and is reported, never asserted as a bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import UsageError
from .oracle import LeakageMode, Payload, Scope
from .space import SpaceParams, ball_volume, harmonic_number_exact, q_ary_entropy


@dataclass(frozen=True, slots=True)
class BoundReport:
    """Cost landscape for one space/mode configuration.

    ``entropy_approx`` is only defined for eps/n <= 1 - 1/q and
    ``worst_case_queries`` only when the scenario has an active attack for
    the given alphabet; undefined fields are None, never silently zero.
    """

    params: SpaceParams
    mode: LeakageMode
    ball_volume: int
    naive_search: int
    greedy_cover_bound: Fraction
    entropy_approx: float | None
    worst_case_queries: int | None


def worst_case_queries(params: SpaceParams, mode: LeakageMode) -> int | None:
    """Worst-case query count of the attack matching the leakage mode.

    None when no finite per-query bound applies: the accept-bit-only
    scenario is only attacked over the binary alphabet.
    """
    q, n, eps = params.q, params.n, params.epsilon
    search = q ** (n - eps)
    if mode.scope is Scope.BELOW_ONLY:
        if mode.payload is Payload.DISTANCE:
            return search + (q - 1) * eps
        if mode.payload is Payload.POSITIONS:
            return search + (q - 1)
        if mode.payload is Payload.POSITIONS_VALUES:
            return search + 1
        return None  # normalized away: below-only with no payload
    if mode.payload is Payload.NONE:
        return search + n + 2 * eps + 1 if q == 2 else None
    if mode.payload is Payload.DISTANCE:
        return n * (q - 1) + 1
    if mode.payload is Payload.POSITIONS:
        return q - 1
    return 1


def theoretical_bounds(params: SpaceParams, mode: LeakageMode) -> BoundReport:
    """Assemble the full bound report for one configuration."""
    q, n, eps = params.q, params.n, params.epsilon
    vol = ball_volume(params)
    naive = q ** (n - eps)
    greedy = Fraction(params.space_size()) * harmonic_number_exact(n) / vol
    ratio = eps / n
    entropy = None
    if ratio <= 1.0 - 1.0 / q:
        entropy = float(q) ** (n * (1.0 - q_ary_entropy(q, ratio)))
    return BoundReport(
        params=params,
        mode=mode,
        ball_volume=vol,
        naive_search=naive,
        greedy_cover_bound=greedy,
        entropy_approx=entropy,
        worst_case_queries=worst_case_queries(params, mode),
    )


def coupon_bracket(n_coupons: int, p_min: float) -> tuple[float, float]:
    """Bracket on the expected sessions to collect every coupon when the
    rarest one appears with probability p_min per round:
    1/p_min <= E <= (ln n + 1)/p_min."""
    if n_coupons < 1:
        raise UsageError("need at least one coupon")
    if not 0.0 < p_min <= 1.0:
        raise UsageError("p_min must lie in (0, 1]")
    return 1.0 / p_min, (math.log(n_coupons) + 1.0) / p_min
