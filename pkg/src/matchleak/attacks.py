"""Template-recovery attacks, one per leakage scenario.

Active attacks drive the oracle through ``query`` only and report how many
queries they spent; passive attacks consume genuine-session observations and
report sessions instead.  Every routine fails fast with a UsageError when run
against a different leakage mode than the one it exploits, and none of them
ever touches the sealed secret directly (the harness verifies outcomes
post-hoc through the audit seal).

Worst-case query budgets, with s = q^(n-eps) for the accept-search phase:

==========================  ==========================================
below-threshold distance    s + (q-1)*eps
below-threshold positions   s + (q-1)
below-threshold pos+values  s + 1
minimal accept bit (q=2)    2^(n-eps) + n + 2*eps + 1
always distance             n*(q-1) + 1
always positions            q - 1
always positions+values     1
accumulation (passive)      expected sessions in [1/p_min, (ln n + 1)/p_min]
fault-controlled (passive)  exactly ceil(n/eps) sessions
==========================  ==========================================
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .covering import greedy_cover, covering_search
from .errors import CapacityError, InternalError, UsageError
from .oracle import ClientModel, MatchResponse, Observation, Oracle, Payload, Scope
from .space import SpaceParams, Template, as_template

# the minimal-leak fallback for n <= 2*eps materializes the whole space
_ELIMINATION_DIM_GUARD = 16
# above this many candidates, skip the balanced-split probe search
_SPLIT_POOL_LIMIT = 512


@dataclass(frozen=True, slots=True)
class PartialTemplate:
    """A template with some coordinates still unknown (None)."""

    coords: tuple[int | None, ...]

    def known_count(self) -> int:
        return sum(1 for c in self.coords if c is not None)

    def unknown_positions(self) -> tuple[int, ...]:
        """1-based positions still unknown."""
        return tuple(i + 1 for i, c in enumerate(self.coords) if c is None)

    def fill(self, value: int = 0) -> Template:
        """Complete the template by writing ``value`` into every unknown."""
        return tuple(value if c is None else c for c in self.coords)


@dataclass(frozen=True, slots=True)
class AttackOutcome:
    recovered: Template | PartialTemplate
    queries_used: int
    exact_recovery: bool
    within_ball: bool
    sessions_used: int = 0
    ball_guess: Template | None = None


class SearchStrategy(Enum):
    COORDINATE_FIXING = "fixing"
    GREEDY_COVER = "greedy"


def _require_mode(oracle: Oracle, scope: Scope, payload: Payload, attack: str) -> None:
    mode = oracle.mode
    if mode.scope is not scope or mode.payload is not payload:
        raise UsageError(
            f"{attack} requires leakage mode ({scope.value}, {payload.value}); "
            f"oracle leaks ({mode.scope.value}, {mode.payload.value})"
        )


def _require_eps_below_n(params: SpaceParams, attack: str) -> None:
    if params.epsilon >= params.n:
        raise UsageError(f"{attack} needs epsilon < n (got epsilon={params.epsilon}, n={params.n})")


def _prefix_candidates(params: SpaceParams) -> Iterator[Template]:
    """Lexicographic enumeration with the last epsilon coordinates pinned to 0."""
    tail = (0,) * params.epsilon
    free = params.n - params.epsilon
    for head in itertools.product(range(params.q), repeat=free):
        yield head + tail


def _first_accepted(oracle: Oracle) -> tuple[Template, MatchResponse]:
    """Scan the pinned-coordinate candidates until one is accepted.

    Some candidate agrees with the secret on all free coordinates and is
    therefore within epsilon of it, so acceptance arrives within q^(n-eps)
    queries.
    """
    for cand in _prefix_candidates(oracle.params):
        resp = oracle.query(cand)
        if resp.accepted:
            return cand, resp
    raise InternalError("pinned-coordinate search exhausted without an acceptance")


def exhaustive_accept_search(oracle: Oracle) -> Template:
    """Find an accepted template in at most q^(n-eps) queries by pinning the
    last epsilon coordinates to 0 and enumerating the rest."""
    _require_eps_below_n(oracle.params, "exhaustive accept search")
    point, _ = _first_accepted(oracle)
    return point


# --- below-threshold scenarios ------------------------------------------------


def attack_below_distance(oracle: Oracle) -> AttackOutcome:
    """Recover the secret when the distance leaks on accepted queries only.

    Scans all q^(n-eps) pinned-coordinate candidates and keeps the accepted
    one with the smallest leaked distance; that candidate matches the secret
    on every free coordinate (its errors are confined to the pinned block,
    and any free-coordinate mismatch would add to the distance).  A
    coordinate-wise climb on the pinned block then tests alternative values,
    keeping a value exactly when the leaked distance drops; rejected probes
    count as "worse".  Worst case q^(n-eps) + (q-1)*eps queries.
    """
    params = oracle.params
    _require_mode(oracle, Scope.BELOW_ONLY, Payload.DISTANCE, "below-threshold distance attack")
    _require_eps_below_n(params, "below-threshold distance attack")
    q0 = oracle.query_count

    best: Template | None = None
    best_d = params.n + 1
    for cand in _prefix_candidates(params):
        resp = oracle.query(cand)
        if resp.accepted and resp.distance < best_d:
            best, best_d = cand, resp.distance
            if best_d == 0:
                break
    if best is None:
        raise InternalError("pinned-coordinate search exhausted without an acceptance")

    y = list(best)
    cur = best_d
    for pos in range(params.n - params.epsilon, params.n):
        if cur == 0:
            break
        for v in range(1, params.q):
            y[pos] = v
            resp = oracle.query(tuple(y))
            d = resp.distance if resp.accepted else cur + 1
            if d < cur:
                cur = d  # v is the secret's value here
                break
            if d > cur:
                y[pos] = 0  # the pinned 0 was already right
                break
            # equal: both wrong, keep probing
        else:
            y[pos] = 0
    return AttackOutcome(
        recovered=tuple(y),
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


def _fix_from_positions(oracle: Oracle, y: Template, resp: MatchResponse) -> Template:
    """Shared sweep for the position-leak scenarios: given an accepted point
    and its flagged positions, pin down the flagged coordinates.

    Binary alphabet: a flagged coordinate can only be the complement, no
    further queries.  Otherwise sweep candidate values 0..q-2 on all
    still-flagged positions simultaneously; a position whose flag clears
    holds that value, and whatever survives the whole sweep is q-1.
    """
    params = oracle.params
    z = list(y)
    remaining = set(resp.error_positions)
    if not remaining:
        return tuple(z)
    if params.q == 2:
        for pos in remaining:
            z[pos - 1] ^= 1
        return tuple(z)
    previous = y
    for v in range(params.q - 1):
        if not remaining:
            break
        probe = list(z)
        for pos in remaining:
            probe[pos - 1] = v
        probe_t = tuple(probe)
        if probe_t == previous:
            continue  # identical submission would leak nothing new
        sweep = oracle.query(probe_t)
        if not sweep.accepted:
            raise InternalError("sweep query unexpectedly rejected")
        still = set(sweep.error_positions)
        for pos in remaining - still:
            z[pos - 1] = v
        remaining = still
        previous = probe_t
    for pos in remaining:
        z[pos - 1] = params.q - 1
    return tuple(z)


def attack_below_positions(oracle: Oracle) -> AttackOutcome:
    """Recover the secret when error positions leak on accepted queries.

    One accept-search (<= q^(n-eps) queries), then the simultaneous value
    sweep over the flagged positions (<= q-1 further queries; none for a
    binary alphabet, where flagged means complemented).
    """
    params = oracle.params
    _require_mode(oracle, Scope.BELOW_ONLY, Payload.POSITIONS, "below-threshold positions attack")
    _require_eps_below_n(params, "below-threshold positions attack")
    q0 = oracle.query_count
    y, resp = _first_accepted(oracle)
    recovered = _fix_from_positions(oracle, y, resp)
    return AttackOutcome(
        recovered=recovered,
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


def attack_below_positions_values(oracle: Oracle) -> AttackOutcome:
    """Recover the secret when positions and signed error values leak on
    accepted queries.

    The accepting query's leak is a complete correction: x_i = y_i + delta_i
    on flagged positions.  For q = 2 the values add nothing over the flags,
    so that case runs the positions path.  Worst case q^(n-eps) queries
    (the contract allows one more for an optional confirmation; none is
    issued).
    """
    params = oracle.params
    _require_mode(
        oracle, Scope.BELOW_ONLY, Payload.POSITIONS_VALUES, "below-threshold positions+values attack"
    )
    _require_eps_below_n(params, "below-threshold positions+values attack")
    q0 = oracle.query_count
    y, resp = _first_accepted(oracle)
    if params.q == 2:
        recovered = _fix_from_positions(oracle, y, resp)
    else:
        z = list(y)
        for pos, delta in resp.error_values.items():
            z[pos - 1] = y[pos - 1] + delta
        recovered = tuple(z)
    return AttackOutcome(
        recovered=recovered,
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


# --- minimal leakage (accept bit only, binary alphabet) -----------------------


def center_search_binary(oracle: Oracle, start: Sequence[int]) -> Template:
    """Recover the exact secret from any accepted point, accept bit only.

    The start is re-queried once (usage error if it is rejected).  Then the
    walk flips coordinates 1..n one at a time, keeping accepted flips: every
    flip moves the distance by exactly 1, so the first rejection certifies
    that the pre-rejection point sits exactly on the acceptance frontier.
    From the frontier, flipping coordinate i is rejected precisely when the
    frontier already agrees with the secret there, so one probe per
    unresolved coordinate reads off the secret.  The rejected walk
    coordinate and the final kept flip come out resolved for free.

    Within n + 2*eps + 1 queries whenever the walk meets a rejection, which
    is guaranteed for n >= 2*eps + 1.  In the degenerate regime n <= 2*eps
    the walk can stay inside the ball; the search then falls back to
    consistent-set elimination (exact, but the query budget is not promised:
    for some (n, eps) near eps = n-1 no strategy can meet it).
    """
    params = oracle.params
    if params.q != 2:
        raise UsageError("center search supports the binary alphabet only")
    _require_eps_below_n(params, "center search")
    y0 = as_template(params, start)
    if not oracle.query(y0).accepted:
        raise UsageError("center search requires an accepted starting point")
    n, eps = params.n, params.epsilon
    if eps == 0:
        return y0  # the acceptance ball is the secret itself

    z = list(y0)
    visited = [y0]
    frontier: Template | None = None
    resolved: dict[int, int] = {}
    for i in range(n):
        z[i] ^= 1
        if oracle.query(tuple(z)).accepted:
            visited.append(tuple(z))
            continue
        z[i] ^= 1
        frontier = tuple(z)
        resolved[i] = frontier[i]  # rejected flip: coordinate was right
        if i > 0:
            # the flip onto the frontier went eps-1 -> eps, so it broke i-1
            resolved[i - 1] = 1 - frontier[i - 1]
        break

    if frontier is None:
        return _eliminate_consistent(oracle, visited)

    x = list(frontier)
    for i in range(n):
        if i in resolved:
            x[i] = resolved[i]
            continue
        probe = list(frontier)
        probe[i] ^= 1
        if oracle.query(tuple(probe)).accepted:
            x[i] = 1 - frontier[i]
        else:
            x[i] = frontier[i]
    return tuple(x)


def _eliminate_consistent(oracle: Oracle, accepted: list[Template]) -> Template:
    """Identify the secret among all templates consistent with the accepted
    observations, one membership query at a time.

    Only reachable when every coordinate flip stayed accepted, which forces
    n <= 2*eps.  Each probe w answers "is the secret within eps of w", i.e.
    membership of the secret in the ball around w's complement of radius
    n - eps - 1.  A separator probe for the two smallest candidates always
    exists, so every query removes at least one candidate; when the
    candidate set is small a balanced-split probe is chosen instead.
    """
    params = oracle.params
    n, eps = params.n, params.epsilon
    if n > _ELIMINATION_DIM_GUARD:
        raise CapacityError(
            f"minimal-leak search with epsilon >= n/2 materializes 2^n candidates; "
            f"n={n} exceeds the guard {_ELIMINATION_DIM_GUARD}"
        )

    def enc(t: Sequence[int]) -> int:
        v = 0
        for i, b in enumerate(t):
            v |= b << i
        return v

    def dec(v: int) -> Template:
        return tuple((v >> i) & 1 for i in range(n))

    full = (1 << n) - 1
    accepted_ids = [enc(t) for t in accepted]
    cand = {
        v
        for v in range(1 << n)
        if all(bin(v ^ a).count("1") <= eps for a in accepted_ids)
    }
    if not cand:
        raise InternalError("no template is consistent with the observed responses")

    radius = n - eps - 1
    shells: list[int] = [0]
    for w in range(1, radius + 1):
        for bits in itertools.combinations(range(n), w):
            m = 0
            for b in bits:
                m |= 1 << b
            shells.append(m)

    while len(cand) > 1:
        first = min(cand)
        second = min(cand - {first})
        sep = _separator_probe(first, second, n, eps)
        probe = sep
        if len(cand) <= _SPLIT_POOL_LIMIT:
            pool = {sep} | {full ^ c for c in cand}
            best: tuple[int, int] | None = None
            for p in sorted(pool):
                inside = sum(1 for v in cand if bin(v ^ p).count("1") <= eps)
                worst = max(inside, len(cand) - inside)
                if best is None or worst < best[0]:
                    best = (worst, p)
            probe = best[1]
        resp = oracle.query(dec(probe))
        ball = {(full ^ probe) ^ m for m in shells}  # secrets that reject the probe
        if resp.accepted:
            cand -= ball
        else:
            cand &= ball
        if not cand:
            raise InternalError("candidate set emptied; oracle responses inconsistent")
    return dec(cand.pop())


def _separator_probe(u: int, v: int, n: int, eps: int) -> int:
    """A probe rejected when the secret is u but accepted when it is v.

    If u and v differ in more than eps bits, move u toward v on eps+1 of
    them; otherwise start from v and flip eps+1-d agreeing bits.  Valid
    whenever d(u, v) <= 2*eps + 1, which holds in the n <= 2*eps regime.
    """
    diff = u ^ v
    d = bin(diff).count("1")
    if d > eps:
        w = u
        moved = 0
        for i in range(n):
            if moved == eps + 1:
                break
            if (diff >> i) & 1:
                w ^= 1 << i
                moved += 1
        return w
    w = v
    extra = eps + 1 - d
    for i in range(n):
        if extra == 0:
            break
        if not (diff >> i) & 1:
            w ^= 1 << i
            extra -= 1
    return w


def attack_minimal_binary(
    oracle: Oracle, strategy: SearchStrategy = SearchStrategy.COORDINATE_FIXING
) -> AttackOutcome:
    """Recover a binary secret from the accept bit alone.

    Phase one finds any accepted point: either the pinned-coordinate scan
    (<= 2^(n-eps) queries) or a greedy ball cover queried center by center
    (<= q^n H(n)/|B| queries).  Phase two hands the point to the center
    search.  Total budget 2^(n-eps) + n + 2*eps + 1 for coordinate fixing.
    """
    params = oracle.params
    _require_mode(oracle, Scope.ALWAYS, Payload.NONE, "minimal-leak attack")
    if params.q != 2:
        raise UsageError("the minimal-leak attack supports the binary alphabet only")
    _require_eps_below_n(params, "minimal-leak attack")
    strategy = SearchStrategy(strategy)
    q0 = oracle.query_count
    if strategy is SearchStrategy.GREEDY_COVER:
        y0 = covering_search(oracle, greedy_cover(params))
    else:
        y0, _ = _first_accepted(oracle)
    x = center_search_binary(oracle, y0)
    return AttackOutcome(
        recovered=x,
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


# --- leaks on both sides of the threshold --------------------------------------


def attack_both_distance(oracle: Oracle) -> AttackOutcome:
    """Hill climb when the distance leaks on every query.

    Query the all-zeros baseline, then fix one coordinate at a time: a
    candidate value that drops the leaked distance is the secret's value; a
    value that raises it proves the current value right; equal distance
    means both are wrong.  Worst case n*(q-1) + 1 queries.
    """
    params = oracle.params
    _require_mode(oracle, Scope.ALWAYS, Payload.DISTANCE, "distance hill climb")
    q0 = oracle.query_count
    y = [0] * params.n
    cur = oracle.query(tuple(y)).distance
    for i in range(params.n):
        if cur == 0:
            break
        for v in range(1, params.q):
            y[i] = v
            d = oracle.query(tuple(y)).distance
            if d < cur:
                cur = d
                break
            if d > cur:
                y[i] = 0
                break
        else:
            y[i] = 0
    return AttackOutcome(
        recovered=tuple(y),
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


def attack_both_positions(oracle: Oracle) -> AttackOutcome:
    """Constant sweep when error positions leak on every query.

    Submit (c, ..., c) for c = 0..q-2; the unflagged positions of each
    response equal c.  Whatever stays flagged throughout must be q-1, so the
    last constant is never submitted.  Always exactly q-1 queries.
    """
    params = oracle.params
    _require_mode(oracle, Scope.ALWAYS, Payload.POSITIONS, "position-leak sweep")
    q0 = oracle.query_count
    x: list[int | None] = [None] * params.n
    for c in range(params.q - 1):
        resp = oracle.query((c,) * params.n)
        flagged = resp.error_positions
        for i in range(params.n):
            if x[i] is None and (i + 1) not in flagged:
                x[i] = c
    recovered = tuple(params.q - 1 if v is None else v for v in x)
    return AttackOutcome(
        recovered=recovered,
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


def attack_both_positions_values(oracle: Oracle) -> AttackOutcome:
    """Single-query recovery when positions and values leak on every query:
    any submission comes back with its own full correction."""
    params = oracle.params
    _require_mode(
        oracle, Scope.ALWAYS, Payload.POSITIONS_VALUES, "positions+values single query"
    )
    q0 = oracle.query_count
    y = (0,) * params.n
    resp = oracle.query(y)
    z = list(y)
    for pos, delta in resp.error_values.items():
        z[pos - 1] = y[pos - 1] + delta
    return AttackOutcome(
        recovered=tuple(z),
        queries_used=oracle.query_count - q0,
        exact_recovery=True,
        within_ball=True,
    )


# --- passive attacks -----------------------------------------------------------


def resolve_error_value(delta: int, q: int) -> int | None:
    """Deduce x_i from a leaked integer difference x_i - y_i when possible.

    Binary alphabet: +1 means x_i = 1, -1 means x_i = 0, so every leak is
    decisive.  For q > 2 only the extreme differences pin the coordinate
    down: q-1 forces x_i = q-1 and -(q-1) forces x_i = 0 (the attainable
    range is [-(q-1), q-1], so these are the only unambiguous cases);
    anything else leaves x_i ambiguous without knowing y_i.
    """
    if delta == q - 1:
        return q - 1
    if delta == -(q - 1):
        return 0
    return None


def _apply_observation(known: dict[int, int], obs: Observation, q: int) -> None:
    for pos, delta in obs.errors.items():
        val = resolve_error_value(delta, q)
        if val is None:
            continue
        if known.setdefault(pos, val) != val:
            raise InternalError(f"observations disagree on coordinate {pos}")


def collect_observations(
    params: SpaceParams,
    observations: Iterable[Observation],
    target: Iterable[int] | None = None,
) -> tuple[PartialTemplate, int]:
    """Fold observations into a partial template.

    Stops as soon as every target position (1-based; default: all) is known,
    or when the stream ends.  Returns the partial template and the number of
    observations consumed.
    """
    tgt = set(target) if target is not None else set(range(1, params.n + 1))
    known: dict[int, int] = {}
    used = 0
    for obs in observations:
        if tgt <= known.keys():
            break
        used += 1
        _apply_observation(known, obs, params.q)
    partial = PartialTemplate(tuple(known.get(i + 1) for i in range(params.n)))
    return partial, used


def accumulation_collect(
    oracle: Oracle,
    client: ClientModel,
    rng: np.random.Generator,
    target: Iterable[int] | None = None,
    max_sessions: int | None = None,
) -> AttackOutcome:
    """Passive accumulation: watch genuine sessions until every target
    coordinate has been observed at least once.

    Zero attack queries; sessions are counted instead.  The target defaults
    to the client's variable coordinates, and a target containing a
    never-erring coordinate is rejected up front since collection could not
    terminate.  If at most epsilon coordinates remain unknown, the partial
    template is also completed into a guess that is guaranteed to sit inside
    the acceptance ball.
    """
    params = oracle.params
    _require_mode(oracle, Scope.BELOW_ONLY, Payload.POSITIONS_VALUES, "accumulation")
    if params.q != 2:
        raise UsageError("accumulation collects exact values for the binary alphabet only")
    variable = set(client.variable_positions())
    tgt = set(target) if target is not None else set(variable)
    if not tgt:
        raise UsageError("empty collection target")
    if not tgt <= variable:
        dead = sorted(tgt - variable)
        raise UsageError(f"target coordinates {dead} never err; collection cannot terminate")

    known: dict[int, int] = {}
    sessions = 0
    while not tgt <= known.keys():
        if max_sessions is not None and sessions >= max_sessions:
            raise CapacityError(f"collection incomplete after {sessions} sessions")
        obs = oracle.genuine_session(client, rng)
        sessions += 1
        _apply_observation(known, obs, params.q)

    partial = PartialTemplate(tuple(known.get(i + 1) for i in range(params.n)))
    unknown = params.n - partial.known_count()
    within = unknown <= params.epsilon
    return AttackOutcome(
        recovered=partial,
        queries_used=0,
        exact_recovery=unknown == 0,
        within_ball=within,
        sessions_used=sessions,
        ball_guess=partial.fill(0) if within else None,
    )


def fault_controlled_collect(oracle: Oracle) -> AttackOutcome:
    """Fault-injection collection: the attacker dictates which coordinates
    err in each session, covering 1..n in epsilon-sized chunks.

    Exactly ceil(n/epsilon) sessions, zero queries, exact recovery.
    """
    params = oracle.params
    _require_mode(oracle, Scope.BELOW_ONLY, Payload.POSITIONS_VALUES, "fault-controlled collection")
    if params.q != 2:
        raise UsageError("fault-controlled collection supports the binary alphabet only")
    if params.epsilon < 1:
        raise UsageError("fault-controlled collection needs epsilon >= 1")
    known: dict[int, int] = {}
    sessions = 0
    for lo in range(1, params.n + 1, params.epsilon):
        chunk = range(lo, min(lo + params.epsilon, params.n + 1))
        obs = oracle.faulted_session(chunk)
        sessions += 1
        _apply_observation(known, obs, params.q)
    if len(known) != params.n:
        raise InternalError("fault-controlled sessions left coordinates unknown")
    recovered = tuple(known[i + 1] for i in range(params.n))
    return AttackOutcome(
        recovered=recovered,
        queries_used=0,
        exact_recovery=True,
        within_ball=True,
        sessions_used=sessions,
    )
