"""Ball coverings of Z_q^n.

A cover is a list of centers whose radius-epsilon Hamming balls blanket the
whole space; querying the centers in order is guaranteed to hit the secret's
acceptance ball.  Three constructions live here:

* the trivial coordinate-fixing cover (pin epsilon coordinates, enumerate
  the rest),
* greedy set cover with the classic harmonic-factor guarantee
  |centers| <= q^n * H(n) / |B|,
* an exact branch-and-bound minimum (tiny instances; test oracle).

Spaces are materialized as integer indices (lexicographic rank), so
construction is guarded by a point budget rather than allowed to thrash.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, InternalError, UsageError
from .oracle import Oracle
from .space import (
    SpaceParams,
    Template,
    ball_volume,
    template_from_index,
    template_index,
)

GREEDY_POINT_GUARD = 1 << 24
EXACT_POINT_GUARD = 1 << 12
# full neighbor matrix is precomputed when it fits this many entries
_NEIGHBOR_MATRIX_GUARD = 1 << 24

_EXPORT_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True, slots=True)
class Cover:
    """Centers plus a certification bit (full coverage verified)."""

    params: SpaceParams
    centers: tuple[Template, ...]
    certified: bool

    def __len__(self) -> int:
        return len(self.centers)


def chvatal_bound(params: SpaceParams) -> float:
    """Greedy set-cover guarantee: q^n H(n) / |B|."""
    h = math.fsum(1.0 / i for i in range(1, params.n + 1))
    return params.space_size() * h / ball_volume(params)


def _digit_matrix(params: SpaceParams, size: int) -> np.ndarray:
    """Digits of indices 0..size-1, shape (size, n), coordinate 1 first."""
    ids = np.arange(size, dtype=np.int64)
    digits = np.empty((size, params.n), dtype=np.int64)
    for i in range(params.n):
        digits[:, i] = (ids // params.q ** (params.n - 1 - i)) % params.q
    return digits


def _delta_patterns(params: SpaceParams) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All nonzero digit-offset patterns of weight <= epsilon.

    Adding a pattern digit-wise (mod q) to a point enumerates its ball;
    there are |B| - 1 patterns.
    """
    patterns = []
    for w in range(1, params.epsilon + 1):
        for positions in itertools.combinations(range(params.n), w):
            for offsets in itertools.product(range(1, params.q), repeat=w):
                patterns.append((positions, offsets))
    return patterns


class _BallIndex:
    """Vectorized ball enumeration over integer-encoded points."""

    def __init__(self, params: SpaceParams):
        self.params = params
        self.size = params.space_size()
        self.volume = ball_volume(params)
        self.digits = _digit_matrix(params, self.size)
        self.weights = np.array(
            [params.q ** (params.n - 1 - i) for i in range(params.n)], dtype=np.int64
        )
        self.patterns = _delta_patterns(params)
        self.matrix: np.ndarray | None = None
        if self.size * self.volume <= _NEIGHBOR_MATRIX_GUARD:
            self.matrix = self._balls(np.arange(self.size, dtype=np.int64))

    def _balls(self, ids: np.ndarray) -> np.ndarray:
        """Ball members for each id, shape (len(ids), volume); column 0 is
        the point itself."""
        q = self.params.q
        out = np.empty((len(ids), self.volume), dtype=np.int64)
        out[:, 0] = ids
        col = 1
        for positions, offsets in self.patterns:
            shifted = ids
            for p, off in zip(positions, offsets):
                digit = self.digits[ids, p]
                shifted = shifted + ((digit + off) % q - digit) * self.weights[p]
            out[:, col] = shifted
            col += 1
        return out

    def balls(self, ids: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[ids]
        return self._balls(np.asarray(ids, dtype=np.int64))


def coordinate_fixing_cover(params: SpaceParams, max_points: int = GREEDY_POINT_GUARD) -> Cover:
    """All q^(n-eps) templates with the last epsilon coordinates pinned to 0.

    Always a certified cover: every point agrees with some center on the
    free coordinates and differs from it on at most epsilon pinned ones.
    """
    free = params.n - params.epsilon
    count = params.q**free
    if count > max_points:
        raise CapacityError(
            f"coordinate-fixing cover would hold {count} centers (guard {max_points})"
        )
    tail = (0,) * params.epsilon
    centers = tuple(
        head + tail for head in itertools.product(range(params.q), repeat=free)
    )
    return Cover(params=params, centers=centers, certified=True)


def greedy_cover(params: SpaceParams, max_points: int = GREEDY_POINT_GUARD) -> Cover:
    """Classic greedy set cover over radius-epsilon balls.

    Repeatedly picks the center covering the most still-uncovered points,
    breaking ties toward the lexicographically smallest center, until all
    of Z_q^n is covered.  Certified by construction; the size obeys the
    harmonic-factor guarantee (asserted by callers/tests, not here).
    """
    size = params.space_size()
    if size > max_points:
        raise CapacityError(
            f"greedy cover needs the full space materialized: {size} points (guard {max_points})"
        )
    index = _BallIndex(params)
    gain = np.full(size, index.volume, dtype=np.int64)
    covered = np.zeros(size, dtype=bool)
    remaining = size
    chosen: list[int] = []
    while remaining > 0:
        c = int(np.argmax(gain))  # first max == lexicographically smallest
        ball = index.balls(np.array([c], dtype=np.int64))[0]
        fresh = ball[~covered[ball]]
        if len(fresh) == 0:
            raise InternalError("greedy selected a useless center")
        covered[fresh] = True
        remaining -= len(fresh)
        touched = index.balls(fresh).ravel()
        np.subtract.at(gain, touched, 1)
        chosen.append(c)
    centers = tuple(template_from_index(params, c) for c in chosen)
    return Cover(params=params, centers=centers, certified=True)


def verify_cover(cover: Cover, max_points: int = GREEDY_POINT_GUARD) -> bool:
    """Exhaustively re-check that every point lies within epsilon of some
    center.  Independent of the construction bookkeeping."""
    params = cover.params
    size = params.space_size()
    if size > max_points:
        raise CapacityError(f"cannot verify cover over {size} points (guard {max_points})")
    index = _BallIndex(params)
    covered = np.zeros(size, dtype=bool)
    ids = np.array([template_index(params, c) for c in cover.centers], dtype=np.int64)
    for row in index.balls(ids):
        covered[row] = True
    return bool(covered.all())


def exact_min_cover_size(params: SpaceParams, max_points: int = EXACT_POINT_GUARD) -> int:
    """Exact minimum number of radius-epsilon balls covering Z_q^n.

    Branch and bound: always branch on the smallest uncovered point (any
    cover must pick a center inside its ball), prune with the volume lower
    bound ceil(uncovered / |B|), seed the incumbent with the greedy size.
    Tiny instances only.
    """
    size = params.space_size()
    if size > max_points:
        raise CapacityError(f"exact cover limited to {max_points} points, got {size}")
    index = _BallIndex(params)
    vol = index.volume
    ball_mask = []
    for i in range(size):
        mask = 0
        for m in index.balls(np.array([i], dtype=np.int64))[0]:
            mask |= 1 << int(m)
        ball_mask.append(mask)

    full = (1 << size) - 1
    best = len(greedy_cover(params, max_points=max_points))

    def branch(uncovered: int, used: int) -> None:
        nonlocal best
        if uncovered == 0:
            best = min(best, used)
            return
        missing = uncovered.bit_count()
        if used + (missing + vol - 1) // vol >= best:
            return
        p = (uncovered & -uncovered).bit_length() - 1  # lowest uncovered point
        for center in index.balls(np.array([p], dtype=np.int64))[0]:
            branch(uncovered & ~ball_mask[int(center)], used + 1)

    branch(full, 0)
    return best


def covering_search(oracle: Oracle, cover: Cover) -> Template:
    """Query the centers in order and return the first accepted one.

    A certified cover guarantees acceptance before exhaustion, so running
    out of centers indicates a broken oracle/cover pairing.
    """
    if not cover.certified:
        raise UsageError("covering search requires a certified cover")
    if cover.params != oracle.params:
        raise UsageError("cover and oracle disagree on space parameters")
    for center in cover.centers:
        if oracle.query(center).accepted:
            return center
    raise InternalError("certified cover exhausted without an acceptance")


# --- export / import ----------------------------------------------------------


def save_cover(cover: Cover, path: str | Path) -> None:
    """Write one q-ary digit string per center, preceded by a parameter
    header line."""
    params = cover.params
    if params.q > len(_EXPORT_DIGITS):
        raise UsageError(f"export supports q <= {len(_EXPORT_DIGITS)}")
    lines = [
        f"# q={params.q} n={params.n} epsilon={params.epsilon} certified={int(cover.certified)}"
    ]
    for c in cover.centers:
        lines.append("".join(_EXPORT_DIGITS[v] for v in c))
    Path(path).write_text("\n".join(lines) + "\n")


def load_cover(path: str | Path) -> Cover:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise UsageError("cover file missing parameter header")
    fields = dict(part.split("=") for part in lines[0][1:].split())
    params = SpaceParams(int(fields["q"]), int(fields["n"]), int(fields["epsilon"]))
    centers = []
    for ln in lines[1:]:
        if len(ln) != params.n:
            raise UsageError(f"center {ln!r} has wrong length")
        centers.append(tuple(_EXPORT_DIGITS.index(ch) for ch in ln))
    for c in centers:
        if any(v >= params.q for v in c):
            raise UsageError("center digit outside the alphabet")
    return Cover(params=params, centers=tuple(centers), certified=bool(int(fields["certified"])))
