"""Q-ary vector space with the Hamming metric.

Templates live in Z_q^n = {0, ..., q-1}^n and are represented as plain
tuples of ints.  This module holds the metric, ball combinatorics,
entropy/harmonic helpers, index encoding (lexicographic rank), and seeded
sampling.  Everything here is pure given its inputs.
"""

from __future__ import annotations

import itertools
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import UsageError

Template = tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SpaceParams:
    """Alphabet size q, dimension n, and acceptance threshold epsilon.

    q >= 2, n >= 1 and 0 <= epsilon <= n are enforced here.  Attacks that
    additionally need epsilon < n check that at their own entry points.
    """

    q: int
    n: int
    epsilon: int

    def __post_init__(self) -> None:
        if not isinstance(self.q, numbers.Integral) or self.q < 2:
            raise UsageError(f"alphabet size q must be an integer >= 2, got {self.q!r}")
        if not isinstance(self.n, numbers.Integral) or self.n < 1:
            raise UsageError(f"dimension n must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.epsilon, numbers.Integral) or not 0 <= self.epsilon <= self.n:
            raise UsageError(
                f"threshold epsilon must be an integer in [0, n], got {self.epsilon!r}"
            )
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "epsilon", int(self.epsilon))

    def space_size(self) -> int:
        """Number of points in the space, q**n (exact int)."""
        return self.q**self.n


def as_template(params: SpaceParams, coords: Sequence[int]) -> Template:
    """Validate a coordinate sequence against params and return it as a tuple.

    Raises UsageError on wrong length, non-integer entries, or out-of-range
    values.
    """
    t = tuple(int(c) for c in coords)
    if len(t) != params.n:
        raise UsageError(f"template has length {len(t)}, expected n={params.n}")
    for c, orig in zip(t, coords):
        if not isinstance(orig, numbers.Integral):
            raise UsageError(f"template coordinates must be integers, got {orig!r}")
        if not 0 <= c < params.q:
            raise UsageError(f"coordinate {c} outside [0, {params.q - 1}]")
    return t


def hamming_distance(x: Sequence[int], y: Sequence[int]) -> int:
    """Number of coordinates where x and y differ.

    Symmetric, zero iff x == y.  Raises UsageError on length mismatch.
    """
    if len(x) != len(y):
        raise UsageError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return sum(1 for a, b in zip(x, y) if a != b)


def ball_volume(params: SpaceParams) -> int:
    """|B(x, epsilon)| = sum_{i<=epsilon} C(n,i) (q-1)^i, exact integer.

    Independent of the center x.  Uses arbitrary-precision arithmetic so it
    stays exact far beyond 64-bit range.
    """
    q, n, eps = params.q, params.n, params.epsilon
    return sum(math.comb(n, i) * (q - 1) ** i for i in range(eps + 1))


def q_ary_entropy(q: int, r: float) -> float:
    """q-ary entropy h_q(r) = r log_q(q-1) - r log_q r - (1-r) log_q(1-r).

    Endpoint conventions are fixed explicitly: h_q(0) = 0 and
    h_q(1) = log_q(q-1) (the 0*log 0 terms vanish).
    """
    if q < 2:
        raise UsageError("q must be >= 2")
    if not 0.0 <= r <= 1.0:
        raise UsageError(f"r must lie in [0, 1], got {r}")
    if r == 0.0:
        return 0.0
    if r == 1.0:
        return math.log(q - 1) / math.log(q)
    lq = math.log(q)
    return (
        r * math.log(q - 1) / lq
        - r * math.log(r) / lq
        - (1.0 - r) * math.log(1.0 - r) / lq
    )


def harmonic_number(n: int) -> float:
    """H(n) = sum_{i=1}^{n} 1/i.  Satisfies H(n) <= ln(n) + 1."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if n > 10_000:
        # vectorized for large n; float error stays far below 1e-9 here
        return float((1.0 / np.arange(1, n + 1)).sum())
    return math.fsum(1.0 / i for i in range(1, n + 1))


def harmonic_number_exact(n: int) -> Fraction:
    """H(n) as an exact rational; intended for desk-scale n."""
    if n < 1:
        raise UsageError("n must be >= 1")
    return sum((Fraction(1, i) for i in range(1, n + 1)), Fraction(0))


# --- lexicographic index encoding -----------------------------------------
#
# Coordinate 1 is the most significant digit, so integer order on indices
# equals lexicographic order on templates.  Used by the covering module and
# by brute-force test oracles.


def template_index(params: SpaceParams, t: Sequence[int]) -> int:
    """Lexicographic rank of t in Z_q^n."""
    idx = 0
    for c in t:
        idx = idx * params.q + int(c)
    return idx


def template_from_index(params: SpaceParams, idx: int) -> Template:
    """Inverse of template_index."""
    q, n = params.q, params.n
    coords = [0] * n
    for i in range(n - 1, -1, -1):
        idx, coords[i] = divmod(idx, q)
    return tuple(coords)


def enumerate_templates(params: SpaceParams) -> Iterator[Template]:
    """All q^n templates in lexicographic order."""
    return itertools.product(range(params.q), repeat=params.n)


def ball_templates(params: SpaceParams, center: Sequence[int]) -> Iterator[Template]:
    """All templates within distance epsilon of center.

    Deterministic order: distance ascending, then changed-position sets and
    replacement values lexicographically.
    """
    center = tuple(center)
    q, n, eps = params.q, params.n, params.epsilon
    yield center
    for w in range(1, eps + 1):
        for positions in itertools.combinations(range(n), w):
            choices = [
                [v for v in range(q) if v != center[p]] for p in positions
            ]
            for values in itertools.product(*choices):
                t = list(center)
                for p, v in zip(positions, values):
                    t[p] = v
                yield tuple(t)


# --- seeded sampling --------------------------------------------------------


def sample_template(params: SpaceParams, rng: np.random.Generator) -> Template:
    """Uniform draw from Z_q^n; deterministic for a fixed generator state."""
    return tuple(int(v) for v in rng.integers(0, params.q, size=params.n))


def sample_at_distance(
    params: SpaceParams, x: Sequence[int], k: int, rng: np.random.Generator
) -> Template:
    """A uniform template at Hamming distance exactly k from x.

    Rejection-free: picks the k error positions uniformly among C(n,k)
    subsets, then each erroneous value uniformly among the q-1 non-matching
    symbols.  O(n) cost and an exact distance guarantee.
    """
    if not 0 <= k <= params.n:
        raise UsageError(f"k must lie in [0, n], got {k}")
    x = as_template(params, x)
    if k == 0:
        return x
    y = list(x)
    positions = rng.choice(params.n, size=k, replace=False)
    for p in positions:
        offset = int(rng.integers(1, params.q))
        y[p] = (y[p] + offset) % params.q
    return tuple(y)
