"""Shared brute-force oracles for the test suite.

These deliberately avoid the library's own combinatorics so that derived
expectations stay independent of the code paths they check.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from matchleak import SpaceParams


def brute_ball_count(params: SpaceParams, center: tuple[int, ...]) -> int:
    """Count ball members by scanning the whole space, pure-Python distance."""
    count = 0
    for point in itertools.product(range(params.q), repeat=params.n):
        d = sum(1 for a, b in zip(center, point) if a != b)
        if d <= params.epsilon:
            count += 1
    return count


def weight_histogram(q: int, n: int) -> np.ndarray:
    """Number of points at each distance from the all-zeros vector, by
    enumeration of integer encodings (digit counting, no binomials)."""
    ids = np.arange(q**n, dtype=np.int64)
    nonzero = np.zeros(q**n, dtype=np.int16)
    base = 1
    for _ in range(n):
        nonzero += ((ids // base) % q != 0).astype(np.int16)
        base *= q
    return np.bincount(nonzero, minlength=n + 1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
