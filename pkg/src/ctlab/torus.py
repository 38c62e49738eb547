"""Geometry of the discrete two-dimensional torus.

Vertices are pairs ``(x, y)`` with ``0 <= x, y < N``.  Internally a vertex is
often handled through its integer id ``x * N + y``.  The distance is the
folded L1 distance ``rho(u, v) = rho_N(u1 - v1) + rho_N(u2 - v2)`` with
``rho_N(i) = min(i mod N, N - i mod N)``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "TorusPoint",
    "RingTable",
    "check_side",
    "fold",
    "torus_distance",
    "max_distance",
    "ring_size",
    "ring_sizes",
    "ring_offsets",
    "enumerate_ring",
    "ring_table",
    "edge_probability",
    "ring_probabilities",
    "point_to_id",
    "id_to_point",
    "distance_from_ids",
]


class TorusPoint(NamedTuple):
    x: int
    y: int


def check_side(N: int) -> None:
    if int(N) != N or N < 3:
        raise ValueError(f"torus side N must be an integer >= 3, got {N!r}")


def fold(i: int, N: int) -> int:
    """Folded one-dimensional distance ``min(i mod N, N - i mod N)``."""
    i %= N
    return min(i, N - i)


def torus_distance(u, v, N: int) -> int:
    check_side(N)
    return fold(u[0] - v[0], N) + fold(u[1] - v[1], N)


def max_distance(N: int) -> int:
    """Largest attainable distance: ``N`` for even ``N``, ``N - 1`` for odd."""
    return 2 * (N // 2)


def ring_size(N: int, r: int) -> int:
    """Number of vertices at distance exactly ``r`` from any fixed vertex.

    Returns 0 for ``r`` outside ``1..max_distance(N)``.
    """
    check_side(N)
    if r < 1 or r > max_distance(N):
        return 0
    if N % 2 == 1:
        return 4 * r if 2 * r < N else 4 * (N - r)
    if 2 * r < N:
        return 4 * r
    if 2 * r == N:
        return 4 * r - 2
    if r < N:
        return 4 * (N - r)
    return 1


def _axis_offsets(a: int, N: int) -> list[int]:
    # offsets d in [0, N) with fold(d, N) == a
    if a == 0:
        return [0]
    if 2 * a == N:
        return [a]
    return [a, N - a]


@lru_cache(maxsize=None)
def _ring_offsets_cached(N: int, r: int) -> np.ndarray:
    half = N // 2
    pairs = []
    for a in range(max(0, r - half), min(r, half) + 1):
        for dx in _axis_offsets(a, N):
            for dy in _axis_offsets(r - a, N):
                pairs.append((dx, dy))
    pairs.sort()
    out = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    out.setflags(write=False)
    return out


def ring_offsets(N: int, r: int) -> np.ndarray:
    """Offsets ``(dx, dy)`` in ``[0, N)^2`` of the ring at distance ``r``.

    Built by parametrizing the L1 sphere, so the cost is ``O(N_r)``.  Rows are
    in canonical order: increasing ``dx``, then increasing ``dy``.
    """
    check_side(N)
    if r < 1 or r > max_distance(N):
        return np.empty((0, 2), dtype=np.int64)
    return _ring_offsets_cached(N, r)


def enumerate_ring(center, r: int, N: int) -> list[TorusPoint]:
    off = ring_offsets(N, r)
    cx, cy = center
    return [TorusPoint((cx + int(dx)) % N, (cy + int(dy)) % N) for dx, dy in off]


class RingTable(NamedTuple):
    """All rings of an ``N``-torus packed into flat arrays.

    ``sizes[r]`` is ``N_r`` (``sizes[0] == 0``); the offsets of ring ``r`` are
    ``dx[starts[r]:starts[r] + sizes[r]]`` and likewise ``dy``.
    """

    N: int
    sizes: np.ndarray
    starts: np.ndarray
    dx: np.ndarray
    dy: np.ndarray


def ring_sizes(N: int) -> np.ndarray:
    """``N_r`` for ``r = 0..max_distance(N)`` without enumerating offsets."""
    check_side(N)
    r = np.arange(max_distance(N) + 1, dtype=np.int64)
    sizes = np.where(2 * r < N, 4 * r, np.where(2 * r == N, 4 * r - 2, 4 * (N - r)))
    sizes[0] = 0
    if N % 2 == 0:
        sizes[N] = 1
    return sizes


@lru_cache(maxsize=32)
def ring_table(N: int) -> RingTable:
    check_side(N)
    R = max_distance(N)
    sizes = ring_sizes(N)
    starts = np.zeros(R + 1, dtype=np.int64)
    starts[1:] = np.cumsum(sizes)[:-1]
    offs = np.concatenate([ring_offsets(N, r) for r in range(1, R + 1)])
    dx = np.ascontiguousarray(offs[:, 0])
    dy = np.ascontiguousarray(offs[:, 1])
    for a in (sizes, starts, dx, dy):
        a.setflags(write=False)
    return RingTable(N, sizes, starts, dx, dy)


def _check_coupling(c: float, alpha: float) -> None:
    # c == 0 is accepted as the empty-graph degenerate case
    if not c >= 0:
        raise ValueError(f"coupling c must be non-negative, got {c!r}")
    if not 0 <= alpha < 2:
        raise ValueError(f"decay exponent alpha must lie in [0, 2), got {alpha!r}")


def edge_probability(N: int, r: int, c: float, alpha: float = 1.0) -> float:
    """``min{c / (N^(2 - alpha) r^alpha), 1}``; zero at ``r == 0`` (no loops)."""
    check_side(N)
    _check_coupling(c, alpha)
    if r <= 0:
        return 0.0
    return min(c / (N ** (2.0 - alpha) * r**alpha), 1.0)


def ring_probabilities(N: int, c: float, alpha: float = 1.0) -> np.ndarray:
    """Array ``p[r]`` for ``r = 0..max_distance(N)`` with ``p[0] == 0``."""
    check_side(N)
    _check_coupling(c, alpha)
    r = np.arange(max_distance(N) + 1, dtype=np.float64)
    p = np.zeros_like(r)
    p[1:] = np.minimum(c / (N ** (2.0 - alpha) * r[1:] ** alpha), 1.0)
    return p


def point_to_id(p, N: int) -> int:
    return (p[0] % N) * N + (p[1] % N)


def id_to_point(i: int, N: int) -> TorusPoint:
    return TorusPoint(int(i) // N, int(i) % N)


def distance_from_ids(a, b, N: int) -> np.ndarray:
    """Vectorized torus distance between vertex-id arrays ``a`` and ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    dx = (a // N - b // N) % N
    dy = (a % N - b % N) % N
    return np.minimum(dx, N - dx) + np.minimum(dy, N - dy)
