"""Edge-weighted random walks on the torus and their mixing.

``P(u, v) = p(u, v) / Z`` for ``v != u``, where ``Z`` sums ``p(u, .)`` over the
allowed targets.  With no forbidden set ``P`` is symmetric and doubly
stochastic, so the uniform law is stationary.  Dense matrices are only built
for ``N <= 32``; large-``N`` quantities go through ring sums.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .graph import C_CRIT, GraphParams, second_moment_sum
from .torus import check_side, distance_from_ids, point_to_id, ring_probabilities, ring_sizes, ring_table

__all__ = [
    "DENSE_CAP",
    "KernelSpec",
    "kernel_row",
    "dense_kernel",
    "tv_distance",
    "MixingReport",
    "mixing_profile",
    "return_probability",
    "DominanceReport",
    "two_step_dominance_check",
    "two_step_weight",
    "row_inflation",
    "restricted_walk_sample",
    "restricted_walk_endpoints",
]

DENSE_CAP = 32
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    N: int
    c: float = C_CRIT
    forbidden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        check_side(self.N)
        if not self.c > 0:
            raise ValueError("the walk needs c > 0")
        object.__setattr__(self, "forbidden", frozenset(int(a) for a in self.forbidden))

    @property
    def n(self) -> int:
        return self.N * self.N

    @property
    def c1(self) -> float:
        return self.c / 2.0

    def probs(self) -> np.ndarray:
        return ring_probabilities(self.N, self.c, 1.0)


def _vid(u, N: int) -> int:
    return int(u) if isinstance(u, (int, np.integer)) else point_to_id(u, N)


def kernel_row(spec: KernelSpec, u) -> np.ndarray:
    """Row ``P_A(u, .)`` as a length-``n`` vector; zero on ``A`` and at ``u``."""
    N = spec.N
    u = _vid(u, N)
    if u in spec.forbidden:
        raise ValueError(f"start state {u} is forbidden")
    w = spec.probs()[distance_from_ids(np.arange(spec.n), u, N)]
    if spec.forbidden:
        w[np.fromiter(spec.forbidden, dtype=np.int64)] = 0.0
    Z = math.fsum(w.tolist())
    if Z <= 0:
        raise ValueError("all targets are forbidden")
    return w / Z


def dense_kernel(spec: KernelSpec) -> np.ndarray:
    if spec.N > DENSE_CAP:
        raise ValueError(f"dense kernel limited to N <= {DENSE_CAP}")
    if spec.forbidden:
        raise ValueError("dense kernel is built for the unrestricted chain")
    n = spec.n
    ids = np.arange(n)
    w = spec.probs()[distance_from_ids(ids[:, None], ids[None, :], spec.N)]
    Z = math.fsum(w[0].tolist())  # translation invariance: same for every row
    return w / Z


def tv_distance(mu, nu, tol: float = 1e-9) -> float:
    """Half the L1 distance between two probability vectors."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != nu.shape:
        raise ValueError(f"dimension mismatch: {mu.shape} vs {nu.shape}")
    for x in (mu, nu):
        if abs(x.sum() - 1.0) > tol or np.any(x < -tol):
            raise ValueError("input is not a probability vector")
    return float(min(max(0.5 * np.abs(mu - nu).sum(), 0.0), 1.0))


@dataclass
class MixingReport:
    N: int
    c1: float
    k: np.ndarray
    max_tv: np.ndarray
    bound: np.ndarray
    starts: np.ndarray

    @property
    def passed(self) -> bool:
        sel = self.k >= 2
        return bool(np.all(self.max_tv[sel] <= self.bound[sel]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "max_tv", "bound"])
            for k, tv, b in zip(self.k, self.max_tv, self.bound):
                w.writerow([int(k), repr(float(tv)), repr(float(b))])


def mixing_profile(spec: KernelSpec, k_max: int, start_states: Optional[Sequence[int]] = None,
                   n_starts: int = 16, seed: int = 0) -> MixingReport:
    """``max_u TV(P^k(u, .), uniform)`` for ``k = 1..k_max`` against ``(1 - c/2)^(k/2 - 1)``.

    The maximum is taken over ``start_states`` (default: ``n_starts`` vertices
    drawn with ``seed``).  By translation invariance every start gives the
    same profile.
    """
    P = dense_kernel(spec)
    n = spec.n
    if start_states is None:
        rng = np.random.default_rng(seed)
        start_states = rng.choice(n, size=min(n_starts, n), replace=False)
    starts = np.array([_vid(u, spec.N) for u in start_states], dtype=np.int64)
    rows = P[starts].copy()
    ks = np.arange(1, k_max + 1)
    tv = np.empty(k_max)
    for i in range(k_max):
        tv[i] = float(np.max(0.5 * np.abs(rows - 1.0 / n).sum(axis=1)))
        rows = rows @ P
    bound = (1.0 - spec.c1) ** (ks / 2.0 - 1.0)
    return MixingReport(spec.N, spec.c1, ks, tv, bound, starts)


def return_probability(spec: KernelSpec) -> float:
    """``P^2(u, u) = sum_r N_r p_r^2 / Z_N^2``, computed through ring sums."""
    params = GraphParams(spec.N, spec.c)
    sizes = ring_sizes(spec.N)
    p = spec.probs()
    Z = math.fsum((sizes[1:] * p[1:]).tolist())
    return second_moment_sum(params) / (Z * Z)


@dataclass
class DominanceReport:
    checked: int
    violations: list
    worst_ratio: float  # max of P^k(u, v) / P^2(u, u)

    @property
    def passed(self) -> bool:
        return not self.violations


def two_step_dominance_check(spec: KernelSpec, pairs: Optional[Iterable[tuple[int, int]]] = None,
                             k_max: int = 8, rtol: float = 1e-12) -> DominanceReport:
    """Check ``P^k(u, v) <= P^2(u, u)`` for ``2 <= k <= k_max``.

    Without ``pairs`` every ``(u, v)`` is checked.
    """
    P = dense_kernel(spec)
    n = spec.n
    if pairs is None:
        us = np.arange(n)
        pair_list = None
    else:
        pair_list = [(_vid(u, spec.N), _vid(v, spec.N)) for u, v in pairs]
        us = np.unique([u for u, _ in pair_list])
    rows = P[us] @ P  # k = 2
    ret = np.einsum("ij,ji->i", P[us], P[:, us])  # P^2(u, u)
    index = {int(u): i for i, u in enumerate(us)}
    violations, checked, worst = [], 0, 0.0
    for k in range(2, k_max + 1):
        if pair_list is None:
            ratio = rows / ret[:, None]
            checked += ratio.size
            bad = np.argwhere(ratio > 1.0 + rtol)
            violations += [(k, int(us[i]), int(j)) for i, j in bad]
            worst = max(worst, float(ratio.max()))
        else:
            for u, v in pair_list:
                i = index[u]
                r = rows[i, v] / ret[i]
                checked += 1
                worst = max(worst, float(r))
                if r > 1.0 + rtol:
                    violations.append((k, u, v))
        rows = rows @ P
    return DominanceReport(checked, violations, worst)


def two_step_weight(N: int, c: float, u, v) -> float:
    """``sum_{x != u, v} p(u, x) p(x, v)`` (an ``O(N^2)`` sum, no matrices)."""
    u, v = _vid(u, N), _vid(v, N)
    p = ring_probabilities(N, c, 1.0)
    ids = np.arange(N * N)
    w = p[distance_from_ids(ids, u, N)] * p[distance_from_ids(ids, v, N)]
    return math.fsum(w.tolist())  # p(u, u) = 0 removes x = u and x = v


def row_inflation(spec: KernelSpec, u) -> float:
    """``P_A(u, v) / P(u, v) = Z_N / Z_{N,A}(u)`` for allowed ``v``."""
    N = spec.N
    u = _vid(u, N)
    p = spec.probs()
    sizes = ring_sizes(N)
    Z = math.fsum((sizes[1:] * p[1:]).tolist())
    if not spec.forbidden:
        return 1.0
    A = np.fromiter(spec.forbidden, dtype=np.int64)
    ZA = Z - math.fsum(p[distance_from_ids(A, u, N)].tolist())
    if ZA <= 0:
        raise ValueError("all targets are forbidden")
    return Z / ZA


class _RowSampler:
    """Draws from the unrestricted row ``P(u, .)``: a ring, then a member."""

    def __init__(self, N: int, c: float):
        self.N = N
        self.t = ring_table(N)
        p = ring_probabilities(N, c, 1.0)
        mass = self.t.sizes * p
        self.cum = np.cumsum(mass[1:]) / mass[1:].sum()
        self.cum[-1] = 1.0

    def draw(self, u, rng: np.random.Generator, size=None):
        r = np.searchsorted(self.cum, rng.random(size), side="right") + 1
        m = np.floor(rng.random(size) * self.t.sizes[r]).astype(np.int64)
        g = self.t.starts[r] + m
        N = self.N
        ux, uy = np.divmod(u, N)
        return ((ux + self.t.dx[g]) % N) * N + (uy + self.t.dy[g]) % N


def restricted_walk_sample(spec: KernelSpec, L: int, start, rng: np.random.Generator,
                           forbidden: Optional[Callable[[int], Iterable[int]]] = None,
                           max_rejections: int = 1000) -> list[int]:
    """A path ``a_1 .. a_{L+1}`` of the walk that never revisits a state.

    Step ``i`` moves with ``P_{A_i u {a_1..a_i}}(a_i, .)`` where ``A_i`` is
    ``forbidden(i)`` (the kernel's own forbidden set when no callback is given).
    Draws come from the unrestricted row and are rejected if not allowed,
    which yields exactly the renormalized row.
    """
    N = spec.N
    a = _vid(start, N)
    sampler = _RowSampler(N, spec.c)
    path = [a]
    seen = {a}
    for i in range(1, L + 1):
        blocked = set(forbidden(i)) if forbidden is not None else set(spec.forbidden)
        blocked |= seen
        cur = path[-1]
        for _ in range(max_rejections):
            x = int(sampler.draw(cur, rng))
            if x not in blocked:
                break
        else:
            row = kernel_row(KernelSpec(N, spec.c, frozenset(blocked - {cur})), cur)
            row[list(blocked)] = 0.0
            tot = row.sum()
            if tot <= 0:
                raise ValueError(f"no allowed move at step {i}")
            x = int(rng.choice(spec.n, p=row / tot))
        path.append(x)
        seen.add(x)
    return path


def restricted_walk_endpoints(spec: KernelSpec, L: int, start, M: int,
                              rng: np.random.Generator) -> np.ndarray:
    """``M`` independent copies of ``a_{L+1}`` with only self-avoidance imposed."""
    if spec.forbidden:
        raise ValueError("batched sampler supports an empty forbidden set only")
    N = spec.N
    sampler = _RowSampler(N, spec.c)
    traj = np.empty((M, L + 1), dtype=np.int64)
    traj[:, 0] = _vid(start, N)
    for i in range(1, L + 1):
        cur = traj[:, i - 1]
        todo = np.arange(M)
        while todo.size:
            x = sampler.draw(cur[todo], rng, size=todo.size)
            ok = ~np.any(traj[todo, :i] == x[:, None], axis=1)
            traj[todo[ok], i] = x[ok]
            todo = todo[~ok]
    return traj[:, L]
