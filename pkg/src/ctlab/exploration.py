"""Breadth-first walk over the random graph and its derived quantities.

Step ``k`` processes one vertex ``v_k``.  While active vertices exist the next
one is drawn uniformly from the active vertices of smallest depth; otherwise a
uniform unexplored vertex becomes a new root.  The neighbors of ``v_k`` among
the unexplored vertices are revealed and become active.  The walk
``z(1) = 0``, ``z(k + 1) = z(k) - 1 + |revealed at step k|`` first hits ``-m``
exactly when the ``m``-th component is complete.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .graph import GraphParams
from .rng import run_seeds
from .torus import ring_table

__all__ = [
    "BudgetError",
    "ExplorationTrace",
    "Components",
    "WalkBatch",
    "explore",
    "explore_fast",
    "explore_batch",
    "component_sizes",
    "rescale_walk",
    "rescale_index",
    "tree_distance",
    "steps_for_horizon",
]


class BudgetError(ValueError):
    """A requested time lies beyond the recorded part of the walk."""


@dataclass
class ExplorationTrace:
    """Everything recorded by one walk of ``steps`` steps.

    ``z[k - 1]`` holds ``z(k)`` for ``k = 1..steps + 1``; the per-step arrays
    ``revealed``, ``used``, ``active`` and ``processed`` are indexed by
    ``k - 1``.  ``parent[u]`` is the vertex that revealed ``u`` (``-1`` for
    roots, ``-2`` if ``u`` was never reached) and ``depth[u]`` its distance to
    the root of its tree.
    """

    n: int
    budget: int
    z: np.ndarray
    revealed: np.ndarray
    used: np.ndarray
    active: np.ndarray
    processed: np.ndarray
    parent: np.ndarray
    depth: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.processed)

    @property
    def roots(self) -> list[tuple[int, int]]:
        """``(step, vertex)`` for every root chosen so far."""
        return [(k + 1, int(v)) for k, v in enumerate(self.processed) if self.parent[v] == -1]

    def components(self) -> "Components":
        return component_sizes(self.z)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "z", "revealed", "I_size"])
            for k in range(self.steps):
                w.writerow([k + 1, int(self.z[k]), int(self.revealed[k]), int(self.used[k])])
            w.writerow([self.steps + 1, int(self.z[self.steps]), "", ""])

    def write_components_csv(self, path) -> None:
        comp = self.components()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "size", "completed_flag"])
            for i, s in enumerate(comp.sizes, start=1):
                w.writerow([i, int(s), 1])
            if comp.partial is not None:
                w.writerow([len(comp.sizes) + 1, int(comp.partial), 0])


def explore(oracle, rng: np.random.Generator, budget: Optional[int] = None,
            first_root: Optional[int] = None) -> ExplorationTrace:
    """Run the walk against any revelation oracle (``oracle.reveal``).

    ``budget`` defaults to the number of vertices, which explores the whole
    graph.  ``first_root`` pins ``v_1`` (used to trace stub graphs by hand).
    """
    if not getattr(oracle, "fresh", True):
        raise ValueError("explore needs a fresh oracle")
    n = int(oracle.n)
    K = n if budget is None else int(budget)
    if not 0 < K <= n:
        raise ValueError(f"budget must be in 1..{n}, got {K}")
    if first_root is not None and not 0 <= first_root < n:
        raise ValueError("first_root out of range")

    used = np.zeros(n, dtype=bool)
    pool = list(range(n))
    where = list(range(n))
    parent = np.full(n, -2, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    queue: list[int] = []
    head = gen_end = 0

    z = [0]
    revealed, sizes_used, active, processed = [], [], [], []

    def take(u: int) -> None:
        used[u] = True
        i = where[u]
        last = pool[-1]
        pool[i] = last
        where[last] = i
        pool.pop()

    def available(u: int) -> bool:
        return not used[u]

    for k in range(K):
        if head < len(queue):
            if head == gen_end:
                gen_end = len(queue)
            j = int(rng.integers(head, gen_end))
            queue[head], queue[j] = queue[j], queue[head]
            v = queue[head]
            head += 1
        elif pool:
            if k == 0 and first_root is not None:
                v = int(first_root)
            else:
                v = pool[int(rng.integers(len(pool)))]
            take(v)
            parent[v] = -1
            depth[v] = 0
        else:
            break
        nbrs = oracle.reveal(v, available)
        for u in nbrs:
            if used[u]:
                raise RuntimeError(f"oracle revealed unavailable vertex {u}")
            take(u)
            parent[u] = v
            depth[u] = depth[v] + 1
            queue.append(u)
        processed.append(v)
        revealed.append(len(nbrs))
        z.append(z[-1] - 1 + len(nbrs))
        sizes_used.append(n - len(pool))
        active.append(len(queue) - head)

    return ExplorationTrace(
        n=n,
        budget=K,
        z=np.asarray(z, dtype=np.int64),
        revealed=np.asarray(revealed, dtype=np.int64),
        used=np.asarray(sizes_used, dtype=np.int64),
        active=np.asarray(active, dtype=np.int64),
        processed=np.asarray(processed, dtype=np.int64),
        parent=parent,
        depth=depth,
    )


def _ring_arrays(params: GraphParams):
    t = ring_table(params.N)
    return t.sizes, params.ring_probs(), t.starts, t.dx, t.dy


def explore_fast(params: GraphParams, budget: Optional[int], seed: int,
                 first_root: Optional[int] = None) -> ExplorationTrace:
    """Compiled walk on the lazily revealed random graph (single run)."""
    n = params.n
    K = n if budget is None else int(budget)
    if not 0 < K <= n:
        raise ValueError(f"budget must be in 1..{n}, got {K}")
    sizes, probs, starts, dx, dy = _ring_arrays(params)
    ws = [np.empty(n, dtype=np.int64) for _ in range(5)]
    used = np.zeros(n, dtype=np.bool_)
    z = np.empty(K + 1, dtype=np.int64)
    out = [np.empty(K, dtype=np.int64) for _ in range(4)]
    s = _kernels.explore_run(np.uint32(seed), params.N, K, -1 if first_root is None else int(first_root),
                             sizes, probs, starts, dx, dy,
                             used, ws[0], ws[1], ws[2], ws[3], ws[4],
                             z, *out)
    return ExplorationTrace(n=n, budget=K, z=z[: s + 1], revealed=out[0][:s], used=out[1][:s],
                            active=out[2][:s], processed=out[3][:s], parent=ws[3], depth=ws[4])


class WalkBatch(NamedTuple):
    """Row ``i`` holds run ``i``; rows are padded past ``steps[i]``."""

    z: np.ndarray
    revealed: np.ndarray
    used: np.ndarray
    active: np.ndarray
    processed: np.ndarray
    steps: np.ndarray


def explore_batch(params: GraphParams, budget: int, seeds: Sequence[int]) -> WalkBatch:
    """Many independent compiled walks; run ``i`` depends only on ``seeds[i]``."""
    seeds = np.asarray(seeds, dtype=np.uint32)
    K = int(budget)
    if not 0 < K <= params.n:
        raise ValueError(f"budget must be in 1..{params.n}, got {K}")
    M = seeds.shape[0]
    z = np.zeros((M, K + 1), dtype=np.int64)
    arrs = [np.zeros((M, K), dtype=np.int64) for _ in range(4)]
    steps = np.zeros(M, dtype=np.int64)
    _kernels.explore_batch(seeds, params.N, K, *_ring_arrays(params), z, *arrs, steps)
    return WalkBatch(z, arrs[0], arrs[1], arrs[2], arrs[3], steps)


def explore_many(params: GraphParams, budget: int, master: int, tag: str, count: int,
                 start: int = 0) -> WalkBatch:
    return explore_batch(params, budget, run_seeds(master, tag, start, count))


class Components(NamedTuple):
    """Completed component sizes (descending) and the size of a cut component.

    ``partial`` counts the processed plus still-active vertices of the
    component in progress when the budget ran out, or is ``None``.
    """

    sizes: np.ndarray
    partial: Optional[int]
    order: np.ndarray  # completed sizes in the order they were revealed


def component_sizes(z) -> Components:
    """Sizes ``C_m = tau_m - tau_{m-1}`` with ``tau_m = min{k : z(k) = -m}``.

    Accepts a trace or the sequence ``z(1), z(2), ...``.
    """
    if isinstance(z, ExplorationTrace):
        z = z.z
    z = np.asarray(z, dtype=np.int64)
    if z.size == 0 or z[0] != 0:
        raise ValueError("z must start with z(1) = 0")
    if z.size > 1 and np.any(np.diff(z) < -1):
        raise ValueError("malformed walk: an increment is below -1")
    prev_min = np.minimum.accumulate(z)
    # with steps >= -1, the first visit to -m is a strict new minimum
    tau = np.flatnonzero(z[1:] < prev_min[:-1]) + 2  # 1-based k
    order = np.diff(np.concatenate([[1], tau]))
    L = z.size
    last = int(tau[-1]) if tau.size else 1
    partial = None
    if last < L:
        m = tau.size
        partial = int((L - last) + z[-1] + m + 1)
    return Components(np.sort(order)[::-1], partial, order)


def rescale_index(s: float, n: int) -> int:
    """The walk index ``1 + floor(n^(2/3) s)`` that represents time ``s``."""
    return 1 + int(math.floor(n ** (2.0 / 3.0) * s))


def steps_for_horizon(T: float, n: int) -> int:
    """Budget ``ceil(T n^(2/3))`` covering rescaled times up to ``T``."""
    return int(math.ceil(T * n ** (2.0 / 3.0)))


def rescale_walk(trace, n: int, s_grid) -> list[tuple[float, float]]:
    """``(s, n^(-1/3) z(1 + floor(n^(2/3) s)))`` for every ``s`` in the grid."""
    z = trace.z if isinstance(trace, ExplorationTrace) else np.asarray(trace)
    scale = n ** (-1.0 / 3.0)
    out = []
    for s in s_grid:
        k = rescale_index(s, n)
        if s < 0 or k > len(z):
            raise BudgetError(f"s={s} needs z({k}) but only {len(z)} values were recorded")
        out.append((float(s), scale * float(z[k - 1])))
    return out


def tree_distance(trace: ExplorationTrace, i: int, j: int) -> float:
    """Distance between ``v_i`` and ``v_j`` in the revealed forest.

    ``math.inf`` when they lie in different trees.
    """
    if not (1 <= i <= trace.steps and 1 <= j <= trace.steps):
        raise ValueError("step index out of range")
    a = int(trace.processed[i - 1])
    b = int(trace.processed[j - 1])
    parent, depth = trace.parent, trace.depth
    da, db = 0, 0
    while depth[a] > depth[b]:
        a = int(parent[a])
        da += 1
    while depth[b] > depth[a]:
        b = int(parent[b])
        db += 1
    while a != b:
        if parent[a] < 0:
            return math.inf
        a, b = int(parent[a]), int(parent[b])
        da += 1
        db += 1
    return float(da + db)
