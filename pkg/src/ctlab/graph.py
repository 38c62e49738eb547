"""The random graph on the torus: analytic sums, eager sampling, lazy revelation.

Edges ``{u, v}`` are present independently with probability
``min{c / (N^(2 - alpha) rho(u, v)^alpha), 1}``.  At ``alpha = 1`` the
critical coupling is ``1 / (4 log 2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .torus import (
    TorusPoint,
    _check_coupling,
    check_side,
    distance_from_ids,
    id_to_point,
    point_to_id,
    ring_probabilities,
    ring_sizes,
    ring_table,
)

__all__ = [
    "C_CRIT",
    "GraphParams",
    "expected_degree_sum",
    "degree_expansion",
    "degree_residual",
    "second_moment_sum",
    "neighbor_prob_mass",
    "ContractViolation",
    "RevealOracle",
    "GraphOracle",
    "reveal_neighbors",
    "AdjacencyGraph",
    "materialize_graph",
    "MATERIALIZE_CAP",
]

C_CRIT = 1.0 / (4.0 * math.log(2.0))
MATERIALIZE_CAP = 64


@dataclass(frozen=True)
class GraphParams:
    """Parameters of the graph.  ``critical=True`` forces ``c = 1/(4 log 2)``."""

    N: int
    c: float = C_CRIT
    alpha: float = 1.0
    critical: bool = False

    def __post_init__(self):
        check_side(self.N)
        if self.critical:
            object.__setattr__(self, "c", C_CRIT)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "alpha", float(self.alpha))
        _check_coupling(self.c, self.alpha)

    @classmethod
    def at_criticality(cls, N: int) -> "GraphParams":
        return cls(N=N, critical=True)

    @property
    def n(self) -> int:
        return self.N * self.N

    def ring_probs(self) -> np.ndarray:
        return ring_probabilities(self.N, self.c, self.alpha)

    def ring_sizes(self) -> np.ndarray:
        return ring_sizes(self.N)


def expected_degree_sum(params: GraphParams) -> float:
    """``sum_r p_r N_r``, the expected degree, with exactly rounded summation."""
    p = params.ring_probs()
    sizes = params.ring_sizes()
    return math.fsum(float(s) * float(q) for s, q in zip(sizes[1:], p[1:]))


def degree_expansion(N: int, c: float) -> float:
    """``4c log 2 - 2c/N - c/N^2`` for odd ``N``; the last term is ``2c/N^2`` for even ``N``.

    At ``alpha = 1`` the expected degree differs from this by ``O(N^-4)``.
    """
    last = c if N % 2 else 2 * c
    return 4 * c * math.log(2.0) - 2 * c / N - last / N**2


def degree_residual(params: GraphParams) -> float:
    return expected_degree_sum(params) - degree_expansion(params.N, params.c)


def second_moment_sum(params: GraphParams) -> float:
    """``sum_r N_r p_r^2``, i.e. ``sum_u p(v, u)^2``."""
    p = params.ring_probs()
    sizes = params.ring_sizes()
    return math.fsum(float(s) * float(q) * float(q) for s, q in zip(sizes[1:], p[1:]))


def _as_ids(vertices, N: int) -> np.ndarray:
    if isinstance(vertices, np.ndarray) and vertices.ndim == 1:
        return vertices.astype(np.int64)
    ids = [v if isinstance(v, (int, np.integer)) else point_to_id(v, N) for v in vertices]
    return np.asarray(ids, dtype=np.int64)


def neighbor_prob_mass(v, A: Iterable, params: GraphParams) -> float:
    """``sum_{u in A} p(v, u)`` for a vertex ``v`` and a vertex set ``A``."""
    N = params.N
    ids = np.unique(_as_ids(A, N))
    if ids.size == 0:
        return 0.0
    vid = v if isinstance(v, (int, np.integer)) else point_to_id(v, N)
    r = distance_from_ids(ids, vid, N)
    p = params.ring_probs()
    return math.fsum(p[r].tolist())


class ContractViolation(RuntimeError):
    """A lazy oracle was asked to process the same vertex twice."""


Available = Union[Callable[[int], bool], np.ndarray]


def _available_fn(available: Available) -> Callable[[int], bool]:
    if callable(available):
        return available
    mask = np.asarray(available, dtype=bool)
    return lambda u: bool(mask[u])


class _Ledger:
    """Bookkeeping shared by the oracles.

    Records the step at which each vertex was processed, the neighbors it
    accepted, and the step at which every vertex first became used.  An edge
    indicator for ``{a, b}`` is determined when the earlier-processed endpoint
    was processed while the other one was still available.
    """

    def __init__(self, n: int):
        self.n = n
        self.step = 0
        self.processed: dict[int, int] = {}
        self.accepted: dict[int, tuple[int, ...]] = {}
        self.entered: dict[int, int] = {}

    def begin(self, v: int) -> None:
        if v in self.processed:
            raise ContractViolation(f"vertex {v} was already processed at step {self.processed[v]}")
        self.step += 1
        self.processed[v] = self.step
        self.entered.setdefault(v, self.step)

    def finish(self, v: int, nbrs: list[int]) -> None:
        self.accepted[v] = tuple(nbrs)
        for u in nbrs:
            self.entered.setdefault(u, self.step)

    def edge(self, a: int, b: int) -> Optional[bool]:
        """Stored indicator of ``{a, b}``; ``None`` if it was never determined."""
        if a == b:
            return False
        ka = self.processed.get(a)
        kb = self.processed.get(b)
        if ka is None and kb is None:
            return None
        if kb is not None and (ka is None or kb < ka):
            a, b, ka = b, a, kb
        # ``a`` processed first, at step ka
        if b in self.accepted[a]:
            return True
        if self.entered.get(b, math.inf) > ka:
            return False
        return None


class RevealOracle:
    """Lazy edge revelation for the breadth-first walk.

    ``reveal(v, available)`` samples, ring by ring, ``Bin(N_r, p_r)`` hits on
    the full ring around ``v``, picks that many distinct ring members
    uniformly, and keeps the ones that are available.  Pairs between ``v`` and
    unavailable vertices are never needed again by the walk, so drawing and
    discarding them leaves every future query unbiased; an already
    determined pair is never overwritten.
    """

    def __init__(self, params: GraphParams, rng: Optional[np.random.Generator] = None):
        self.params = params
        self.rng = rng if rng is not None else np.random.default_rng()
        self.n = params.n
        self._table = ring_table(params.N)
        self._p = params.ring_probs()
        self.ledger = _Ledger(self.n)

    @property
    def fresh(self) -> bool:
        return self.ledger.step == 0

    def reveal(self, v: int, available: Available) -> list[int]:
        avail = _available_fn(available)
        self.ledger.begin(int(v))
        N = self.params.N
        t = self._table
        rng = self.rng
        counts = rng.binomial(t.sizes[1:], self._p[1:])
        vx, vy = divmod(int(v), N)
        out = []
        for r0 in np.flatnonzero(counts):
            r = r0 + 1
            size = int(t.sizes[r])
            k = int(counts[r0])
            members = rng.choice(size, k, replace=False) if k > 1 else rng.integers(size, size=1)
            base = int(t.starts[r])
            for m in members:
                u = ((vx + int(t.dx[base + m])) % N) * N + (vy + int(t.dy[base + m])) % N
                if avail(u):
                    out.append(u)
        self.ledger.finish(int(v), out)
        return out

    def edge(self, a: int, b: int) -> Optional[bool]:
        return self.ledger.edge(int(a), int(b))


class GraphOracle:
    """Answers revelation queries from a fixed adjacency structure.

    Used to run the same walk on a materialized graph, or on a hand-written
    stub graph for tracing small examples.
    """

    def __init__(self, n: int, adjacency: dict[int, Iterable[int]]):
        self.n = int(n)
        self._adj = {int(k): tuple(int(u) for u in vs) for k, vs in adjacency.items()}
        self.ledger = _Ledger(self.n)

    @classmethod
    def from_graph(cls, graph: "AdjacencyGraph") -> "GraphOracle":
        return cls(graph.n, graph.adjacency())

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "GraphOracle":
        adj: dict[int, list[int]] = {}
        for a, b in edges:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        return cls(n, adj)

    @property
    def fresh(self) -> bool:
        return self.ledger.step == 0

    def reveal(self, v: int, available: Available) -> list[int]:
        avail = _available_fn(available)
        self.ledger.begin(int(v))
        out = [u for u in self._adj.get(int(v), ()) if avail(u)]
        self.ledger.finish(int(v), out)
        return out

    def edge(self, a: int, b: int) -> Optional[bool]:
        return self.ledger.edge(int(a), int(b))


def reveal_neighbors(oracle, v, available) -> set[TorusPoint]:
    """Point-level wrapper around ``oracle.reveal``."""
    N = oracle.params.N
    vid = v if isinstance(v, (int, np.integer)) else point_to_id(v, N)
    if not callable(available) and not isinstance(available, np.ndarray):
        allowed = {u if isinstance(u, (int, np.integer)) else point_to_id(u, N) for u in available}
        available = allowed.__contains__
    return {id_to_point(u, N) for u in oracle.reveal(vid, available)}


@dataclass
class AdjacencyGraph:
    """Eagerly sampled graph: sorted ``(i, j)`` id pairs with ``i < j``."""

    N: int
    edges: np.ndarray
    degree: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.N * self.N

    @classmethod
    def from_edges(cls, N: int, edges) -> "AdjacencyGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        deg = np.bincount(e.ravel(), minlength=N * N)
        return cls(N, e, deg)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {}
        for a, b in self.edges.tolist():
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        return adj

    def write_edgelist(self, path, c: float, alpha: float, seed) -> None:
        N = self.N
        lines = [f"N {N} c {c!r} alpha {alpha!r} seed {seed}"]
        for a, b in self.edges.tolist():
            lines.append(f"{a // N} {a % N} {b // N} {b % N}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read_edgelist(cls, path) -> tuple["AdjacencyGraph", dict]:
        text = Path(path).read_text().splitlines()
        tok = text[0].split()
        if len(tok) != 8 or tok[0::2] != ["N", "c", "alpha", "seed"]:
            raise ValueError(f"bad edge-list header: {text[0]!r}")
        N = int(tok[1])
        meta = {"N": N, "c": float(tok[3]), "alpha": float(tok[5]), "seed": tok[7]}
        edges = []
        for line in text[1:]:
            if not line.strip():
                continue
            x1, y1, x2, y2 = map(int, line.split())
            edges.append((x1 * N + y1, x2 * N + y2))
        return cls.from_edges(N, edges), meta


def materialize_graph(params: GraphParams, rng: np.random.Generator, cap: int = MATERIALIZE_CAP) -> AdjacencyGraph:
    """Sample every pair independently.  ``O(N^4)``; refused above ``cap``."""
    N = params.N
    if N > cap:
        raise ValueError(f"materialize_graph: N={N} exceeds cap {cap}")
    n = params.n
    i, j = np.triu_indices(n, 1)
    p = params.ring_probs()[distance_from_ids(i, j, N)]
    keep = rng.random(i.size) < p
    edges = np.stack([i[keep], j[keep]], axis=1).astype(np.int64)
    deg = np.bincount(edges.ravel(), minlength=n)
    return AdjacencyGraph(N, edges, deg)
