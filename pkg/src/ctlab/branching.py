"""Galton-Watson process with offspring law ``sum_r Bin(N_r, p_r)``.

This law is the degree of a vertex in the torus graph and dominates the
generation sizes of the breadth-first trees.  Two samplers are provided: a
direct one (one binomial per ring) and a tabulated one built from the exact
probability mass function.  The pmf comes from the power series of
``log G(s) = sum_r N_r log(q_r + p_r s)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from . import _kernels
from .graph import GraphParams
from .rng import run_seeds, stream

__all__ = [
    "OffspringLaw",
    "TreeSummary",
    "TailEstimate",
    "sample_offspring",
    "simulate_tree",
    "simulate_trees",
    "max_tail_estimate",
]

PMF_TAIL = 1e-18


class OffspringLaw:
    """The offspring law of an ``N``-torus at coupling ``c``."""

    def __init__(self, N: int, c: float, alpha: float = 1.0):
        params = GraphParams(N, c, alpha)
        self.N = N
        self.c = params.c
        sizes = params.ring_sizes()[1:]
        probs = params.ring_probs()[1:]
        keep = (sizes > 0) & (probs > 0)
        self.sizes = np.ascontiguousarray(sizes[keep], dtype=np.int64)
        self.probs = np.ascontiguousarray(probs[keep], dtype=np.float64)
        self.mean = math.fsum((self.sizes * self.probs).tolist())
        self.variance = math.fsum((self.sizes * self.probs * (1 - self.probs)).tolist())
        self._pmf: Optional[np.ndarray] = None

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean**2

    @property
    def pmf(self) -> np.ndarray:
        """Exact pmf on ``0..L``; the omitted tail has mass below 1e-18."""
        if self._pmf is None:
            self._pmf = self._compute_pmf()
        return self._pmf

    def _compute_pmf(self) -> np.ndarray:
        if self.sizes.size == 0:
            return np.array([1.0])
        sure = self.probs >= 1.0
        shift = int(self.sizes[sure].sum())
        n_r = self.sizes[~sure].astype(np.float64)
        p_r = self.probs[~sure]
        out = []
        if n_r.size:
            rho = p_r / (1.0 - p_r)
            log_g0 = float(np.sum(n_r * np.log1p(-p_r)))
            g = [math.exp(log_g0)]
            a = [0.0]  # a[m] = coefficient of s^m in log G - log g0
            power = rho.copy()
            m = 0
            # terms past the mean decay faster than geometrically
            while m < 2 * self.mean + 2 or g[-1] > PMF_TAIL * 1e-3:
                m += 1
                a.append((-1) ** (m + 1) / m * float(np.dot(n_r, power)))
                power *= rho
                gm = sum(k * a[k] * g[m - k] for k in range(1, m + 1)) / m
                g.append(max(gm, 0.0))
                if m > 10_000:
                    raise RuntimeError("offspring pmf did not converge")
            out = g
        else:
            out = [1.0]
        pmf = np.zeros(shift + len(out))
        pmf[shift:] = out
        return pmf / pmf.sum()

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.pmf)
        c[-1] = 1.0
        return c


def sample_offspring(law: OffspringLaw, rng: np.random.Generator, size: Optional[int] = None,
                     method: str = "table"):
    """Offspring counts.  ``method="direct"`` draws every ring's binomial."""
    shape = () if size is None else (size,)
    m = int(np.prod(shape))
    if method == "direct":
        if law.sizes.size == 0:
            out = np.zeros(m, dtype=np.int64)
        else:
            out = np.empty(m, dtype=np.int64)
            chunk = max(1, 4_000_000 // law.sizes.size)
            for s in range(0, m, chunk):
                e = min(m, s + chunk)
                out[s:e] = rng.binomial(law.sizes, law.probs, size=(e - s, law.sizes.size)).sum(axis=1)
    elif method == "table":
        out = np.searchsorted(law.cdf(), rng.random(m), side="right").astype(np.int64)
    else:
        raise ValueError(f"unknown method {method!r}")
    return int(out[0]) if size is None else out


def sample_offspring_compiled(law: OffspringLaw, seed: int, size: int) -> np.ndarray:
    """Direct ring-by-ring draws through the compiled exact binomial."""
    out = np.empty(size, dtype=np.int64)
    _kernels.offspring_sums(np.uint32(seed), law.sizes, law.probs, size, out)
    return out


def _generation_total(law: OffspringLaw, counts, rng: np.random.Generator):
    """Total offspring of ``counts`` individuals (vectorized over trees)."""
    pmf = law.pmf
    if pmf.size == 1:
        return np.zeros_like(counts)
    tallies = rng.multinomial(counts, pmf)
    return tallies @ np.arange(pmf.size)


@dataclass
class TreeSummary:
    total: int
    max_generation: int  # max over k >= 0, so at least 1
    extinction_generation: Optional[int]  # first k with zeta_k = 0
    cap_hit: bool


def simulate_tree(law: OffspringLaw, rng: np.random.Generator, population_cap: int = 10**6) -> TreeSummary:
    zeta = 1
    total = 1
    biggest = 1
    k = 0
    while zeta > 0:
        if total >= population_cap:
            return TreeSummary(total, biggest, None, True)
        zeta = int(_generation_total(law, np.array([zeta]), rng)[0])
        k += 1
        total += zeta
        biggest = max(biggest, zeta)
    return TreeSummary(total, biggest, k, False)


def simulate_trees(law: OffspringLaw, M: int, rng: np.random.Generator, population_cap: int = 10**6):
    """Vectorized :func:`simulate_tree` for ``M`` trees.

    Returns arrays ``total, max_generation, extinction_generation (-1 if
    capped), cap_hit``.
    """
    total = np.ones(M, dtype=np.int64)
    biggest = np.ones(M, dtype=np.int64)
    ext = np.full(M, -1, dtype=np.int64)
    zeta = np.ones(M, dtype=np.int64)
    alive = np.arange(M)
    k = 0
    while alive.size:
        capped = total[alive] >= population_cap
        alive = alive[~capped]
        if not alive.size:
            break
        nxt = _generation_total(law, zeta[alive], rng)
        k += 1
        zeta[alive] = nxt
        total[alive] += nxt
        biggest[alive] = np.maximum(biggest[alive], nxt)
        dead = nxt == 0
        ext[alive[dead]] = k
        alive = alive[~dead]
    return total, biggest, ext, ext < 0


@dataclass
class TailEstimate:
    K: int
    samples: int
    hits: int
    value: float  # K * P(max_{k>=1} zeta_k > K)
    ci_low: float
    ci_high: float

    @property
    def p_hat(self) -> float:
        return self.hits / self.samples


def _max_exceeds(law: OffspringLaw, K: int, M: int, rng: np.random.Generator) -> int:
    zeta = np.ones(M, dtype=np.int64)
    hits = 0
    while zeta.size:
        zeta = _generation_total(law, zeta, rng)
        over = zeta > K
        hits += int(over.sum())
        zeta = zeta[(~over) & (zeta > 0)]
    return hits


def max_tail_estimate(law: OffspringLaw, K: int, samples: int, seed: int = 0,
                      level: float = 0.99, chunk: int = 200_000) -> TailEstimate:
    """``K * P(max_{k>=1} zeta_k > K)`` with a Clopper-Pearson interval.

    Chunk ``i`` of trees uses stream ``(seed, "branching-K", i)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    hits = 0
    for i, s in enumerate(range(0, samples, chunk)):
        m = min(chunk, samples - s)
        hits += _max_exceeds(law, K, m, stream(seed, f"branching-{K}", i))
    a = 1.0 - level
    lo = stats.beta.ppf(a / 2, hits, samples - hits + 1) if hits > 0 else 0.0
    hi = stats.beta.ppf(1 - a / 2, hits + 1, samples - hits) if hits < samples else 1.0
    return TailEstimate(K, samples, hits, K * hits / samples, K * float(lo), K * float(hi))
