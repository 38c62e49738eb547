"""Seeded Monte Carlo campaigns that compare the walk with its scaling limit.

Every campaign is split into fixed chunks of run indices.  Run ``i`` draws
its randomness from ``run_seeds(seed, tag, i, 1)`` whatever the chunking, and
results are folded in run-index order, so the output does not depend on the
number of worker threads.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .exploration import BudgetError, component_sizes, explore_many, rescale_index, steps_for_horizon
from .graph import GraphParams
from .limit import LimitComponents, sample_limit_components
from .rng import stream

__all__ = [
    "ks_two_sample",
    "MomentsResult",
    "walk_moments",
    "ComponentResult",
    "component_vs_excursion",
    "sample_limit_threaded",
    "UniformityResult",
    "walker_uniformity",
    "GrowthReport",
    "growth_bound_report",
    "DominationReport",
    "poisson_domination",
    "CampaignResult",
    "run_campaign",
]

CHUNK = 64
LEVEL = 0.99


def ks_two_sample(a, b) -> float:
    """Largest gap between the empirical CDFs of ``a`` and ``b``."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def _chunked(M: int, fn: Callable[[int, int], object], threads: int = 1, chunk: int = CHUNK) -> list:
    """``fn(start, count)`` over fixed chunks of ``range(M)``, results in order."""
    bounds = [(s, min(chunk, M - s)) for s in range(0, M, chunk)]
    if threads <= 1:
        return [fn(s, m) for s, m in bounds]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda b: fn(*b), bounds))


def _zq(level: float) -> float:
    return float(sps.norm.ppf(0.5 + level / 2))


def _params(N: int, c: float) -> GraphParams:
    return GraphParams(N, c)


# ---------------------------------------------------------------- moments


@dataclass
class MomentsResult:
    N: int
    c: float
    T: float
    M: int
    seed: int
    s: np.ndarray
    index: np.ndarray  # walk index 1 + floor(n^(2/3) s)
    samples: np.ndarray  # (M, len(s)) rescaled walk values
    level: float = LEVEL

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def variance(self) -> np.ndarray:
        return self.samples.var(axis=0, ddof=1)

    def mean_ci(self) -> tuple[np.ndarray, np.ndarray]:
        h = _zq(self.level) * np.sqrt(self.variance / self.M)
        return self.mean - h, self.mean + h

    def variance_ci(self) -> tuple[np.ndarray, np.ndarray]:
        # normal approximation; kurtosis of the sample enters the spread
        x = self.samples - self.mean
        m4 = (x**4).mean(axis=0)
        se = np.sqrt(np.maximum(m4 - self.variance**2, 0.0) / self.M)
        h = _zq(self.level) * se
        return self.variance - h, self.variance + h

    def mean_tolerance(self) -> np.ndarray:
        return np.maximum(0.1 * self.s**2, 4.0 * np.sqrt(self.s / self.M))

    def checks(self) -> dict:
        mean_ok = np.abs(self.mean + self.s**2 / 2) <= self.mean_tolerance()
        var_ok = np.abs(self.variance - self.s) <= 0.15 * self.s
        return {"mean": mean_ok, "variance": var_ok}

    @property
    def passed(self) -> bool:
        ch = self.checks()
        return bool(ch["mean"].all() and ch["variance"].all())

    def rows(self) -> list[list]:
        lo, hi = self.mean_ci()
        vlo, vhi = self.variance_ci()
        ch = self.checks()
        out = []
        for i, s in enumerate(self.s):
            out.append([repr(float(s)), int(self.index[i]), repr(float(self.mean[i])), repr(float(lo[i])),
                        repr(float(hi[i])), repr(float(-s * s / 2)), repr(float(self.variance[i])),
                        repr(float(vlo[i])), repr(float(vhi[i])), repr(float(s)),
                        int(ch["mean"][i]), int(ch["variance"][i])])
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "index", "mean", "mean_lo", "mean_hi", "mean_target", "variance",
                        "var_lo", "var_hi", "var_target", "mean_ok", "var_ok"])
            w.writerows(self.rows())


def walk_moments(N: int, c: float, s_grid: Sequence[float], M: int, seed: int, T: Optional[float] = None,
                 threads: int = 1, tag: str = "moments") -> MomentsResult:
    """Mean and variance of ``n^(-1/3) z(1 + floor(n^(2/3) s))`` over ``M`` walks."""
    s = np.asarray(sorted(float(x) for x in s_grid))
    if s.size == 0 or s[0] <= 0:
        raise ValueError("grid points must be positive")
    if M < 100:
        raise ValueError("need at least 100 runs")
    params = _params(N, c)
    n = params.n
    T = float(s[-1]) if T is None else float(T)
    if s[-1] > T:
        raise ValueError("grid extends beyond T")
    K = steps_for_horizon(T, n)
    idx = np.array([rescale_index(x, n) for x in s])
    if K > n or idx[-1] > K + 1:
        raise BudgetError(f"T={T} needs {K} steps but the torus has only {n} vertices")
    scale = n ** (-1.0 / 3.0)

    def work(start: int, count: int):
        batch = explore_many(params, K, seed, tag, count, start)
        return batch.z[:, idx - 1] * scale

    samples = np.concatenate(_chunked(M, work, threads))
    return MomentsResult(N, params.c, T, M, seed, s, idx, samples)


# ---------------------------------------------------------------- components


@dataclass
class ComponentResult:
    """Top-``j`` rescaled component sizes against top-``j`` excursion lengths.

    Missing entries (fewer than ``j`` completed components or excursions)
    are 0 on both sides; ``shortfall[i]`` counts graph runs lacking the
    ``(i + 1)``-th component.
    """

    N: int
    c: float
    T: float
    j: int
    seed: int
    graph: np.ndarray  # (M_graph, j)
    partial: np.ndarray  # rescaled size of the cut component, -1 if none
    limit: LimitComponents
    ks: np.ndarray
    shortfall: np.ndarray
    limit_shortfall: np.ndarray

    def write_components_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run"] + [f"C{i + 1}" for i in range(self.j)] + ["partial"])
            for r, (row, p) in enumerate(zip(self.graph, self.partial)):
                w.writerow([r] + [repr(float(x)) for x in row] + [repr(float(p))])

    def write_ks_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coordinate", "ks", "graph_shortfall", "limit_shortfall"])
            for i in range(self.j):
                w.writerow([i + 1, repr(float(self.ks[i])), int(self.shortfall[i]), int(self.limit_shortfall[i])])


def _graph_components(params: GraphParams, K: int, M: int, j: int, seed: int, tag: str, threads: int):
    n = params.n
    scale = n ** (-2.0 / 3.0)

    def work(start: int, count: int):
        batch = explore_many(params, K, seed, tag, count, start)
        top = np.zeros((count, j))
        part = np.full(count, -1.0)
        for r in range(count):
            comp = component_sizes(batch.z[r, : batch.steps[r] + 1])
            m = min(j, comp.sizes.size)
            top[r, :m] = comp.sizes[:m] * scale
            if comp.partial is not None:
                part[r] = comp.partial * scale
        return top, part

    out = _chunked(M, work, threads)
    return np.concatenate([a for a, _ in out]), np.concatenate([b for _, b in out])


def sample_limit_threaded(T: float, dt: float, M: int, j: int, seed: int, threads: int = 1,
                          tag: str = "limit") -> LimitComponents:
    """:func:`sample_limit_components` split over threads; same output for any ``threads``."""

    def work(start: int, count: int):
        return sample_limit_components(T, dt, count, j, seed, tag, start=start)

    parts = _chunked(M, work, threads, chunk=250)
    return LimitComponents(
        T=parts[0].T,
        dt=parts[0].dt,
        completed=np.concatenate([p.completed for p in parts]),
        with_truncated=np.concatenate([p.with_truncated for p in parts]),
        truncated_flag=np.concatenate([p.truncated_flag for p in parts]),
    )


def component_vs_excursion(N: int, c: float, T: float, M_graph: int, M_limit: int, j: int = 3, seed: int = 0,
                           dt: float = 1e-4, threads: int = 1, limit: Optional[LimitComponents] = None,
                           tag: str = "components") -> ComponentResult:
    """KS distance per coordinate between ``C_i / n^(2/3)`` and ``gamma_i``.

    Cut components and open final excursions are dropped on both sides.
    A precomputed ``limit`` sample may be passed to reuse it across calls.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    params = _params(N, c)
    K = steps_for_horizon(T, params.n)
    if K > params.n:
        raise BudgetError(f"T={T} needs {K} steps but the torus has only {params.n} vertices")
    graph, partial = _graph_components(params, K, M_graph, j, seed, tag, threads)
    if limit is None:
        limit = sample_limit_threaded(T, dt, M_limit, j, seed, threads)
    if limit.completed.shape[1] < j:
        raise ValueError("limit sample has fewer than j coordinates")
    lim = limit.completed[:, :j]
    ks = np.array([ks_two_sample(graph[:, i], lim[:, i]) for i in range(j)])
    return ComponentResult(N, params.c, T, j, seed, graph, partial, limit, ks,
                           (graph == 0).sum(axis=0), (lim == 0).sum(axis=0))


# ---------------------------------------------------------------- uniformity


@dataclass
class UniformityResult:
    N: int
    c: float
    i: int
    j: int
    M: int
    counts: np.ndarray  # visits of v_j to each vertex
    tv: float
    noise_floor: float  # TV of a uniform sample of the same size
    ci: tuple[float, float]  # bootstrap interval for tv
    displacement_tv: float  # TV of v_j - v_i from uniform (diagnostic)
    displacement_floor: float

    @property
    def ratio(self) -> float:
        return self.tv / self.noise_floor if self.noise_floor > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.tv <= 1.5 * self.noise_floor


def _tv_uniform(counts: np.ndarray) -> float:
    M = counts.sum()
    return float(0.5 * np.abs(counts / M - 1.0 / counts.size).sum())


def walker_uniformity(N: int, c: float, i: int, j: int, M: int, seed: int, threads: int = 1,
                      n_boot: int = 200, level: float = LEVEL, enforce_gap: bool = True) -> UniformityResult:
    """Law of the vertex processed at step ``j`` compared with the uniform law.

    ``ci`` is the percentile interval of the bootstrapped TV; resampling adds
    its own multinomial noise, so the interval sits above ``tv`` itself.

    The noise floor is the TV of ``M`` truly uniform draws; the displacement
    ``v_j - v_i`` (coordinate-wise mod ``N``) is reported as a diagnostic.
    """
    params = _params(N, c)
    n = params.n
    if not 1 <= i < j:
        raise ValueError("need 1 <= i < j")
    if enforce_gap and j - i < math.ceil(n ** (1.0 / 6.0) - 1e-12):
        raise ValueError(f"j - i must be at least ceil(n^(1/6)) = {math.ceil(n ** (1 / 6) - 1e-12)}")
    if j > n:
        raise BudgetError(f"step {j} is beyond the {n} vertices of the torus")

    def work(start: int, count: int):
        b = explore_many(params, j, seed, "uniformity", count, start)
        vi, vj = b.processed[:, i - 1], b.processed[:, j - 1]
        xi, yi = np.divmod(vi, N)
        xj, yj = np.divmod(vj, N)
        disp = ((xj - xi) % N) * N + (yj - yi) % N
        return np.bincount(vj, minlength=n), np.bincount(disp, minlength=n)

    out = _chunked(M, work, threads, chunk=50_000)
    counts = np.sum([a for a, _ in out], axis=0)
    disp = np.sum([b for _, b in out], axis=0)
    tv = _tv_uniform(counts)

    g = stream(seed, "uniform-floor")
    floor_counts = g.multinomial(M, np.full(n, 1.0 / n))
    floor = _tv_uniform(floor_counts)
    disp_floor = _tv_uniform(g.multinomial(M, np.full(n, 1.0 / n)))

    boot = stream(seed, "uniform-bootstrap").multinomial(M, counts / M, size=n_boot)
    tvs = 0.5 * np.abs(boot / M - 1.0 / n).sum(axis=1)
    a = (1 - level) / 2
    ci = (float(np.quantile(tvs, a)), float(np.quantile(tvs, 1 - a)))
    return UniformityResult(N, params.c, i, j, M, counts, tv, floor, ci, _tv_uniform(disp), disp_floor)


# ---------------------------------------------------------------- growth bound


@dataclass
class GrowthReport:
    N: int
    c: float
    M: int
    C: float
    k: np.ndarray
    hits: np.ndarray
    freq: np.ndarray
    bound: np.ndarray
    se: np.ndarray  # binomial standard error at the bound

    @property
    def ok(self) -> np.ndarray:
        return self.freq <= self.bound + 3 * self.se

    @property
    def passed(self) -> bool:
        return bool(self.ok.all())


def growth_bound_report(N: int, c: float, M: int, k_max: int, C: float = 6.0, seed: int = 0,
                        threads: int = 1) -> GrowthReport:
    """Frequency of ``|I_k| >= kC`` for ``k <= k_max`` against ``exp(-k (C - e))``."""
    if not C > math.e:
        raise ValueError("the bound needs C > e")
    params = _params(N, c)
    if not 1 <= k_max <= params.n:
        raise ValueError("k_max out of range")
    ks = np.arange(1, k_max + 1)

    def work(start: int, count: int):
        b = explore_many(params, k_max, seed, "growth", count, start)
        return (b.used >= ks * C).sum(axis=0)

    hits = np.sum(_chunked(M, work, threads, chunk=2048), axis=0)
    bound = np.exp(-ks * (C - math.e))
    se = np.sqrt(bound * (1 - bound) / M)
    return GrowthReport(N, params.c, M, C, ks, hits, hits / M, bound, se)


# ---------------------------------------------------------------- Poisson domination


@dataclass
class DominationReport:
    N: int
    c: float
    M: int
    k: np.ndarray
    survival: np.ndarray  # empirical P(deg > k)
    poisson: np.ndarray  # P(Poisson(1) > k)
    se: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.survival <= self.poisson + 3 * self.se))


def poisson_domination(N: int, M: int, seed: int = 0, c: Optional[float] = None,
                       threads: int = 1) -> DominationReport:
    """Degree of the first root of ``M`` fresh walks against Poisson(1)."""
    params = GraphParams.at_criticality(N) if c is None else _params(N, c)

    def work(start: int, count: int):
        return explore_many(params, 1, seed, "degree", count, start).revealed[:, 0]

    deg = np.concatenate(_chunked(M, work, threads, chunk=4096))
    ks = np.arange(0, int(deg.max()) + 2)
    surv = (deg[None, :] > ks[:, None]).mean(axis=1)
    pois = sps.poisson.sf(ks, 1.0)
    se = np.sqrt(np.maximum(surv * (1 - surv), pois * (1 - pois)) / M)
    return DominationReport(N, params.c, M, ks, surv, pois, se)


# ---------------------------------------------------------------- campaign


@dataclass
class CampaignResult:
    params: dict
    moments: MomentsResult
    components: ComponentResult
    suites: dict = field(default_factory=dict)

    def summary(self) -> dict:
        m = self.moments
        return {
            "params": self.params,
            "moments": {
                "s": m.s.tolist(),
                "mean": m.mean.tolist(),
                "variance": m.variance.tolist(),
                "mean_ci": [x.tolist() for x in m.mean_ci()],
                "variance_ci": [x.tolist() for x in m.variance_ci()],
            },
            "ks": self.components.ks.tolist(),
            "shortfall": self.components.shortfall.tolist(),
            "limit_shortfall": self.components.limit_shortfall.tolist(),
            "suites": self.suites,
        }

    def write(self, out_dir) -> list[str]:
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.moments.write_csv(out / "moments.csv")
        self.components.write_components_csv(out / "components.csv")
        self.components.write_ks_csv(out / "ks.csv")
        with open(out / "result.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return ["moments.csv", "components.csv", "ks.csv", "result.json"]


def run_campaign(N: int, c: float, T: float, M: int, seed: int, s_grid: Sequence[float] = (0.5, 1.0, 1.5, 2.0),
                 M_limit: int = 5000, j: int = 3, dt: float = 1e-4, threads: int = 1,
                 ks_threshold: float = 0.08) -> CampaignResult:
    """Walk moments and the component/excursion comparison for one parameter set."""
    moments = walk_moments(N, c, s_grid, M, seed, T=T, threads=threads)
    comps = component_vs_excursion(N, c, T, M, M_limit, j, seed, dt=dt, threads=threads)
    suites = {
        "moments": moments.passed,
        "ks_coordinate_1": bool(comps.ks[0] <= ks_threshold),
    }
    params = {"N": N, "c": c, "T": T, "runs": M, "seed": seed, "s_grid": [float(x) for x in s_grid],
              "limit_runs": M_limit, "top": j, "dt": dt, "ks_threshold": ks_threshold}
    return CampaignResult(params, moments, comps, suites)
