"""Brownian motion with parabolic drift and its excursions above the running minimum.

``W~(s) = W(s) - s^2/2`` is sampled exactly on a uniform grid (Gaussian
increments minus the exact drift increment).  Records are grid points where
``W~`` reaches a strict new minimum; excursion lengths are the gaps between
consecutive records, plus a final open segment that is flagged as truncated.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import stream

__all__ = [
    "LimitPath",
    "ExcursionSample",
    "LimitComponents",
    "sample_drifted_bm",
    "path_from_values",
    "excursion_lengths",
    "sample_limit_components",
]


@dataclass
class LimitPath:
    T: float
    dt: float
    w: np.ndarray  # W~ on the grid 0, dt, ..., T
    b: np.ndarray  # W~ minus its running minimum

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.w.size) * self.dt


@dataclass
class ExcursionSample:
    """Completed excursion lengths (descending) and the open final segment."""

    lengths: np.ndarray
    truncated: float

    def all_lengths(self) -> np.ndarray:
        """Completed lengths plus the truncated segment, descending."""
        if self.truncated > 0:
            return np.sort(np.append(self.lengths, self.truncated))[::-1]
        return self.lengths

    def total(self) -> float:
        return float(self.lengths.sum() + self.truncated)


def _grid(T: float, dt: float) -> int:
    if not T > 0 or not dt > 0:
        raise ValueError("T and dt must be positive")
    m = int(round(T / dt))
    if m < 1:
        raise ValueError("dt larger than T")
    return m


def _drift_increments(m: int, dt: float) -> np.ndarray:
    s = np.arange(m) * dt
    return s * dt + 0.5 * dt * dt  # ((s + dt)^2 - s^2) / 2


def path_from_values(w, dt: float) -> LimitPath:
    """Wrap given grid values (``w[0]`` must be 0) as a path."""
    w = np.asarray(w, dtype=np.float64)
    if w.size < 2 or w[0] != 0.0:
        raise ValueError("path must start at 0 and have at least one step")
    return LimitPath(T=(w.size - 1) * dt, dt=dt, w=w, b=w - np.minimum.accumulate(w))


def _drifted_values(m: int, dt: float, drift: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    w = np.empty(m + 1)
    w[0] = 0.0
    inc = rng.standard_normal(m)
    inc *= np.sqrt(dt)
    inc -= drift
    np.cumsum(inc, out=w[1:])
    return w


def sample_drifted_bm(T: float, dt: float, rng: np.random.Generator) -> LimitPath:
    m = _grid(T, dt)
    dt = T / m
    w = _drifted_values(m, dt, _drift_increments(m, dt), rng)
    return LimitPath(T=T, dt=dt, w=w, b=w - np.minimum.accumulate(w))


def _record_indices(w: np.ndarray) -> np.ndarray:
    cm = np.minimum.accumulate(w)
    return np.concatenate([[0], np.flatnonzero(w[1:] < cm[:-1]) + 1])


def _excursions(w: np.ndarray, dt: float) -> ExcursionSample:
    rec = _record_indices(w)
    lengths = np.diff(rec) * dt
    trunc = (w.size - 1 - rec[-1]) * dt
    return ExcursionSample(np.sort(lengths)[::-1], float(trunc))


def excursion_lengths(path: LimitPath) -> ExcursionSample:
    return _excursions(path.w, path.dt)


@dataclass
class LimitComponents:
    """Top-``j`` excursion lengths of ``M`` independent paths.

    ``completed`` drops the open final segment; ``with_truncated`` keeps it,
    and ``truncated_flag`` marks which entry of that row it is.  Missing
    entries are 0.
    """

    T: float
    dt: float
    completed: np.ndarray
    with_truncated: np.ndarray
    truncated_flag: np.ndarray

    def write_csv(self, path, include_truncated: bool = False) -> None:
        data = self.with_truncated if include_truncated else self.completed
        j = data.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"gamma{i + 1}" for i in range(j)] + ["truncated_flag"])
            for row, fl in zip(data, self.truncated_flag):
                w.writerow([repr(float(x)) for x in row] + [int(fl.any())])


def sample_limit_components(T: float, dt: float, M: int, j: int = 3, seed: int = 0,
                            tag: str = "limit", rng: Optional[np.random.Generator] = None,
                            start: int = 0) -> LimitComponents:
    """Draw ``M`` paths; path ``i`` uses the stream ``(seed, tag, start + i)``.

    Passing ``rng`` instead draws all paths from that single generator.
    """
    m = _grid(T, dt)
    dt_eff = T / m
    drift = _drift_increments(m, dt_eff)
    completed = np.zeros((M, j))
    with_trunc = np.zeros((M, j))
    flag = np.zeros((M, j), dtype=bool)
    for i in range(M):
        g = rng if rng is not None else stream(seed, tag, start + i)
        ex = _excursions(_drifted_values(m, dt_eff, drift, g), dt_eff)
        completed[i, : min(j, ex.lengths.size)] = ex.lengths[:j]
        allv = ex.lengths
        if ex.truncated > 0:
            allv = np.append(ex.lengths, ex.truncated)
        order = np.argsort(-allv, kind="stable")[:j]
        with_trunc[i, : order.size] = allv[order]
        if ex.truncated > 0:
            flag[i, : order.size] = order == allv.size - 1
    return LimitComponents(T, dt_eff, completed, with_trunc, flag)
