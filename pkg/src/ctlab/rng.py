"""Seed derivation: one independent stream per (master seed, purpose tag, index)."""
from __future__ import annotations

import zlib

import numpy as np

_M32 = np.uint64(0xFFFFFFFF)


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(master: int, tag: str, index: int = 0) -> np.random.Generator:
    """A numpy generator keyed by ``(master, tag, index)``."""
    ss = np.random.SeedSequence([int(master), tag_id(tag), int(index)])
    return np.random.Generator(np.random.PCG64(ss))


def _fmix32(h: np.ndarray) -> np.ndarray:
    # murmur3 finalizer: a bijection of the 32-bit integers
    h = h & _M32
    h ^= h >> np.uint64(16)
    h = (h * np.uint64(0x85EBCA6B)) & _M32
    h ^= h >> np.uint64(13)
    h = (h * np.uint64(0xC2B2AE35)) & _M32
    h ^= h >> np.uint64(16)
    return h


def run_seeds(master: int, tag: str, start: int, count: int) -> np.ndarray:
    """32-bit kernel seeds for runs ``start .. start + count - 1``.

    Distinct for up to ``2**32`` runs of one tag; each seed depends only on
    the run index, never on how runs are batched or threaded.
    """
    base = np.random.SeedSequence([int(master), tag_id(tag)]).generate_state(1, np.uint64)[0]
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (idx + base) & _M32
    return _fmix32(x).astype(np.uint32)
