"""Array-backed disjoint sets, used as the brute-force component oracle."""
from __future__ import annotations

import numpy as np


class UnionFind:
    """Union by size with path halving over the integers ``0..n-1``.

    >>> uf = UnionFind(5)
    >>> uf.union(0, 1); uf.union(3, 4)
    >>> sorted(uf.component_sizes(), reverse=True)
    [2, 2, 1]
    """

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def union_edges(self, edges) -> None:
        for a, b in edges:
            self.union(int(a), int(b))

    def component_sizes(self) -> list[int]:
        return [self.size[i] for i in range(len(self.parent)) if self.find(i) == i]


def component_sizes_from_edges(n: int, edges) -> np.ndarray:
    """Component sizes of a graph on ``0..n-1``, sorted descending."""
    uf = UnionFind(n)
    uf.union_edges(np.asarray(edges).reshape(-1, 2).tolist())
    return np.sort(np.array(uf.component_sizes(), dtype=np.int64))[::-1]
