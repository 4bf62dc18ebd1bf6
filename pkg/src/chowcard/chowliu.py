"""Chow-Liu structure learning: pairwise mutual information, a maximum
spanning tree over it, and orientation away from a root."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .histogram import DEFAULT_J, DEFAULT_K, EndBiasedHistogram, build_end_biased
from .relation import Column, Relation


class NotATree(ValueError):
    pass


def cell_codes(column: Column, hist: EndBiasedHistogram) -> tuple[np.ndarray, int]:
    """Map every row to its histogram cell.

    Values outside every cell (possible when ``j == 0``) share one overflow
    cell numbered ``len(hist.cells())``.  Returns (codes, number of cells
    including the overflow).
    """
    n_cells = len(hist.cells())
    lookup = np.array([n_cells if (c := hist.locate(v)) is None else c for v in column.dictionary],
                      dtype=np.int64)
    codes = lookup[column.codes] if len(lookup) else np.zeros(0, dtype=np.int64)
    return codes, n_cells + 1


def _mi_from_codes(a: np.ndarray, na: int, b: np.ndarray, nb: int) -> float:
    n = len(a)
    joint = np.bincount(a * nb + b, minlength=na * nb).astype(np.float64)
    ca = np.bincount(a, minlength=na).astype(np.float64)
    cb = np.bincount(b, minlength=nb).astype(np.float64)
    nz = np.flatnonzero(joint)
    c = joint[nz]
    expected = ca[nz // nb] * cb[nz % nb]
    mi = float(np.sum(c * np.log(c * n / expected)) / n)
    return max(mi, 0.0)


def mutual_information(col_a, col_b, binning: Optional[tuple[EndBiasedHistogram, EndBiasedHistogram]] = None) -> float:
    """Empirical mutual information in nats, optionally over histogram cells."""
    if not isinstance(col_a, Column):
        col_a = Column.from_values(list(col_a))
    if not isinstance(col_b, Column):
        col_b = Column.from_values(list(col_b))
    if len(col_a) != len(col_b):
        raise ValueError("columns differ in length")
    if len(col_a) == 0:
        raise ValueError("mutual information of empty columns")
    if binning is None:
        return _mi_from_codes(col_a.codes, len(col_a.dictionary), col_b.codes, len(col_b.dictionary))
    a, na = cell_codes(col_a, binning[0])
    b, nb = cell_codes(col_b, binning[1])
    return _mi_from_codes(a, na, b, nb)


@dataclass(frozen=True, eq=False)
class MIGraph:
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def build_mi_graph(sample: Relation, k: int = DEFAULT_K, j: int = DEFAULT_J,
                   hists: Optional[Sequence[EndBiasedHistogram]] = None) -> MIGraph:
    n = len(sample.columns)
    if n < 2:
        raise ValueError("need at least two attributes")
    if sample.row_count < 1:
        raise ValueError("need at least one row")
    if hists is None:
        hists = [build_end_biased(c, k, j) for c in sample.columns]
    codes = [cell_codes(c, h) for c, h in zip(sample.columns, hists)]
    w = np.zeros((n, n))
    for i in range(n):
        for m in range(i + 1, n):
            w[i, m] = w[m, i] = _mi_from_codes(*codes[i], *codes[m])
    return MIGraph(w)


def max_spanning_tree(graph: MIGraph) -> list[tuple[int, int]]:
    """Kruskal on (weight desc, index pair asc); returns edges (i, j), i < j."""
    n = graph.n
    if n < 2:
        raise ValueError("need at least two nodes")
    edges = sorted(((-float(graph.weights[i, m]), i, m) for i in range(n) for m in range(i + 1, n)))
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for _, i, m in edges:
        ri, rm = find(i), find(m)
        if ri != rm:
            parent[max(ri, rm)] = min(ri, rm)
            tree.append((i, m))
            if len(tree) == n - 1:
                break
    return tree


@dataclass(frozen=True)
class TreeStructure:
    root: int
    parent: tuple  # parent[root] is None

    def __post_init__(self):
        n = len(self.parent)
        if not 0 <= self.root < n or self.parent[self.root] is not None:
            raise NotATree("root must be the only node without a parent")
        for i, p in enumerate(self.parent):
            if i != self.root and (p is None or not 0 <= p < n or p == i):
                raise NotATree(f"node {i} has invalid parent {p!r}")
        # every node must reach the root
        for i in range(n):
            seen = 0
            x = i
            while x != self.root:
                x = self.parent[x]
                seen += 1
                if seen > n:
                    raise NotATree("parent pointers contain a cycle")

    @property
    def n(self) -> int:
        return len(self.parent)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for i, p in enumerate(self.parent):
            if p is not None:
                kids[p].append(i)
        return kids

    def edges(self) -> list[tuple[int, int]]:
        return sorted((min(i, p), max(i, p)) for i, p in enumerate(self.parent) if p is not None)

    def to_dict(self) -> dict:
        return {"root": self.root, "parent": list(self.parent)}

    @classmethod
    def from_dict(cls, data: dict) -> "TreeStructure":
        return cls(int(data["root"]), tuple(data["parent"]))


def root_tree(edges: Sequence[tuple[int, int]], root: int, n: Optional[int] = None) -> TreeStructure:
    """Orient ``edges`` away from ``root`` by breadth-first search."""
    if n is None:
        n = max([root] + [max(e) for e in edges]) + 1
    if not 0 <= root < n:
        raise NotATree(f"root {root} out of range")
    if len(edges) != n - 1:
        raise NotATree(f"{len(edges)} edges cannot span {n} nodes")
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parent: list = [None] * n
    seen = {root}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                parent[y] = x
                queue.append(y)
    if len(seen) != n:
        raise NotATree("edges do not connect all nodes")
    return TreeStructure(root, tuple(parent))


def learn_structure(sample: Relation, k: int = DEFAULT_K, j: int = DEFAULT_J,
                    hists: Optional[Sequence[EndBiasedHistogram]] = None, root: int = 0) -> TreeStructure:
    n = len(sample.columns)
    if n == 1:
        return TreeStructure(0, (None,))
    graph = build_mi_graph(sample, k, j, hists)
    return root_tree(max_spanning_tree(graph), root, n)
