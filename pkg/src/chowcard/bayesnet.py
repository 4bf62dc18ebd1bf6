"""Tree Bayesian network over one relation: compressed CPDs and inference.

Every attribute ``A`` has a marginal end-biased histogram ``H_A`` built on the
sample.  The CPD of a child is one end-biased histogram of the child per cell
of its parent's ``H``.  For inference each CPD row is split into *pieces*
aligned with the child's own cells, so messages stay one scalar per cell:

* a row MCV ``u`` becomes a point piece in the cell of ``H_child`` holding ``u``;
* a row bucket hands ``mass / distinct`` to every ``H_child`` MCV inside its
  range (the equality rule) and spreads the rest over the overlapping
  ``H_child`` buckets in proportion to their interpolated distinct counts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .chowliu import TreeStructure, cell_codes
from .histogram import (DEFAULT_J, DEFAULT_K, EndBiasedHistogram, Span,
                        build_end_biased, histogram_from_counts)
from .query import Predicate
from .relation import Relation, sort_key


class UnknownAttribute(KeyError):
    pass


@dataclass
class VEStats:
    rows_touched: int = 0
    steiner_nodes: int = 0


@dataclass(frozen=True, eq=False)
class _Pieces:
    rows: np.ndarray
    cells: np.ndarray
    mass: np.ndarray
    desc: np.ndarray
    descs: list  # ("p", value) or Span
    dense: np.ndarray  # rows x child cells

    def fractions(self, pred: Predicate) -> np.ndarray:
        out = np.empty(len(self.descs))
        for i, d in enumerate(self.descs):
            out[i] = d.fraction(pred) if isinstance(d, Span) else float(pred.matches(d[1]))
        return out


@dataclass(frozen=True, eq=False)
class CompressedCPD:
    child: int
    parent: int
    parent_cells: tuple
    rows: tuple  # EndBiasedHistogram per parent cell

    def stored_values(self) -> int:
        return sum(r.stored_values() for r in self.rows)

    def nonzero_values(self) -> int:
        return sum(len(r.mcvs) + (len(r.buckets) if r.bucket_mass > 0 else 0) for r in self.rows)

    def row_for(self, value) -> Optional[EndBiasedHistogram]:
        for cell, row in zip(self.parent_cells, self.rows):
            if cell.span is None and sort_key(cell.value) == sort_key(value):
                return row
        for cell, row in zip(self.parent_cells, self.rows):
            if cell.span is not None and cell.span.lo is not None and \
                    sort_key(cell.span.lo) <= sort_key(value) <= sort_key(cell.span.hi):
                return row
        return None

    def to_dict(self) -> dict:
        return {"child": self.child, "parent": self.parent, "rows": [r.to_dict() for r in self.rows]}


def estimate_cpd(sample: Relation, child: int, parent: int, parent_hist: EndBiasedHistogram,
                 k: int = DEFAULT_K, j: int = DEFAULT_J) -> CompressedCPD:
    """Group the sample by parent cell and histogram the child in each group."""
    n = len(sample.columns)
    if not (0 <= child < n and 0 <= parent < n):
        raise IndexError(f"attribute index out of range for {n} attributes")
    pcodes, n_pcells = cell_codes(sample.columns[parent], parent_hist)
    ccol = sample.columns[child]
    nd = len(ccol.dictionary)
    joint = np.bincount(pcodes * nd + ccol.codes, minlength=n_pcells * nd).reshape(n_pcells, nd)
    rows = tuple(histogram_from_counts(ccol.dictionary, joint[p], k, j) for p in range(n_pcells - 1))
    return CompressedCPD(child, parent, parent_hist.cells(), rows)


def _pieces_for(cpd: CompressedCPD, child_hist: EndBiasedHistogram) -> _Pieces:
    child_cells = child_hist.cells()
    n_mcv = len(child_hist.mcvs)
    mcv_vals = [(sort_key(v), v) for v, _ in child_hist.mcvs]
    bucket_spans = [(i + n_mcv, c.span) for i, c in enumerate(child_cells[n_mcv:])]
    out_rows, out_cells, out_mass, out_desc = [], [], [], []

    for r, row in enumerate(cpd.rows):
        row_mcv_keys = {sort_key(v) for v, _ in row.mcvs}
        for u, q in row.mcvs:
            c = child_hist.locate(u)
            if c is not None and q > 0:
                out_rows.append(r); out_cells.append(c); out_mass.append(q); out_desc.append(("p", u))
        m = row.bucket_mass
        if m <= 0:
            continue
        for lo, hi, d in row.buckets:
            if lo is None:
                c = child_hist.locate(None)
                if c is not None:
                    out_rows.append(r); out_cells.append(c); out_mass.append(m); out_desc.append(("p", None))
                continue
            klo, khi = sort_key(lo), sort_key(hi)
            points = [(kv, v) for kv, v in mcv_vals
                      if v is not None and klo <= kv <= khi and kv not in row_mcv_keys]
            spans = []
            for c, sp in bucket_spans:
                if sp.lo is None or sort_key(sp.hi) < klo or sort_key(sp.lo) > khi:
                    continue
                a = lo if sort_key(sp.lo) < klo else sp.lo
                b = hi if sort_key(sp.hi) > khi else sp.hi
                w = sp.distinct * sp.coverage(a, b)
                if w > 0:
                    spans.append((c, a, b, w))
            per_point = m / d
            if len(points) > d or (points and not spans):
                per_point = m / len(points)
            rest = m - per_point * len(points)
            for kv, v in points:
                out_rows.append(r); out_cells.append(child_hist.locate(v)); out_mass.append(per_point)
                out_desc.append(("p", v))
            total_w = sum(s[3] for s in spans)
            if rest <= 0 or total_w <= 0:
                continue
            for c, a, b, w in spans:
                share = rest * w / total_w
                ka, kb = sort_key(a), sort_key(b)
                excluded = tuple(sorted(
                    {v for kv, v in mcv_vals if v is not None and ka <= kv <= kb}
                    | {v for v, _ in row.mcvs if v is not None and ka <= sort_key(v) <= kb},
                    key=sort_key))
                out_rows.append(r); out_cells.append(c); out_mass.append(share)
                out_desc.append(Span(a, b, share * d / m, excluded))

    index: dict = {}
    descs: list = []
    desc_ids = []
    for d in out_desc:
        key = ("p", sort_key(d[1])) if not isinstance(d, Span) else d
        i = index.get(key)
        if i is None:
            i = index[key] = len(descs)
            descs.append(d)
        desc_ids.append(i)
    rows_a = np.asarray(out_rows, dtype=np.int64)
    cells_a = np.asarray(out_cells, dtype=np.int64)
    mass_a = np.asarray(out_mass, dtype=np.float64)
    dense = np.zeros((len(cpd.rows), len(child_cells)))
    np.add.at(dense, (rows_a, cells_a), mass_a)
    return _Pieces(rows_a, cells_a, mass_a, np.asarray(desc_ids, dtype=np.int64), descs, dense)


@dataclass(frozen=True, eq=False)
class BayesNet:
    structure: TreeStructure
    root_hist: EndBiasedHistogram
    cpds: Mapping[int, CompressedCPD]
    sample_row_count: int
    marginals: tuple  # EndBiasedHistogram per attribute; marginals[root] is root_hist
    k: int = DEFAULT_K
    j: int = DEFAULT_J
    _pieces: dict = field(init=False, repr=False)
    _children: list = field(init=False, repr=False)

    def __post_init__(self):
        s = self.structure
        if len(self.marginals) != s.n:
            raise ValueError("one marginal histogram per attribute is required")
        for i, p in enumerate(s.parent):
            if p is None:
                continue
            cpd = self.cpds.get(i)
            if cpd is None or cpd.parent != p:
                raise ValueError(f"CPD of attribute {i} does not match its parent {p}")
        object.__setattr__(self, "_pieces", {})
        object.__setattr__(self, "_children", s.children())

    @property
    def n(self) -> int:
        return self.structure.n

    def pieces(self, child: int) -> _Pieces:
        p = self._pieces.get(child)
        if p is None:
            p = self._pieces[child] = _pieces_for(self.cpds[child], self.marginals[child])
        return p

    def compile(self) -> "BayesNet":
        for i in self.cpds:
            self.pieces(i)
        return self

    def stored_values(self) -> int:
        return self.root_hist.stored_values() + sum(c.stored_values() for c in self.cpds.values())

    def nonzero_values(self) -> int:
        root = self.root_hist
        nz = len(root.mcvs) + (len(root.buckets) if root.bucket_mass > 0 else 0)
        return nz + sum(c.nonzero_values() for c in self.cpds.values())

    def raw_slots(self) -> int:
        width = self.k + self.j
        return width + sum(len(c.parent_cells) * width for c in self.cpds.values())

    def storage_bound(self) -> int:
        width = self.k + self.j
        return width + (self.n - 1) * width * width

    def to_dict(self) -> dict:
        return {
            "structure": self.structure.to_dict(),
            "root_hist": self.root_hist.to_dict(),
            "cpds": [self.cpds[i].to_dict() for i in sorted(self.cpds)],
            "sample_rows": self.sample_row_count,
        }

    @classmethod
    def from_dict(cls, data: dict, marginals: Sequence[EndBiasedHistogram], k: int = DEFAULT_K,
                  j: int = DEFAULT_J) -> "BayesNet":
        structure = TreeStructure.from_dict(data["structure"])
        root_hist = EndBiasedHistogram.from_dict(data["root_hist"], k, j)
        cpds = {}
        for c in data.get("cpds", []):
            child, parent = int(c["child"]), int(c["parent"])
            rows = tuple(EndBiasedHistogram.from_dict(r, k, j) for r in c["rows"])
            cpds[child] = CompressedCPD(child, parent, marginals[parent].cells(), rows)
        return cls(structure, root_hist, cpds, int(data.get("sample_rows", 0)), tuple(marginals), k, j)


def build_network(sample: Relation, structure: TreeStructure, k: int = DEFAULT_K, j: int = DEFAULT_J,
                  marginals: Optional[Sequence[EndBiasedHistogram]] = None) -> BayesNet:
    n = len(sample.columns)
    if structure.n != n:
        raise ValueError(f"structure has {structure.n} nodes but the sample has {n} attributes")
    if marginals is None:
        marginals = [build_end_biased(c, k, j) for c in sample.columns]
    cpds = {i: estimate_cpd(sample, i, p, marginals[p], k, j)
            for i, p in enumerate(structure.parent) if p is not None}
    return BayesNet(structure, marginals[structure.root], cpds, sample.row_count, tuple(marginals), k, j)


def extract_steiner(structure: TreeStructure, targets) -> set[int]:
    """Smallest connected node set holding the root and every target.

    Single depth-first walk; a node enters the result together with the path
    leading to it as soon as it is found to be required, and the walk stops
    once nothing is left to find.
    """
    nodes = set(targets)
    if not nodes:
        raise ValueError("empty target set")
    for t in nodes:
        if not 0 <= t < structure.n:
            raise UnknownAttribute(t)
    nodes.add(structure.root)
    required = set(nodes)
    relevant: set[int] = set()
    kids = structure.children()
    stack = [(structure.root, ())]
    while stack and required:
        node, path = stack.pop()
        if node in nodes:
            required.discard(node)
            relevant.update(path)
            relevant.add(node)
        below = path + (node,)
        for child in reversed(kids[node]):
            stack.append((child, below))
    return relevant


def variable_eliminate(net: BayesNet, predicates: Mapping[int, Predicate],
                       stats: Optional[VEStats] = None) -> float:
    """Probability that every predicate holds, by post-order message passing."""
    if not predicates:
        return 1.0
    for a in predicates:
        if not 0 <= a < net.n:
            raise UnknownAttribute(a)
    steiner = extract_steiner(net.structure, predicates.keys())
    root = net.structure.root
    kids = net._children

    order = []
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        stack.append((node, True))
        for c in kids[node]:
            if c in steiner:
                stack.append((c, False))

    incoming: dict[int, np.ndarray] = {}
    if stats is not None:
        stats.steiner_nodes += len(steiner)
    for node in order:
        if node == root:
            break
        hist = net.marginals[node]
        belief = incoming.pop(node, None)
        if belief is None:
            belief = np.ones(len(hist.cells()))
        pieces = net.pieces(node)
        pred = predicates.get(node)
        if pred is None:
            msg = pieces.dense @ belief
        else:
            w = pieces.mass * pieces.fractions(pred)[pieces.desc] * belief[pieces.cells]
            msg = np.bincount(pieces.rows, weights=w, minlength=pieces.dense.shape[0])
        if stats is not None:
            stats.rows_touched += pieces.dense.shape[0]
        parent = net.structure.parent[node]
        incoming[parent] = incoming[parent] * msg if parent in incoming else msg

    belief = incoming.get(root)
    pred = predicates.get(root)
    total = 0.0
    for c, cell in enumerate(net.root_hist.cells()):
        if cell.mass <= 0:
            continue
        if pred is None:
            frac = 1.0
        elif cell.span is None:
            frac = float(pred.matches(cell.value))
        else:
            frac = cell.span.fraction(pred)
        if frac:
            total += cell.mass * frac * (1.0 if belief is None else belief[c])
    return min(1.0, max(0.0, total))
