"""End-biased equi-height histograms.

A histogram keeps the exact probability of its ``k`` most common values and
spreads the remaining mass equally over at most ``j`` contiguous buckets that
only record how many distinct values they hold.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .query import Predicate, value_family
from .relation import Column, Value, sort_key

DEFAULT_K = 30
DEFAULT_J = 30


class PredicateTypeError(TypeError):
    pass


class Span(NamedTuple):
    """Value interval holding ``distinct`` equally likely values.

    ``excluded`` lists values inside [lo, hi] known to lie elsewhere (most
    common values); they take no share of the span's mass.
    """

    lo: Value
    hi: Value
    distinct: float
    excluded: tuple = ()

    def fraction(self, pred: Predicate) -> float:
        """Share of the span's mass satisfying ``pred``."""
        if self.lo is None or self.distinct <= 0:
            return 0.0
        if pred.is_eq:
            v = pred.lo
            if v is None or value_family(v) != value_family(self.lo) or v in self.excluded:
                return 0.0
            if self.lo <= v <= self.hi:
                return 1.0 / self.distinct
            return 0.0
        return self.coverage(pred.lo, pred.hi, pred.lo_inclusive, pred.hi_inclusive)

    def coverage(self, lo: Value, hi: Value, lo_inc: bool = True, hi_inc: bool = True) -> float:
        """Interpolated share of the span inside the interval (``None`` bound = open)."""
        L, H = self.lo, self.hi
        if L is None:
            return 0.0
        if hi is not None and (hi < L or (hi == L and not hi_inc)):
            return 0.0
        if lo is not None and (lo > H or (lo == H and not lo_inc)):
            return 0.0
        lo_ok = lo is None or lo < L or (lo == L and lo_inc)
        hi_ok = hi is None or hi > H or (hi == H and hi_inc)
        if lo_ok and hi_ok:
            return 1.0
        if isinstance(L, str):
            return 0.5
        if isinstance(L, int) and isinstance(H, int):
            a = L if lo is None else (math.ceil(lo) if lo_inc else math.floor(lo) + 1)
            b = H if hi is None else (math.floor(hi) if hi_inc else math.ceil(hi) - 1)
            a, b = max(a, L), min(b, H)
            if a > b:
                return 0.0
            inside = sum(1 for e in self.excluded if a <= e <= b)
            den = (H - L + 1) - len(self.excluded)
            return max(0, (b - a + 1) - inside) / den if den > 0 else 0.0
        if H == L:
            return 0.0
        a = L if lo is None else max(lo, L)
        b = H if hi is None else min(hi, H)
        return max(0.0, (b - a) / (H - L))


class Cell(NamedTuple):
    """Histogram cell: a most common value (``span`` is None) or a bucket."""

    value: Value
    span: Span | None
    mass: float

    @property
    def is_point(self) -> bool:
        return self.span is None


@dataclass(frozen=True, eq=False)
class EndBiasedHistogram:
    mcvs: tuple  # ((value, prob), ...) in value order
    buckets: tuple  # ((lo, hi, distinct), ...) in value order
    total_rows: int
    k_config: int = DEFAULT_K
    j_config: int = DEFAULT_J
    _cells: tuple = field(init=False, repr=False, compare=False)
    _mcv_index: dict = field(init=False, repr=False, compare=False)
    _bucket_los: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mcvs", tuple((v, float(p)) for v, p in self.mcvs))
        object.__setattr__(self, "buckets", tuple((lo, hi, int(d)) for lo, hi, d in self.buckets))
        mass = self.bucket_mass
        mcv_keys = [sort_key(v) for v, _ in self.mcvs]
        cells = [Cell(v, None, p) for v, p in self.mcvs]
        for lo, hi, d in self.buckets:
            klo, khi = sort_key(lo), sort_key(hi)
            excluded = tuple(v for (v, _), kv in zip(self.mcvs, mcv_keys)
                             if v is not None and klo <= kv <= khi)
            cells.append(Cell(None, Span(lo, hi, d, excluded), mass))
        object.__setattr__(self, "_cells", tuple(cells))
        object.__setattr__(self, "_mcv_index", {sort_key(v): i for i, (v, _) in enumerate(self.mcvs)})
        object.__setattr__(self, "_bucket_los", [sort_key(lo) for lo, _, _ in self.buckets])

    def __eq__(self, other):
        if not isinstance(other, EndBiasedHistogram):
            return NotImplemented
        return (self.mcvs == other.mcvs and self.buckets == other.buckets
                and self.total_rows == other.total_rows)

    @property
    def mcv_mass(self) -> float:
        return math.fsum(p for _, p in self.mcvs)

    @property
    def residual_mass(self) -> float:
        if not self.buckets or self.total_rows == 0:
            return 0.0
        return max(0.0, 1.0 - self.mcv_mass)

    @property
    def bucket_mass(self) -> float:
        return self.residual_mass / len(self.buckets) if self.buckets else 0.0

    @property
    def is_empty(self) -> bool:
        return self.total_rows == 0

    def cells(self) -> tuple:
        """Most common values first, then buckets, each group in value order."""
        return self._cells

    def locate(self, value: Value) -> int | None:
        """Index of the cell holding ``value`` (MCV wins over a bucket range)."""
        key = sort_key(value)
        i = self._mcv_index.get(key)
        if i is not None:
            return i
        b = bisect.bisect_right(self._bucket_los, key) - 1
        if b >= 0 and key <= sort_key(self.buckets[b][1]):
            return len(self.mcvs) + b
        return None

    def value_family(self):
        for v, _ in self.mcvs:
            if v is not None:
                return value_family(v)
        for lo, hi, _ in self.buckets:
            if hi is not None:
                return value_family(hi)
        return None

    def prob(self, pred: Predicate) -> float:
        return histogram_prob(self, pred)

    def stored_values(self) -> int:
        return len(self.mcvs) + len(self.buckets)

    def to_dict(self) -> dict:
        d: dict = {"total_rows": self.total_rows}
        if self.mcvs:
            d["mcvs"] = [[v, p] for v, p in self.mcvs]
        if self.buckets:
            d["buckets"] = [[lo, hi, n] for lo, hi, n in self.buckets]
        return d

    @classmethod
    def from_dict(cls, data: dict, k: int = DEFAULT_K, j: int = DEFAULT_J) -> "EndBiasedHistogram":
        return cls(tuple(tuple(m) for m in data.get("mcvs", ())),
                   tuple(tuple(b) for b in data.get("buckets", ())),
                   int(data.get("total_rows", 0)), k, j)


def empty_histogram(k: int = DEFAULT_K, j: int = DEFAULT_J) -> EndBiasedHistogram:
    return EndBiasedHistogram((), (), 0, k, j)


def histogram_from_counts(values: Sequence[Value], counts: Sequence[int], k: int = DEFAULT_K,
                          j: int = DEFAULT_J) -> EndBiasedHistogram:
    """Build from distinct ``values`` in value order and their row counts.

    Values with a zero count are ignored.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if j < 0:
        raise ValueError("j must be non-negative")
    counts = np.asarray(counts, dtype=np.int64)
    present = np.flatnonzero(counts > 0)
    total = int(counts[present].sum())
    if total == 0:
        return empty_histogram(k, j)
    # stable sort on -count keeps value order among ties, so smaller values win
    by_freq = present[np.argsort(-counts[present], kind="stable")]
    chosen = np.sort(by_freq[:k])
    mcvs = tuple((values[i], int(counts[i]) / total) for i in chosen.tolist())
    chosen_set = set(chosen.tolist())
    residual = [i for i in present.tolist() if i not in chosen_set]
    buckets = []
    if residual and j > 0:
        null_rows = 0
        if values[residual[0]] is None:
            null_rows = int(counts[residual[0]])
            if len(residual) > 1:
                # null never matches a predicate: fold it into the first bucket's count
                residual = residual[1:]
            else:
                residual = []
                buckets.append((None, None, 1))
        if residual:
            buckets.extend(_equi_height(values, counts, residual, j, null_rows))
    return EndBiasedHistogram(mcvs, tuple(buckets), total, k, j)


def _equi_height(values, counts, residual, j, null_rows):
    remaining = int(sum(int(counts[i]) for i in residual)) + null_rows
    buckets = []
    start = 0
    acc = null_rows
    distinct = 1 if null_rows else 0
    for pos, i in enumerate(residual):
        acc += int(counts[i])
        distinct += 1
        last = pos == len(residual) - 1
        if last or (len(buckets) < j - 1 and acc * j >= remaining):
            buckets.append((values[residual[start]], values[i], distinct))
            start, acc, distinct = pos + 1, 0, 0
    return buckets


def build_end_biased(column, k: int = DEFAULT_K, j: int = DEFAULT_J) -> EndBiasedHistogram:
    """Histogram of a :class:`Column` or a plain sequence of values."""
    if not isinstance(column, Column):
        column = Column.from_values(list(column))
    if len(column) == 0:
        raise ValueError("cannot build a histogram of an empty column")
    return histogram_from_counts(column.dictionary, column.counts(), k, j)


def histogram_prob(hist: EndBiasedHistogram, pred: Predicate) -> float:
    """Probability mass of ``hist`` satisfying ``pred``."""
    fam = hist.value_family()
    lit = pred.literal_family()
    if fam is not None and lit is not None and fam != lit:
        raise PredicateTypeError(f"{lit} predicate on a {fam} histogram")
    total = 0.0
    for cell in hist.cells():
        if cell.span is None:
            if pred.matches(cell.value):
                total += cell.mass
        elif cell.mass > 0:
            total += cell.mass * cell.span.fraction(pred)
    return min(1.0, max(0.0, total))


def distinct_count(column) -> int:
    if isinstance(column, Column):
        return int(np.count_nonzero(column.counts()))
    return len({sort_key(v) for v in column})
