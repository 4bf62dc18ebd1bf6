"""Ground truth, q-error and the workload runner."""
from __future__ import annotations

import csv
import hashlib
import os
import statistics
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .estimators import METHODS, BuildConfig, ModelStore, build_store, estimate_cardinality
from .query import Query
from .relation import Relation

DETAIL_COLUMNS = ["method", "sample_rate", "seed", "query_id", "true_rows", "est_rows", "q_error", "est_micros"]
SUMMARY_COLUMNS = ["method", "sample_rate", "seed", "mean_q", "std_q", "build_millis", "raw_values",
                   "nonzero_values"]


def q_error(y: float, y_hat: float) -> float:
    y, y_hat = max(float(y), 1.0), max(float(y_hat), 1.0)
    return max(y, y_hat) / min(y, y_hat)


def _join_keys(left: Relation, left_attr: str, right: Relation, right_attr: str):
    """Integer join keys for both sides in one shared key space; null maps to -1."""
    lcol, rcol = left.column(left_attr), right.column(right_attr)
    space = {}
    for v in rcol.dictionary:
        if v is not None:
            space.setdefault(v, len(space))
    rmap = np.array([space.get(v, -1) if v is not None else -1 for v in rcol.dictionary], dtype=np.int64)
    lmap = np.array([space.get(v, -2) if v is not None else -2 for v in lcol.dictionary], dtype=np.int64)
    return lmap, rmap


def true_cardinality(query: Query, database: Mapping[str, Relation]) -> int:
    """Exact result size by filtering and hash joining; allowed to be slow."""
    for name in query.relations:
        if name not in database:
            raise KeyError(f"relation {name!r} is not in the database")
    if query.unsatisfiable:
        return 0
    rows: dict[str, np.ndarray] = {}
    for name in query.relations:
        rel = database[name]
        mask = np.ones(rel.row_count, dtype=bool)
        for p in query.predicates_for(name):
            mask &= rel.column(p.attribute).mask(p)
        rows[name] = np.flatnonzero(mask)

    pending = list(query.joins)
    total = 1
    remaining = list(query.relations)
    while remaining:
        start = remaining.pop(0)
        comp = {start: rows[start]}
        progressed = True
        while progressed:
            progressed = False
            for jp in list(pending):
                (lr, la), (rr, ra) = jp.left, jp.right
                if lr in comp and rr in comp:
                    lmap, rmap = _join_keys(database[lr], la, database[rr], ra)
                    lk = lmap[database[lr].column(la).codes[comp[lr]]]
                    rk = rmap[database[rr].column(ra).codes[comp[rr]]]
                    keep = lk == rk
                    comp = {n: idx[keep] for n, idx in comp.items()}
                elif lr in comp or rr in comp:
                    if rr in comp:
                        (lr, la), (rr, ra) = (rr, ra), (lr, la)
                    comp = _hash_join(comp, database, lr, la, rr, ra, rows[rr])
                    remaining.remove(rr)
                else:
                    continue
                pending.remove(jp)
                progressed = True
        size = len(next(iter(comp.values())))
        total *= size
        if total == 0:
            return 0
    return int(total)


def _hash_join(comp, database, lr, la, rr, ra, right_rows):
    lmap, rmap = _join_keys(database[lr], la, database[rr], ra)
    lk = lmap[database[lr].column(la).codes[comp[lr]]]
    rk = rmap[database[rr].column(ra).codes[right_rows]]
    order = np.argsort(rk, kind="stable")
    rk_sorted = rk[order]
    start = np.searchsorted(rk_sorted, lk, side="left")
    stop = np.searchsorted(rk_sorted, lk, side="right")
    counts = np.where(lk < 0, 0, stop - start)
    left_pos = np.repeat(np.arange(len(lk)), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    right_pos = order[np.repeat(start, counts) + offsets]
    out = {n: idx[left_pos] for n, idx in comp.items()}
    out[rr] = right_rows[right_pos]
    return out


def query_hash(text: str) -> str:
    return hashlib.sha256(" ".join(text.split()).encode("utf-8")).hexdigest()[:16]


def load_truth_cache(path) -> dict[str, int]:
    if not path or not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8", newline="") as fh:
        return {r["query_hash"]: int(r["true_rows"]) for r in csv.DictReader(fh)}


def save_truth_cache(path, cache: Mapping[str, int]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query_hash", "true_rows"])
        for h in sorted(cache):
            w.writerow([h, cache[h]])


@dataclass
class StorageCounts:
    raw: int
    nonzero: int

    @property
    def sparsity(self) -> float:
        return 1.0 - self.nonzero / self.raw if self.raw else 0.0


def storage_report(store: ModelStore) -> dict[str, StorageCounts]:
    """Theoretical slots versus slots holding mass, per method."""
    width = store.config.k + store.config.j
    out = {m: StorageCounts(0, 0) for m in METHODS}
    for art in store.relations.values():
        n = len(art.schema.attributes)
        out["bn"].raw += art.bn.raw_slots()
        out["bn"].nonzero += art.bn.nonzero_values()
        out["textbook"].raw += n * width
        out["textbook"].nonzero += sum(len(h.mcvs) + (len(h.buckets) if h.bucket_mass > 0 else 0)
                                       for h in art.histograms)
        if art.sample is not None:
            size = art.sample.row_count * n
            out["sampling"].raw += size
            out["sampling"].nonzero += size
    return out


@dataclass
class BenchConfig:
    rates: Sequence[float] = (0.05,)
    seeds: Sequence[int] = tuple(range(10))
    k: int = 30
    j: int = 30
    methods: Sequence[str] = METHODS
    timings: bool = True


@dataclass
class EstimateReport:
    detail: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)

    def mean_q(self, method: str, rate: Optional[float] = None) -> float:
        qs = [r["q_error"] for r in self.detail
              if r["method"] == method and (rate is None or r["sample_rate"] == rate)]
        return statistics.fmean(qs)

    def write(self, detail_path, summary_path) -> None:
        for path, cols, rows in ((detail_path, DETAIL_COLUMNS, self.detail),
                                 (summary_path, SUMMARY_COLUMNS, self.summary)):
            with open(path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for r in rows:
                    w.writerow([_fmt(r[c]) for c in cols])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_workload(queries: Sequence[tuple[str, Query]], database: Mapping[str, Relation],
                 config: BenchConfig, truth: Optional[dict[str, int]] = None) -> EstimateReport:
    """Build artifacts per (rate, seed), estimate every query by every method."""
    truth = {} if truth is None else truth
    true_rows = {}
    for qid, q in queries:
        h = query_hash(q.text) if q.text else qid
        if h not in truth:
            truth[h] = true_cardinality(q, database)
        true_rows[qid] = truth[h]

    report = EstimateReport()
    relations = list(database.values())
    for rate in config.rates:
        for seed in config.seeds:
            store = build_store(relations, BuildConfig(config.k, config.j, rate, seed))
            t0 = time.perf_counter()
            for art in store.relations.values():
                art.bn.compile()
            compile_seconds = time.perf_counter() - t0
            storage = storage_report(store)
            for method in config.methods:
                qs = []
                for qid, q in queries:
                    t = time.perf_counter()
                    est = estimate_cardinality(q, method, store).rows
                    micros = (time.perf_counter() - t) * 1e6
                    qe = q_error(true_rows[qid], est)
                    qs.append(qe)
                    report.detail.append({
                        "method": method, "sample_rate": rate, "seed": seed, "query_id": qid,
                        "true_rows": true_rows[qid], "est_rows": float(est), "q_error": qe,
                        "est_micros": round(micros, 1) if config.timings else 0,
                    })
                build = sum(a.build_seconds[method] for a in store.relations.values())
                if method == "bn":
                    build += compile_seconds
                report.summary.append({
                    "method": method, "sample_rate": rate, "seed": seed,
                    "mean_q": statistics.fmean(qs), "std_q": statistics.pstdev(qs),
                    "build_millis": round(build * 1e3, 3) if config.timings else 0,
                    "raw_values": storage[method].raw, "nonzero_values": storage[method].nonzero,
                })
    return report


def summarize(report: EstimateReport) -> list[dict]:
    """Mean and spread of the per-seed mean q-error per (method, rate)."""
    cells: dict = {}
    for r in report.summary:
        cells.setdefault((r["method"], r["sample_rate"]), []).append(r)
    out = []
    for (method, rate), rs in sorted(cells.items()):
        means = [r["mean_q"] for r in rs]
        out.append({
            "method": method, "sample_rate": rate,
            "mean_q": statistics.fmean(means),
            "std_q": statistics.pstdev(means) if len(means) > 1 else 0.0,
            "build_millis": statistics.fmean(r["build_millis"] for r in rs),
            "raw_values": statistics.fmean(r["raw_values"] for r in rs),
            "nonzero_values": statistics.fmean(r["nonzero_values"] for r in rs),
        })
    return out
