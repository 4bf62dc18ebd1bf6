"""Selectivity estimators and cardinality composition.

Cardinality = product of join selectivities x product of per-relation
selectivities x product of full relation sizes.  Join selectivity is
``min(1/ndv(left), 1/ndv(right))`` for every method; the per-relation factor
comes from the Bayesian network, from independent histograms (textbook) or
from a Bernoulli sample.
"""
from __future__ import annotations

import time
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .bayesnet import BayesNet, VEStats, build_network, variable_eliminate
from .chowliu import TreeStructure, learn_structure
from .histogram import DEFAULT_J, DEFAULT_K, EndBiasedHistogram, build_end_biased, distinct_count, histogram_prob
from .query import Predicate, Query
from .relation import Relation, Schema, bernoulli_sample

METHODS = ("bn", "textbook", "sampling")


class MissingArtifact(KeyError):
    pass


class EmptySampleWarning(UserWarning):
    pass


@dataclass
class RelationArtifacts:
    schema: Schema
    row_count: int
    distinct: list[int]
    histograms: list[EndBiasedHistogram]
    bn: BayesNet
    sample: Optional[Relation] = None
    build_seconds: dict = field(default_factory=dict)

    def attribute_predicates(self, preds: Sequence[Predicate]) -> dict[int, Predicate]:
        return {self.schema.index(p.attribute): p for p in preds}


@dataclass
class BuildConfig:
    k: int = DEFAULT_K
    j: int = DEFAULT_J
    sample_rate: float = 0.05
    seed: int = 42

    def to_dict(self) -> dict:
        return {"k": self.k, "j": self.j, "sample_rate": self.sample_rate, "seed": self.seed}


@dataclass
class ModelStore:
    config: BuildConfig
    relations: dict[str, RelationArtifacts] = field(default_factory=dict)

    def get(self, name: str) -> RelationArtifacts:
        try:
            return self.relations[name]
        except KeyError:
            raise MissingArtifact(f"no artifacts for relation {name!r}") from None

    @property
    def schemas(self) -> dict[str, Schema]:
        return {n: a.schema for n, a in self.relations.items()}


def relation_seed(seed: int, name: str) -> int:
    """Per-relation sampling seed so equal row positions are not kept in lockstep."""
    return (seed * 0x9E3779B1 + zlib.crc32(name.encode("utf-8"))) & ((1 << 64) - 1)


def build_relation(relation: Relation, config: BuildConfig, keep_sample: bool = True) -> RelationArtifacts:
    k, j = config.k, config.j
    t0 = time.perf_counter()
    sample = bernoulli_sample(relation, config.sample_rate, relation_seed(config.seed, relation.name))
    t_sample = time.perf_counter() - t0
    t1 = time.perf_counter()
    if sample.row_count:
        hists = [build_end_biased(c, k, j) for c in sample.columns]
    else:
        hists = [EndBiasedHistogram((), (), 0, k, j) for _ in sample.columns]
    t_hist = time.perf_counter() - t1
    t2 = time.perf_counter()
    if sample.row_count and len(sample.columns) > 1:
        structure = learn_structure(sample, k, j, hists)
    else:
        structure = TreeStructure(0, (None,) + tuple(0 for _ in sample.columns[1:]))
    bn = build_network(sample, structure, k, j, hists)
    t_bn = time.perf_counter() - t2
    distinct = [distinct_count(c) for c in relation.columns]
    return RelationArtifacts(
        relation.schema, relation.row_count, distinct, hists, bn,
        sample if keep_sample else None,
        {"sampling": t_sample, "textbook": t_sample + t_hist, "bn": t_sample + t_hist + t_bn},
    )


def build_store(relations: Sequence[Relation], config: BuildConfig, keep_sample: bool = True) -> ModelStore:
    store = ModelStore(config)
    for rel in relations:
        store.relations[rel.name] = build_relation(rel, config, keep_sample)
    return store


def join_selectivity(left_ndv: int, right_ndv: int) -> float:
    if left_ndv <= 0 or right_ndv <= 0:
        return 0.0
    return min(1.0 / left_ndv, 1.0 / right_ndv)


def relation_selectivity_bn(net: BayesNet, preds: Mapping[int, Predicate],
                            stats: Optional[VEStats] = None) -> float:
    if not preds:
        return 1.0
    return variable_eliminate(net, preds, stats)


def relation_selectivity_textbook(hists: Sequence[EndBiasedHistogram], preds: Mapping[int, Predicate]) -> float:
    sel = 1.0
    for attr, pred in preds.items():
        if attr >= len(hists) or hists[attr] is None:
            raise MissingArtifact(f"no histogram for attribute {attr}")
        sel *= histogram_prob(hists[attr], pred)
    return sel


def relation_selectivity_sampling(sample: Relation, preds: Mapping[int, Predicate]) -> float:
    if sample.row_count == 0:
        warnings.warn("empty sample, selectivity taken as 0", EmptySampleWarning, stacklevel=2)
        return 0.0
    if not preds:
        return 1.0
    mask = np.ones(sample.row_count, dtype=bool)
    for attr, pred in preds.items():
        mask &= sample.columns[attr].mask(pred)
    return int(np.count_nonzero(mask)) / sample.row_count


@dataclass
class CardinalityEstimate:
    rows: float
    selectivities: dict[str, float]
    join_selectivity: float


def estimate_cardinality(query: Query, method: str, store: ModelStore,
                         stats: Optional[VEStats] = None) -> CardinalityEstimate:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    arts = {name: store.get(name) for name in query.relations}
    if query.unsatisfiable:
        return CardinalityEstimate(0.0, {name: 0.0 for name in query.relations}, 0.0)
    join_sel = 1.0
    for jp in query.joins:
        left, right = arts[jp.left[0]], arts[jp.right[0]]
        join_sel *= join_selectivity(left.distinct[left.schema.index(jp.left[1])],
                                     right.distinct[right.schema.index(jp.right[1])])
    sels = {}
    rows = join_sel
    for name, art in arts.items():
        preds = art.attribute_predicates(query.predicates_for(name))
        if method == "bn":
            sel = relation_selectivity_bn(art.bn, preds, stats)
        elif method == "textbook":
            sel = relation_selectivity_textbook(art.histograms, preds)
        else:
            if art.sample is None:
                raise MissingArtifact(f"no sample kept for relation {name!r}")
            sel = relation_selectivity_sampling(art.sample, preds)
        sels[name] = sel
        rows *= sel * art.row_count
    return CardinalityEstimate(rows, sels, join_sel)
