"""Synthetic relations drawn from a forest-factorised joint distribution.

A generator spec is JSON::

    {"relation": "item", "rows": 5000, "seed": 3,
     "attributes": [
        {"name": "i_item_sk", "type": "int", "kind": "sequence"},
        {"name": "i_category", "type": "text", "cardinality": 10, "prefix": "cat", "zipf": 0.8},
        {"name": "i_class", "type": "text", "cardinality": 60, "prefix": "cls",
         "parent": "i_category", "table": [[...], ...]},
        {"name": "i_brand", "type": "int", "cardinality": 600, "offset": 1000,
         "parent": "i_class", "map": [...], "noise": 0.05}]}

Value ``i`` of an attribute is ``offset + i * step`` for numbers and
``f"{prefix}{i:0Nd}"`` for text (or an explicit ``values`` list).  Root
attributes follow ``probs`` / ``zipf`` / uniform.  A child either gives a
conditional ``table`` (one row per parent value) or a functional ``map``
from parent index to child index, optionally blended with its own marginal
by ``noise``.  ``kind: sequence`` yields a unique key ``offset .. offset+rows-1``
which may itself be a parent (with ``map`` of length ``rows``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .relation import Attribute, Column, Relation, Schema


class GeneratorSpecError(ValueError):
    pass


@dataclass
class AttributeSpec:
    name: str
    type: str = "int"
    kind: str = "categorical"  # or "sequence"
    cardinality: int = 0
    values: Optional[list] = None
    prefix: str = "v"
    offset: float = 0
    step: float = 1
    probs: Optional[list] = None
    zipf: Optional[float] = None
    parent: Optional[str] = None
    table: Optional[list] = None
    map: Optional[list] = None
    noise: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise GeneratorSpecError(f"unknown attribute keys {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        out = {}
        for name, f in self.__dataclass_fields__.items():
            v = getattr(self, name)
            if v != f.default:
                out[name] = v
        return out


@dataclass
class GeneratorSpec:
    relation: str
    rows: int
    seed: int = 0
    attributes: list[AttributeSpec] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        try:
            return cls(str(d["relation"]), int(d["rows"]), int(d.get("seed", 0)),
                       [AttributeSpec.from_dict(a) for a in d["attributes"]])
        except (KeyError, TypeError) as exc:
            raise GeneratorSpecError(f"malformed generator spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {"relation": self.relation, "rows": self.rows, "seed": self.seed,
                "attributes": [a.to_dict() for a in self.attributes]}


def load_specs(path) -> list[GeneratorSpec]:
    """A file holds one spec or ``{"relations": [spec, ...]}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    items = data["relations"] if "relations" in data else [data]
    return [GeneratorSpec.from_dict(d) for d in items]


def _labels(a: AttributeSpec, card: int) -> list:
    if a.values is not None:
        return list(a.values)
    if a.type == "text":
        width = len(str(max(card - 1, 0)))
        return [f"{a.prefix}{i:0{width}d}" for i in range(card)]
    if a.type == "float":
        return [float(a.offset + i * a.step) for i in range(card)]
    return [int(a.offset + i * a.step) for i in range(card)]


def _check_dist(p: np.ndarray, what: str) -> np.ndarray:
    if p.ndim != 1 or len(p) == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise GeneratorSpecError(f"{what} is not a normalised distribution")
    return p


@dataclass
class GeneratedRelation:
    """Relation plus the analytic distribution it was drawn from."""

    relation: Relation
    labels: dict[str, list]
    marginals: dict[str, np.ndarray]
    tables: dict[str, np.ndarray]  # child -> P(child | parent), parent x child
    parents: dict[str, Optional[str]]

    def marginal(self, name: str) -> dict:
        return dict(zip(self.labels[name], self.marginals[name].tolist()))

    def pair_joint(self, parent: str, child: str) -> np.ndarray:
        """P(parent = a, child = b) for a direct edge."""
        if self.parents.get(child) != parent:
            raise KeyError(f"{parent} -> {child} is not an edge")
        return self.marginals[parent][:, None] * self.tables[child]

    def probability(self, assignment: dict) -> float:
        """Exact P(all name = value) under the generating forest."""
        idx = {n: self.labels[n].index(v) for n, v in assignment.items()}
        children: dict[str, list] = {n: [] for n in self.labels}
        for c, p in self.parents.items():
            if p is not None:
                children[p].append(c)

        def up(node: str) -> np.ndarray:
            vec = np.ones(len(self.labels[node]))
            if node in idx:
                ev = np.zeros_like(vec)
                ev[idx[node]] = 1.0
                vec *= ev
            for c in children[node]:
                vec *= self.tables[c] @ up(c)
            return vec

        total = 1.0
        for root in (n for n, p in self.parents.items() if p is None):
            total *= float(self.marginals[root] @ up(root))
        return total


def generate_correlated(spec: GeneratorSpec) -> GeneratedRelation:
    rng = np.random.default_rng(spec.seed)
    n = spec.rows
    by_name = {a.name: a for a in spec.attributes}
    if len(by_name) != len(spec.attributes):
        raise GeneratorSpecError("duplicate attribute names")
    for a in spec.attributes:
        if a.parent is not None and a.parent not in by_name:
            raise GeneratorSpecError(f"{a.name}: unknown parent {a.parent}")
    # parents before children; a cycle leaves nodes unplaced
    order: list[str] = []
    placed: set = set()
    while len(order) < len(spec.attributes):
        progressed = False
        for a in spec.attributes:
            if a.name not in placed and (a.parent is None or a.parent in placed):
                order.append(a.name)
                placed.add(a.name)
                progressed = True
        if not progressed:
            raise GeneratorSpecError("dependency edges contain a cycle")

    codes: dict[str, np.ndarray] = {}
    labels: dict[str, list] = {}
    marginals: dict[str, np.ndarray] = {}
    tables: dict[str, np.ndarray] = {}
    for name in order:
        a = by_name[name]
        if a.kind == "sequence":
            card = n
            labels[name] = _labels(a, card)
            codes[name] = np.arange(n, dtype=np.int64)
            marginals[name] = np.full(n, 1.0 / n) if n else np.zeros(0)
            if a.parent is not None:
                raise GeneratorSpecError(f"{name}: a sequence cannot have a parent")
            continue
        card = len(a.values) if a.values is not None else a.cardinality
        if card < 1:
            raise GeneratorSpecError(f"{name}: cardinality must be positive")
        labels[name] = _labels(a, card)
        if a.probs is not None:
            base = _check_dist(np.asarray(a.probs, dtype=float), f"{name}.probs")
            if len(base) != card:
                raise GeneratorSpecError(f"{name}: {len(base)} probs for {card} values")
        elif a.zipf is not None:
            w = 1.0 / np.arange(1, card + 1) ** a.zipf
            base = w / w.sum()
        else:
            base = np.full(card, 1.0 / card)
        if a.parent is None:
            marginals[name] = base
            codes[name] = rng.choice(card, size=n, p=base) if n else np.zeros(0, dtype=np.int64)
            continue
        pcard = len(labels[a.parent])
        if a.table is not None:
            table = np.asarray(a.table, dtype=float)
            if table.shape != (pcard, card):
                raise GeneratorSpecError(f"{name}: table shape {table.shape} != {(pcard, card)}")
            for r, row in enumerate(table):
                _check_dist(row, f"{name}.table[{r}]")
        elif a.map is not None:
            fmap = np.asarray(a.map, dtype=np.int64)
            if fmap.shape != (pcard,) or fmap.min() < 0 or fmap.max() >= card:
                raise GeneratorSpecError(f"{name}: map must send {pcard} parent values into 0..{card - 1}")
            table = np.zeros((pcard, card))
            table[np.arange(pcard), fmap] = 1.0
        else:
            raise GeneratorSpecError(f"{name}: a child needs a table or a map")
        if a.noise:
            if not 0.0 <= a.noise <= 1.0:
                raise GeneratorSpecError(f"{name}: noise must lie in [0, 1]")
            table = (1.0 - a.noise) * table + a.noise * base[None, :]
        tables[name] = table
        marginals[name] = marginals[a.parent] @ table
        codes[name] = _draw_conditional(rng, table, codes[a.parent])

    schema = Schema(spec.relation, tuple(Attribute(a.name, a.type) for a in spec.attributes))
    cols = tuple(Column.from_codes(codes[a.name], labels[a.name]) for a in spec.attributes)
    rel = Relation(schema, cols, n)
    return GeneratedRelation(rel, labels, marginals, tables, {a.name: a.parent for a in spec.attributes})


def _draw_conditional(rng: np.random.Generator, table: np.ndarray, parent_codes: np.ndarray) -> np.ndarray:
    n = len(parent_codes)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    card = table.shape[1]
    cdf = np.cumsum(table, axis=1)
    cdf[:, -1] = 1.0
    # row p of the shifted cdf lives in [p, p + 1], so one searchsorted serves every row
    shifted = (cdf + np.arange(table.shape[0])[:, None]).ravel()
    u = rng.random(n)
    pos = np.searchsorted(shifted, parent_codes + u, side="right")
    out = pos - parent_codes * card
    return np.clip(out, 0, card - 1)


def generate_many(specs: Sequence[GeneratorSpec]) -> list[GeneratedRelation]:
    return [generate_correlated(s) for s in specs]
