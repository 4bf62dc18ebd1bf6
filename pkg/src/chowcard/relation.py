"""Typed columnar relations: schemas, CSV ingestion and Bernoulli sampling.

Values are plain Python scalars: ``None`` is the null sentinel, ``int`` and
``float`` compare numerically and ``str`` sorts after every number.  Each
column is dictionary encoded: a tuple of distinct values in value order plus
an integer code per row.  Histograms, mutual information and GROUP BY style
aggregation then reduce to ``numpy.bincount`` over codes.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

Value = Union[None, int, float, str]

TYPES = ("int", "float", "text")


class SchemaError(ValueError):
    pass


class DuplicateAttribute(SchemaError):
    pass


class ParseFailure(ValueError):
    def __init__(self, row: int, col: int, message: str):
        super().__init__(f"row {row}, column {col}: {message}")
        self.row = row
        self.col = col


def sort_key(value: Value) -> tuple:
    """Key implementing the total order null < numbers < text."""
    if value is None:
        return (0, 0)
    if isinstance(value, str):
        # Code point order of str equals byte order of its UTF-8 encoding.
        return (2, value)
    return (1, value)


def compare(a: Value, b: Value) -> int:
    ka, kb = sort_key(a), sort_key(b)
    return (ka > kb) - (ka < kb)


def sorted_values(values: Iterable[Value]) -> list:
    return sorted(values, key=sort_key)


@dataclass(frozen=True)
class Attribute:
    name: str
    type: str


@dataclass(frozen=True)
class Schema:
    relation: str
    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        seen = set()
        for attr in self.attributes:
            if attr.type not in TYPES:
                raise SchemaError(f"unknown type {attr.type!r} for {attr.name!r}")
            if attr.name in seen:
                raise DuplicateAttribute(f"duplicate attribute {attr.name!r} in {self.relation!r}")
            seen.add(attr.name)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def index(self, name: str) -> int:
        for i, attr in enumerate(self.attributes):
            if attr.name == name:
                return i
        raise KeyError(f"{self.relation} has no attribute {name!r}")

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "attributes": [{"name": a.name, "type": a.type} for a in self.attributes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schema":
        try:
            attrs = tuple(Attribute(str(a["name"]), str(a["type"])) for a in data["attributes"])
            return cls(str(data["relation"]), attrs)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema: {exc}") from exc


def load_schema(path: str | os.PathLike) -> Schema:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    return Schema.from_dict(data)


@dataclass(frozen=True, eq=False)
class Column:
    """Dictionary-encoded column.

    ``dictionary`` holds distinct values in value order.  It may contain
    values that no longer occur after sampling; ``present_codes`` gives the
    ones that do.
    """

    codes: np.ndarray
    dictionary: tuple

    def __len__(self) -> int:
        return len(self.codes)

    @classmethod
    def from_values(cls, values: Sequence[Value]) -> "Column":
        index: dict = {}
        raw = np.empty(len(values), dtype=np.int64)
        for i, v in enumerate(values):
            code = index.get(v)
            if code is None:
                # 1 and 1.0 are equal dict keys; columns are homogeneously typed
                code = index[v] = len(index)
            raw[i] = code
        return cls.from_codes(raw, list(index))

    @classmethod
    def from_codes(cls, codes: np.ndarray, labels: Sequence[Value]) -> "Column":
        """Build from codes into an arbitrary label list.

        Unused labels are dropped and the rest sorted, so the result equals
        ``from_values`` on the same data.
        """
        codes = np.asarray(codes, dtype=np.int64)
        used = np.flatnonzero(np.bincount(codes, minlength=len(labels))) if len(codes) else np.zeros(0, np.int64)
        order = sorted(used.tolist(), key=lambda i: sort_key(labels[i]))
        remap = np.full(len(labels), -1, dtype=np.int64)
        remap[order] = np.arange(len(order), dtype=np.int64)
        return cls(remap[codes] if len(codes) else codes, tuple(labels[i] for i in order))

    def counts(self) -> np.ndarray:
        return np.bincount(self.codes, minlength=len(self.dictionary))

    def values(self) -> list:
        d = self.dictionary
        return [d[c] for c in self.codes.tolist()]

    def take(self, rows: np.ndarray) -> "Column":
        return Column(self.codes[rows], self.dictionary)

    def mask(self, predicate) -> np.ndarray:
        """Boolean row mask of ``predicate.matches`` evaluated once per dictionary entry."""
        hit = np.fromiter((predicate.matches(v) for v in self.dictionary), dtype=bool,
                          count=len(self.dictionary))
        return hit[self.codes] if len(self.dictionary) else np.zeros(len(self.codes), dtype=bool)


@dataclass(frozen=True, eq=False)
class Relation:
    schema: Schema
    columns: tuple[Column, ...]
    row_count: int = field(default=-1)

    def __post_init__(self):
        if len(self.columns) != len(self.schema.attributes):
            raise SchemaError("column count does not match schema")
        n = len(self.columns[0]) if self.columns else max(self.row_count, 0)
        if any(len(c) != n for c in self.columns):
            raise SchemaError("columns differ in length")
        object.__setattr__(self, "row_count", n)

    @property
    def name(self) -> str:
        return self.schema.relation

    def column(self, name: str) -> Column:
        return self.columns[self.schema.index(name)]

    def take(self, rows: np.ndarray) -> "Relation":
        return Relation(self.schema, tuple(c.take(rows) for c in self.columns), len(rows))

    def rows(self) -> list[tuple]:
        cols = [c.values() for c in self.columns]
        return list(zip(*cols)) if cols else [()] * self.row_count

    @classmethod
    def from_rows(cls, schema: Schema, rows: Sequence[Sequence[Value]]) -> "Relation":
        cols = tuple(Column.from_values([r[i] for r in rows]) for i in range(len(schema.attributes)))
        return cls(schema, cols, len(rows))


def _parse_cell(text: str, type_: str):
    if text == "":
        return None
    if type_ == "int":
        return int(text)
    if type_ == "float":
        return float(text)
    return text


def ingest_csv(path: str | os.PathLike, schema: Schema) -> Relation:
    """Read a headed CSV file, parsing each cell to its declared type."""
    types = [a.type for a in schema.attributes]
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        if header != schema.names:
            raise SchemaError(f"{path}: header {header} does not match schema {schema.names}")
        values: list[list] = [[] for _ in types]
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(types):
                raise ParseFailure(row_no, len(row), f"expected {len(types)} cells")
            for col_no, (cell, type_) in enumerate(zip(row, types)):
                try:
                    values[col_no].append(_parse_cell(cell, type_))
                except ValueError:
                    raise ParseFailure(row_no, col_no, f"cannot parse {cell!r} as {type_}") from None
    n = len(values[0]) if values else 0
    return Relation(schema, tuple(Column.from_values(v) for v in values), n)


def _format_cell(value: Value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(relation: Relation, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(relation.schema.names)
        cols = [[_format_cell(v) for v in c.dictionary] for c in relation.columns]
        codes = [c.codes.tolist() for c in relation.columns]
        for i in range(relation.row_count):
            writer.writerow([col[cs[i]] for col, cs in zip(cols, codes)])


_MASK64 = (1 << 64) - 1


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def row_uniforms(seed: int, n: int) -> np.ndarray:
    """Uniforms in [0, 1) keyed by (seed, row index); counter based, order independent."""
    key = _splitmix64(np.array([seed & _MASK64], dtype=np.uint64))[0]
    with np.errstate(over="ignore"):
        x = _splitmix64(np.arange(n, dtype=np.uint64) ^ key)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def bernoulli_sample(relation: Relation, rate: float, seed: int) -> Relation:
    """Keep each row independently with probability ``rate``."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"sample rate must be in (0, 1], got {rate}")
    if rate == 1.0:
        return relation
    with np.errstate(over="ignore"):
        keep = row_uniforms(seed, relation.row_count) < rate
    return relation.take(np.flatnonzero(keep))
