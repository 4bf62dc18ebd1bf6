"""Query representation and the conjunctive predicate DSL.

Grammar (keywords are case-insensitive, BETWEEN is inclusive)::

    query    := "FROM" rel ("," rel)* join* ("WHERE" conj)?
    join     := "JOIN" qattr "=" qattr
    conj     := pred ("AND" pred)*
    pred     := qattr ("=" literal | cmp literal | "BETWEEN" literal "AND" literal)
    cmp      := "<" | "<=" | ">" | ">="
    qattr    := rel "." attr
    literal  := integer | float | "'" text "'"
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .relation import Schema, Value


class QueryError(ValueError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownName(QueryError):
    pass


class UnknownRelation(UnknownName):
    pass


class TypeMismatch(QueryError):
    pass


def value_family(v: Value) -> Optional[str]:
    if v is None:
        return None
    return "text" if isinstance(v, str) else "num"


@dataclass(frozen=True)
class Predicate:
    """Equality or interval constraint on one attribute.

    For ranges a bound of ``None`` means unbounded; null literals do not exist
    in the DSL so there is no ambiguity with the null sentinel.
    """

    relation: str
    attribute: str
    kind: str  # "eq" | "range"
    lo: Value = None
    hi: Value = None
    lo_inclusive: bool = True
    hi_inclusive: bool = True

    @classmethod
    def equal(cls, relation: str, attribute: str, value: Value) -> "Predicate":
        return cls(relation, attribute, "eq", value, value, True, True)

    @classmethod
    def interval(cls, relation: str, attribute: str, lo: Value = None, hi: Value = None,
                 lo_inclusive: bool = True, hi_inclusive: bool = True) -> "Predicate":
        return cls(relation, attribute, "range", lo, hi, lo_inclusive, hi_inclusive)

    @property
    def value(self) -> Value:
        return self.lo

    @property
    def is_eq(self) -> bool:
        return self.kind == "eq"

    def literal_family(self) -> Optional[str]:
        return value_family(self.lo if self.lo is not None else self.hi)

    def matches(self, v: Value) -> bool:
        if v is None:
            return False
        fam = self.literal_family()
        if fam is not None and value_family(v) != fam:
            return False
        if self.is_eq:
            return v == self.lo
        if self.lo is not None and (v < self.lo or (v == self.lo and not self.lo_inclusive)):
            return False
        if self.hi is not None and (v > self.hi or (v == self.hi and not self.hi_inclusive)):
            return False
        return True

    def is_empty(self) -> bool:
        if self.is_eq or self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_inclusive and self.hi_inclusive)

    def normalized(self) -> "Predicate":
        """Collapse a one-point closed interval into an equality."""
        if (not self.is_eq and self.lo is not None and self.lo == self.hi
                and self.lo_inclusive and self.hi_inclusive):
            return Predicate.equal(self.relation, self.attribute, self.lo)
        return self

    def intersect(self, other: "Predicate") -> Optional["Predicate"]:
        """Conjunction of two predicates on the same attribute; ``None`` if empty."""
        if self.is_eq:
            return self if other.matches(self.lo) else None
        if other.is_eq:
            return other if self.matches(other.lo) else None
        lo, lo_inc = self.lo, self.lo_inclusive
        if other.lo is not None and (lo is None or other.lo > lo):
            lo, lo_inc = other.lo, other.lo_inclusive
        elif other.lo is not None and other.lo == lo:
            lo_inc = lo_inc and other.lo_inclusive
        hi, hi_inc = self.hi, self.hi_inclusive
        if other.hi is not None and (hi is None or other.hi < hi):
            hi, hi_inc = other.hi, other.hi_inclusive
        elif other.hi is not None and other.hi == hi:
            hi_inc = hi_inc and other.hi_inclusive
        merged = replace(self, lo=lo, hi=hi, lo_inclusive=lo_inc, hi_inclusive=hi_inc)
        return None if merged.is_empty() else merged.normalized()

    def describe(self) -> str:
        name = f"{self.relation}.{self.attribute}"
        if self.is_eq:
            return f"{name} = {self.lo!r}"
        parts = []
        if self.lo is not None:
            parts.append(f"{name} {'>=' if self.lo_inclusive else '>'} {self.lo!r}")
        if self.hi is not None:
            parts.append(f"{name} {'<=' if self.hi_inclusive else '<'} {self.hi!r}")
        return " AND ".join(parts) or f"{name} unconstrained"


@dataclass(frozen=True)
class JoinPredicate:
    left: tuple[str, str]
    right: tuple[str, str]

    def __post_init__(self):
        if self.left[0] == self.right[0]:
            raise QueryError("join predicate must connect two different relations")


@dataclass
class Query:
    relations: tuple[str, ...]
    joins: list[JoinPredicate] = field(default_factory=list)
    predicates: list[Predicate] = field(default_factory=list)
    unsatisfiable: bool = False
    text: str = ""

    def predicates_for(self, relation: str) -> list[Predicate]:
        return [p for p in self.predicates if p.relation == relation]


def merge_predicates(preds: Iterable[Predicate]) -> tuple[list[Predicate], bool]:
    """Intersect predicates per attribute; returns (merged list, unsatisfiable)."""
    merged: dict[tuple[str, str], Predicate] = {}
    unsat = False
    for p in preds:
        key = (p.relation, p.attribute)
        p = p.normalized()
        if p.is_empty():
            unsat = True
            continue
        if key in merged:
            both = merged[key].intersect(p)
            if both is None:
                unsat = True
                continue
            merged[key] = both
        else:
            merged[key] = p
    return list(merged.values()), unsat


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<float>[-+]?(?:\d+\.\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?\d+[eE][-+]?\d+)
  | (?P<int>[-+]?\d+)
  | (?P<str>'(?:[^']|'')*')
  | (?P<op><=|>=|<>|!=|[=<>,.])
  | (?P<word>[A-Za-z_][A-Za-z_0-9]*)
""", re.VERBOSE)

KEYWORDS = {"FROM", "JOIN", "WHERE", "AND", "BETWEEN", "OR", "NOT"}


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "word" and tok.upper() in KEYWORDS:
                kind, tok = "kw", tok.upper()
            tokens.append(_Token(kind, tok, pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, schemas: Mapping[str, Schema]):
        self.tokens = tokenize(text)
        self.i = 0
        self.schemas = schemas
        self.relations: list[str] = []

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of input"
            raise QuerySyntaxError(f"expected {want!r}, found {got!r}", tok.pos)
        return self.advance()

    def at_kw(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.text == word

    def parse(self, text: str) -> Query:
        self.expect("kw", "FROM")
        self.relations.append(self.relation_name())
        while self.peek().kind == "op" and self.peek().text == ",":
            self.advance()
            self.relations.append(self.relation_name())
        joins = []
        while self.at_kw("JOIN"):
            self.advance()
            left = self.qattr()
            self.expect("op", "=")
            right = self.qattr()
            if left[0] == right[0]:
                raise QueryError(f"join {left} = {right} must connect two relations")
            joins.append(JoinPredicate(left, right))
        preds = []
        if self.at_kw("WHERE"):
            self.advance()
            preds.extend(self.pred())
            while self.at_kw("AND"):
                self.advance()
                preds.extend(self.pred())
        tok = self.peek()
        if tok.kind == "kw" and tok.text in ("OR", "NOT"):
            raise QuerySyntaxError(f"{tok.text} is not supported, only conjunctions", tok.pos)
        if tok.kind != "eof":
            raise QuerySyntaxError(f"unexpected {tok.text!r}", tok.pos)
        merged, unsat = merge_predicates(preds)
        return Query(tuple(self.relations), joins, merged, unsat, text)

    def relation_name(self) -> str:
        tok = self.expect("word")
        if tok.text not in self.schemas:
            raise UnknownRelation(f"unknown relation {tok.text!r} at position {tok.pos}")
        if tok.text in self.relations:
            raise QueryError(f"relation {tok.text!r} listed twice")
        return tok.text

    def qattr(self) -> tuple[str, str]:
        rel = self.expect("word")
        self.expect("op", ".")
        attr = self.expect("word")
        if rel.text not in self.relations:
            raise UnknownName(f"relation {rel.text!r} is not in FROM (position {rel.pos})")
        if attr.text not in self.schemas[rel.text].names:
            raise UnknownName(f"unknown attribute {rel.text}.{attr.text} at position {attr.pos}")
        return rel.text, attr.text

    def literal(self, rel: str, attr: str) -> Value:
        tok = self.advance()
        type_ = self.schemas[rel].attributes[self.schemas[rel].index(attr)].type
        if tok.kind == "str":
            if type_ != "text":
                raise TypeMismatch(f"text literal for {type_} attribute {rel}.{attr}")
            return tok.text[1:-1].replace("''", "'")
        if tok.kind in ("int", "float"):
            if type_ == "text":
                raise TypeMismatch(f"numeric literal for text attribute {rel}.{attr}")
            if type_ == "float":
                return float(tok.text)
            number = float(tok.text) if tok.kind == "float" else int(tok.text)
            if isinstance(number, float):
                if not number.is_integer():
                    raise TypeMismatch(f"non-integral literal {tok.text} for int attribute {rel}.{attr}")
                number = int(number)
            return number
        raise QuerySyntaxError(f"expected a literal, found {tok.text or 'end of input'!r}", tok.pos)

    def pred(self) -> list[Predicate]:
        rel, attr = self.qattr()
        tok = self.advance()
        if tok.kind == "kw" and tok.text == "BETWEEN":
            lo = self.literal(rel, attr)
            self.expect("kw", "AND")
            hi = self.literal(rel, attr)
            return [Predicate.interval(rel, attr, lo, hi)]
        if tok.kind != "op" or tok.text not in ("=", "<", "<=", ">", ">="):
            raise QuerySyntaxError(f"expected a comparison, found {tok.text or 'end of input'!r}", tok.pos)
        v = self.literal(rel, attr)
        if tok.text == "=":
            return [Predicate.equal(rel, attr, v)]
        if tok.text[0] == "<":
            return [Predicate.interval(rel, attr, None, v, True, tok.text == "<=")]
        return [Predicate.interval(rel, attr, v, None, tok.text == ">=", True)]


def parse_query(text: str, schemas: Mapping[str, Schema] | Iterable[Schema]) -> Query:
    if not isinstance(schemas, Mapping):
        schemas = {s.relation: s for s in schemas}
    return _Parser(text, schemas).parse(text)
