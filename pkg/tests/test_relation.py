import json

import numpy as np
import pytest

from chowcard.relation import (Attribute, Column, DuplicateAttribute, ParseFailure, Relation, Schema,
                               SchemaError, bernoulli_sample, compare, ingest_csv, load_schema,
                               row_uniforms, sort_key, write_csv)


def _schema_file(tmp_path, attrs, name="people"):
    p = tmp_path / f"{name}.schema.json"
    p.write_text(json.dumps({"relation": name, "attributes": attrs}))
    return p


def test_load_schema_keeps_file_order(tmp_path):
    p = _schema_file(tmp_path, [{"name": "hair", "type": "text"}, {"name": "nationality", "type": "text"},
                                {"name": "gender", "type": "text"}])
    s = load_schema(p)
    assert s.names == ["hair", "nationality", "gender"]
    assert [s.index(n) for n in s.names] == [0, 1, 2]


def test_load_schema_rejects_duplicates_and_bad_types(tmp_path):
    with pytest.raises(DuplicateAttribute):
        load_schema(_schema_file(tmp_path, [{"name": "a", "type": "int"}, {"name": "a", "type": "int"}]))
    with pytest.raises(SchemaError):
        load_schema(_schema_file(tmp_path, [{"name": "a", "type": "decimal"}]))
    with pytest.raises(FileNotFoundError):
        load_schema(tmp_path / "missing.json")


def test_empty_schema_is_valid(tmp_path):
    assert load_schema(_schema_file(tmp_path, [])).attributes == ()


def test_value_order_nulls_numbers_text():
    vals = ["b", 3, None, 2.5, "a", -1, 2]
    ordered = sorted(vals, key=sort_key)
    assert ordered == [None, -1, 2, 2.5, 3, "a", "b"]
    assert compare(2, 2.0) == 0
    assert compare(None, -10**9) < 0
    assert compare("Z", "a") < 0  # byte order


def test_ingest_csv_parses_types_and_nulls(tmp_path):
    schema = Schema("t", (Attribute("a", "int"), Attribute("b", "float"), Attribute("c", "text")))
    p = tmp_path / "t.csv"
    p.write_text('a,b,c\n1,2.5,x\n,3,"y, z"\n7,,\n')
    r = ingest_csv(p, schema)
    assert r.row_count == 3
    assert r.rows() == [(1, 2.5, "x"), (None, 3.0, "y, z"), (7, None, None)]


def test_ingest_csv_reports_position(tmp_path):
    schema = Schema("t", (Attribute("a", "int"), Attribute("b", "int")))
    p = tmp_path / "t.csv"
    p.write_text("a,b\n1,2\n3,1.5\n")
    with pytest.raises(ParseFailure) as err:
        ingest_csv(p, schema)
    assert (err.value.row, err.value.col) == (2, 1)


def test_ingest_csv_header_mismatch(tmp_path):
    schema = Schema("t", (Attribute("a", "int"), Attribute("b", "int")))
    p = tmp_path / "t.csv"
    p.write_text("b,a\n1,2\n")
    with pytest.raises(SchemaError):
        ingest_csv(p, schema)


def test_csv_round_trip(tmp_path):
    schema = Schema("t", (Attribute("a", "int"), Attribute("b", "float"), Attribute("c", "text")))
    r = Relation.from_rows(schema, [(1, 0.1, "x"), (None, 1e-300, ""), (3, None, 'q"uote')])
    p = tmp_path / "t.csv"
    write_csv(r, p)
    back = ingest_csv(p, schema)
    # the empty string reads back as null: the CSV dialect has no way to tell them apart
    assert back.rows() == [(1, 0.1, "x"), (None, 1e-300, None), (3, None, 'q"uote')]


def test_column_from_codes_matches_from_values():
    labels = ["c", "a", "b", "unused"]
    codes = np.array([0, 1, 2, 0, 1])
    a = Column.from_codes(codes, labels)
    b = Column.from_values(["c", "a", "b", "c", "a"])
    assert a.dictionary == b.dictionary == ("a", "b", "c")
    assert np.array_equal(a.codes, b.codes)


def test_bernoulli_rate_one_is_identity():
    schema = Schema("t", (Attribute("a", "int"),))
    r = Relation.from_rows(schema, [(i,) for i in range(100)])
    s = bernoulli_sample(r, 1.0, seed=7)
    assert s.rows() == r.rows()


def test_bernoulli_binomial_bound_and_determinism():
    n = 100_000
    schema = Schema("t", (Attribute("a", "int"),))
    r = Relation(schema, (Column(np.arange(n) % 10, tuple(range(10))),), n)
    s1 = bernoulli_sample(r, 0.5, 42)
    s2 = bernoulli_sample(r, 0.5, 42)
    sigma = (n * 0.25) ** 0.5
    assert abs(s1.row_count - n / 2) < 3 * sigma
    assert np.array_equal(s1.columns[0].codes, s2.columns[0].codes)
    assert bernoulli_sample(r, 0.5, 43).row_count != s1.row_count or \
        not np.array_equal(bernoulli_sample(r, 0.5, 43).columns[0].codes, s1.columns[0].codes)


def test_bernoulli_rejects_bad_rates():
    schema = Schema("t", (Attribute("a", "int"),))
    r = Relation.from_rows(schema, [(1,)])
    for rate in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            bernoulli_sample(r, rate, 1)


def test_uniforms_are_order_independent():
    u = row_uniforms(5, 1000)
    assert u.shape == (1000,)
    assert np.all((u >= 0) & (u < 1))
    # counter based: a prefix of a longer stream is the shorter stream
    assert np.array_equal(row_uniforms(5, 10), u[:10])


def test_kept_fraction_is_calibrated_over_seeds():
    n, rate = 2000, 0.3
    fracs = [float(np.mean(row_uniforms(s, n) < rate)) for s in range(200)]
    sigma = (rate * (1 - rate) / (n * 200)) ** 0.5
    assert abs(np.mean(fracs) - rate) < 3 * sigma
