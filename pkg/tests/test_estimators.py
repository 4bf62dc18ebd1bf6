import warnings

import numpy as np
import pytest
from _oracles import random_predicates, random_relation, random_tree

from chowcard.benchmark import true_cardinality
from chowcard.estimators import (BuildConfig, EmptySampleWarning, MissingArtifact, build_store,
                                 estimate_cardinality, join_selectivity, relation_selectivity_sampling,
                                 relation_selectivity_textbook)
from chowcard.generator import AttributeSpec as A
from chowcard.generator import GeneratorSpec, generate_correlated
from chowcard.histogram import histogram_prob
from chowcard.query import Predicate, Query, parse_query
from chowcard.relation import Attribute, Relation, Schema


def test_join_selectivity_examples():
    assert join_selectivity(100, 80) == 0.01
    assert join_selectivity(1, 1) == 1.0
    for k in (1, 7, 1000):
        assert join_selectivity(k, k) == 1.0 / k
    assert join_selectivity(0, 5) == 0.0


@pytest.fixture(scope="module")
def star():
    dim = generate_correlated(GeneratorSpec("dim", 500, 1, [
        A("d_sk", kind="sequence", offset=1),
        A("d_group", type="text", cardinality=5, prefix="g"),
    ])).relation
    fact = generate_correlated(GeneratorSpec("fact", 20000, 2, [
        A("f_dim", cardinality=500, offset=1),
        A("f_qty", cardinality=10, offset=1),
    ])).relation
    fd = generate_correlated(GeneratorSpec("fd", 20000, 3, [
        A("city", type="text", cardinality=50, prefix="c"),
        A("state", type="text", cardinality=5, prefix="s", parent="city", map=[c // 10 for c in range(50)]),
        A("noise", cardinality=8),
    ])).relation
    return {r.name: r for r in (dim, fact, fd)}


def _q(text, db):
    return parse_query(text, [r.schema for r in db.values()])


def test_no_predicates_and_unsatisfiable(star):
    store = build_store(list(star.values()), BuildConfig(sample_rate=0.2, seed=1))
    for m in ("bn", "textbook", "sampling"):
        assert estimate_cardinality(_q("FROM fact", star), m, store).rows == 20000
        assert estimate_cardinality(_q("FROM fact WHERE fact.f_qty > 5 AND fact.f_qty < 2", star), m, store).rows == 0


def test_dense_star_join_matches_truth(star):
    store = build_store(list(star.values()), BuildConfig(sample_rate=0.2, seed=1))
    q = _q("FROM fact, dim JOIN fact.f_dim = dim.d_sk", star)
    assert true_cardinality(q, star) == 20000
    est = estimate_cardinality(q, "textbook", store).rows
    assert est == pytest.approx(20000, rel=1e-12)


def test_textbook_is_exact_product_of_factors(star):
    store = build_store(list(star.values()), BuildConfig(sample_rate=0.2, seed=1))
    q = _q("FROM fact, dim, fd JOIN fact.f_dim = dim.d_sk JOIN fd.noise = fact.f_qty "
           "WHERE fact.f_qty <= 4 AND dim.d_group = 'g1' AND fd.state = 's2'", star)
    est = estimate_cardinality(q, "textbook", store)
    a = {n: store.get(n) for n in q.relations}
    j1 = join_selectivity(a["fact"].distinct[0], a["dim"].distinct[0])
    j2 = join_selectivity(a["fd"].distinct[2], a["fact"].distinct[1])
    attr = (histogram_prob(a["fact"].histograms[1], q.predicates_for("fact")[0])
            * histogram_prob(a["dim"].histograms[1], q.predicates_for("dim")[0])
            * histogram_prob(a["fd"].histograms[1], q.predicates_for("fd")[0]))
    expected = j1 * j2 * attr * 20000 * 500 * 20000
    assert est.rows == pytest.approx(expected, rel=1e-12)


def test_functional_dependency_pairs(star):
    store = build_store([star["fd"]], BuildConfig(k=60, j=0, sample_rate=1.0, seed=0))
    one = estimate_cardinality(_q("FROM fd WHERE fd.city = 'c13'", star), "bn", store).rows
    both = estimate_cardinality(_q("FROM fd WHERE fd.city = 'c13' AND fd.state = 's1'", star), "bn", store).rows
    bad = estimate_cardinality(_q("FROM fd WHERE fd.city = 'c13' AND fd.state = 's4'", star), "bn", store).rows
    truth = true_cardinality(_q("FROM fd WHERE fd.city = 'c13'", star), star)
    assert one == pytest.approx(truth, rel=1e-9)
    assert both == pytest.approx(one, rel=1e-9)
    assert bad == pytest.approx(0.0, abs=1e-9)
    tb = estimate_cardinality(_q("FROM fd WHERE fd.city = 'c13' AND fd.state = 's1'", star), "textbook", store).rows
    assert tb < 0.5 * both


def test_textbook_product_rule_and_zero():
    rows = [(a, b) for a in range(10) for b in range(10)] * 3
    rel = Relation.from_rows(Schema("r", (Attribute("a", "int"), Attribute("b", "int"))), rows)
    store = build_store([rel], BuildConfig(sample_rate=1.0))
    hists = store.get("r").histograms
    preds = {0: Predicate.equal("r", "a", 3), 1: Predicate.equal("r", "b", 3)}
    assert relation_selectivity_textbook(hists, preds) == pytest.approx(0.01, abs=1e-15)
    assert relation_selectivity_textbook(hists, {0: Predicate.equal("r", "a", 42)}) == 0.0


def test_independence_agreement():
    rng = np.random.default_rng(4)
    n = 50000
    rows = list(zip(rng.integers(0, 20, n).tolist(), rng.integers(0, 8, n).tolist(), rng.integers(0, 50, n).tolist()))
    rel = Relation.from_rows(Schema("r", tuple(Attribute(x, "int") for x in "abc")), rows)
    store = build_store([rel], BuildConfig(sample_rate=0.5, seed=3))
    art = store.get("r")
    from chowcard.estimators import relation_selectivity_bn
    for preds in ({0: Predicate.interval("r", "a", 2, 9), 1: Predicate.equal("r", "b", 3)},
                  {1: Predicate.interval("r", "b", None, 4), 2: Predicate.interval("r", "c", 10, 30)},
                  {0: Predicate.equal("r", "a", 5), 2: Predicate.interval("r", "c", 0, 24)}):
        bn = relation_selectivity_bn(art.bn, preds)
        tb = relation_selectivity_textbook(art.histograms, preds)
        assert tb >= 0.01
        assert abs(bn - tb) / tb <= 0.05


def test_monotone_and_bounded():
    rng = np.random.default_rng(8)
    for case in range(6):
        tree = random_tree(rng, 5)
        rel = random_relation(rng, tree, [15] * 5, 2000)
        store = build_store([rel], BuildConfig(k=4, j=3, sample_rate=0.3, seed=case))
        for _ in range(10):
            preds = random_predicates(rng, rel)
            items = list(preds.values())
            for m in ("bn", "textbook", "sampling"):
                prev = None
                for i in range(len(items) + 1):
                    q = Query(("r",), [], items[:i])
                    est = estimate_cardinality(q, m, store).rows
                    assert 0.0 <= est <= rel.row_count + 1e-9
                    if prev is not None:
                        assert est <= prev + 1e-9
                    prev = est


def test_rate_one_sampling_is_exact(star):
    store = build_store([star["fd"]], BuildConfig(sample_rate=1.0, seed=0))
    for text in ("FROM fd WHERE fd.city >= 'c20' AND fd.noise = 3", "FROM fd WHERE fd.state = 's0'"):
        q = _q(text, star)
        assert estimate_cardinality(q, "sampling", store).rows == true_cardinality(q, star)


def test_empty_sample_and_missing_artifact(star):
    empty = star["fd"].take(np.zeros(0, dtype=np.int64))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert relation_selectivity_sampling(empty, {0: Predicate.equal("fd", "city", "c1")}) == 0.0
    assert any(issubclass(x.category, EmptySampleWarning) for x in w)
    store = build_store([star["fd"]], BuildConfig())
    with pytest.raises(MissingArtifact):
        estimate_cardinality(_q("FROM dim", star), "bn", store)
    with pytest.raises(ValueError):
        estimate_cardinality(_q("FROM fd", star), "magic", store)
