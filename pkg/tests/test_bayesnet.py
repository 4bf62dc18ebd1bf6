import numpy as np
import pytest
from _oracles import (brute_probability, brute_steiner_all, enumerate_joint, mask_to_set, random_predicates,
                      random_relation, random_tree, recursive_trees)

from chowcard.bayesnet import UnknownAttribute, VEStats, build_network, estimate_cpd, extract_steiner, variable_eliminate
from chowcard.chowliu import TreeStructure, root_tree
from chowcard.generator import AttributeSpec, GeneratorSpec, generate_correlated
from chowcard.histogram import build_end_biased, histogram_prob
from chowcard.query import Predicate
from chowcard.relation import Attribute, Relation, Schema

PAIR = root_tree([(0, 1)], 0)
GSNHP = TreeStructure(0, (None, 0, 0, 2, 2))  # G, S, N, H, P


def test_two_nation_cpd_rows(two_nations_people):
    net = build_network(two_nations_people, PAIR)
    rows = {c.value: r for c, r in zip(net.cpds[1].parent_cells, net.cpds[1].rows)}
    assert rows["American"].mcvs == (("Blond", 0.2), ("Brown", 0.6), ("Dark", 0.2))
    assert rows["Swedish"].mcvs == (("Blond", 0.8), ("Brown", 0.2))
    assert not rows["American"].buckets and not rows["Swedish"].buckets


def test_five_nation_compressed_rows(five_nations_people):
    net = build_network(five_nations_people, PAIR, k=2, j=1)
    cpd = net.cpds[1]
    assert [c.value for c in cpd.parent_cells[:2]] == ["American", "Swedish"]
    span = cpd.parent_cells[2].span
    assert (span.lo, span.hi, span.distinct) == ("British", "French", 3)
    am, sw, bucket = cpd.rows
    assert am.mcvs == (("Blond", 0.2), ("Brown", 0.5)) and am.buckets == (("Dark", "Red", 3),)
    assert sw.mcvs == (("Blond", 0.8), ("Brown", 0.2)) and sw.buckets == ()
    assert bucket.mcvs == (("Blond", 0.4), ("Brown", 0.3)) and bucket.buckets == (("Dark", "Red", 3),)
    assert cpd.row_for("Dutch") is bucket
    assert histogram_prob(am, Predicate.equal("people", "hair", "Hazel")) == 0.1


def test_constant_parent_gives_marginal_row():
    rows = [("x", v) for v in [1, 1, 2, 3, 3, 3]]
    rel = Relation.from_rows(Schema("r", (Attribute("p", "text"), Attribute("c", "int"))), rows)
    net = build_network(rel, PAIR)
    (row,) = net.cpds[1].rows
    assert row == build_end_biased(rel.column("c"))


def test_single_attribute_network():
    rel = Relation.from_rows(Schema("r", (Attribute("a", "int"),)), [(1,), (2,), (2,)])
    net = build_network(rel, TreeStructure(0, (None,)))
    assert not net.cpds
    assert variable_eliminate(net, {0: Predicate.equal("r", "a", 2)}) == pytest.approx(2 / 3)


def test_storage_bound_n5_k2_j1():
    rng = np.random.default_rng(1)
    rel = random_relation(rng, random_tree(rng, 5), [8] * 5, 400)
    net = build_network(rel, random_tree(rng, 5), k=2, j=1)
    assert net.storage_bound() == 39
    assert net.stored_values() <= 39


def test_chain_cpds_recover_generator_tables():
    t_ab = [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]]
    t_bc = [[0.5, 0.5], [0.9, 0.1], [0.2, 0.8]]
    spec = GeneratorSpec("chain", 100000, 9, [
        AttributeSpec("a", cardinality=3, probs=[0.5, 0.3, 0.2]),
        AttributeSpec("b", cardinality=3, parent="a", table=t_ab),
        AttributeSpec("c", cardinality=2, parent="b", table=t_bc),
    ])
    rel = generate_correlated(spec).relation
    net = build_network(rel, TreeStructure(0, (None, 0, 1)), k=5, j=0)
    for child, table in ((1, t_ab), (2, t_bc)):
        got = np.array([[dict(r.mcvs).get(v, 0.0) for v in range(len(table[0]))] for r in net.cpds[child].rows])
        assert np.max(np.abs(got - np.array(table))) <= 0.02


def test_gsnhp_steiner():
    assert extract_steiner(GSNHP, {3}) == {0, 2, 3}
    assert extract_steiner(GSNHP, {0}) == {0}
    assert extract_steiner(GSNHP, set(range(5))) == set(range(5))
    assert extract_steiner(GSNHP, {1, 4}) == {0, 1, 2, 4}
    with pytest.raises(ValueError):
        extract_steiner(GSNHP, set())
    with pytest.raises(UnknownAttribute):
        extract_steiner(GSNHP, {7})


def test_steiner_minimal_on_small_trees():
    for n in range(1, 6):
        for tree in recursive_trees(n):
            best = brute_steiner_all(tree)
            for t in range(1, 1 << n):
                assert extract_steiner(tree, mask_to_set(t)) == mask_to_set(best[t])


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    cards = [int(c) for c in rng.integers(2, 6, n)]
    true_tree = random_tree(rng, n)
    rel = random_relation(rng, true_tree, cards, int(rng.integers(30, 120)))
    return rng, rel, random_tree(rng, n)


@pytest.mark.parametrize("seed", range(15))
def test_ve_matches_enumeration(seed):
    rng, rel, tree = _random_case(seed)
    net = build_network(rel, tree, k=8, j=0)
    combos, probs = enumerate_joint(rel, tree)
    for _ in range(5):
        preds = random_predicates(rng, rel)
        assert variable_eliminate(net, preds) == pytest.approx(brute_probability(combos, probs, preds), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_root_invariance(seed):
    rng, rel, tree = _random_case(100 + seed)
    edges = tree.edges()
    nets = [build_network(rel, root_tree(edges, r, tree.n), k=8, j=0) for r in range(tree.n)]
    for _ in range(5):
        preds = random_predicates(rng, rel)
        vals = [variable_eliminate(net, preds) for net in nets]
        assert max(vals) - min(vals) <= 1e-9


def test_single_root_predicate_reduces_to_histogram():
    rng, rel, tree = _random_case(7)
    net = build_network(rel, tree, k=2, j=2)
    pred = Predicate.interval("r", f"a{tree.root}", 1, 3)
    assert variable_eliminate(net, {tree.root: pred}) == histogram_prob(net.root_hist, pred)
    assert variable_eliminate(net, {}) == 1.0


def test_rows_touched_bound_and_normalisation():
    rng = np.random.default_rng(11)
    tree = random_tree(rng, 6)
    rel = random_relation(rng, tree, [12] * 6, 3000)
    k, j = 3, 2
    net = build_network(rel, tree, k=k, j=j)
    for _ in range(20):
        preds = random_predicates(rng, rel)
        stats = VEStats()
        variable_eliminate(net, preds, stats)
        assert stats.rows_touched <= (k + j) * stats.steiner_nodes
    # ranges tiling one attribute's domain sum to the unconstrained result
    others = {0: Predicate.interval("r", "a0", 2, 8)}
    base = variable_eliminate(net, others)
    for cuts in ([2, 5, 8], list(range(-1, 12))):
        edges = [None] + cuts + [None]
        for a in range(1, 6):
            total = sum(variable_eliminate(net, {**others, a: Predicate.interval("r", f"a{a}", lo, hi,
                                                                                lo_inclusive=False)})
                        for lo, hi in zip(edges, edges[1:]))
            assert total == pytest.approx(base, abs=1e-9)


def test_unknown_attribute_in_ve():
    rng, rel, tree = _random_case(3)
    net = build_network(rel, tree)
    with pytest.raises(UnknownAttribute):
        variable_eliminate(net, {99: Predicate.equal("r", "a0", 1)})


def test_estimate_cpd_index_check(two_nations_people):
    with pytest.raises(IndexError):
        estimate_cpd(two_nations_people, 5, 0, build_end_biased(two_nations_people.columns[0]))
