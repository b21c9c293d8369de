import itertools
import random

import pytest
from hypothesis import given, settings

from kgcomplete import (
    Exponential,
    PowerLaw,
    RelationshipConfig,
    Table,
    complete,
    complete_bruteforce,
    enumerate_simple_paths,
    typed_adjacency,
)
from kgcomplete.errors import CyclicGraph

from conftest import REL, dags, graph_from_arcs, random_dag

DECAYS = [Exponential(0.5), PowerLaw(1.0), Table((0.9, 0.6, 0.5, 0.3, 0.2, 0.1, 0.05))]
AGGS = ["max", "avg", "sum"]


def test_enumerate_diamond(diamond):
    paths = enumerate_simple_paths(typed_adjacency(diamond, REL), "a", "d", 7)
    assert sorted(paths) == [["a", "b", "d"], ["a", "c", "d"]]


def test_enumerate_direction_matters(chain):
    assert enumerate_simple_paths(typed_adjacency(chain, REL), "c", "a", 7) == []


def test_enumerate_complete_dag():
    ids = ["w", "x", "y", "z"]
    g = graph_from_arcs(list(itertools.combinations(ids, 2)), nodes=ids)
    paths = enumerate_simple_paths(typed_adjacency(g, REL), "w", "z", 3)
    # direct, w-x-z, w-y-z, w-x-y-z
    assert len(paths) == 4
    assert len({tuple(p) for p in paths}) == 4
    assert len(enumerate_simple_paths(typed_adjacency(g, REL), "w", "z", 1)) == 1


def test_enumerate_rejects_same_endpoints(chain):
    with pytest.raises(ValueError):
        enumerate_simple_paths(typed_adjacency(chain, REL), "a", "a", 3)


def test_enumerate_simple_on_cycle():
    g = graph_from_arcs([("a", "b"), ("b", "a"), ("b", "c")])
    assert enumerate_simple_paths(typed_adjacency(g, REL), "a", "c", 10) == [["a", "b", "c"]]


def _same(g, cfg):
    fast, fr = complete(g, cfg)
    slow, sr = complete_bruteforce(g, cfg)
    fe = {e.key: e for e in fast.edges}
    se = {e.key: e for e in slow.edges}
    assert fe.keys() == se.keys()
    for k in fe:
        assert fe[k].provenance == se[k].provenance
        if fe[k].strength is None:
            assert se[k].strength is None
        else:
            assert abs(fe[k].strength - se[k].strength) <= 1e-12
    assert fr.inferred_edge_count == sr.inferred_edge_count
    assert fr.truncated_pairs_count == sr.truncated_pairs_count


def test_agree_on_chain(chain):
    _same(chain, RelationshipConfig(REL, threshold=0.001))


def test_agree_on_diamond(diamond):
    cfg = RelationshipConfig(REL, Exponential(0.5), "sum", threshold=0.0)
    _same(diamond, cfg)
    out, _ = complete_bruteforce(diamond, cfg)
    assert out.edge("a", "d", REL).strength == 0.5


def test_bruteforce_rejects_cycles():
    g = graph_from_arcs([("a", "b"), ("b", "a")])
    with pytest.raises(CyclicGraph):
        complete_bruteforce(g, RelationshipConfig(REL))


def test_agree_on_random_dags():
    rng = random.Random(1234)
    for _ in range(200):
        g = random_dag(rng, max_nodes=12, p=0.3)
        d = rng.choice(DECAYS)
        cfg = RelationshipConfig(REL, d, rng.choice(AGGS), threshold=rng.choice([0, 1 / 128, 0.2]),
                                 max_hops=rng.choice([2, 4, 7]))
        _same(g, cfg)


@settings(max_examples=100, deadline=None)
@given(dags(max_nodes=8))
def test_agree_hypothesis(g):
    for d, agg in itertools.product(DECAYS, AGGS):
        _same(g, RelationshipConfig(REL, d, agg, threshold=0.05, max_hops=5))
