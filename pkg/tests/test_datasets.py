import random

import pytest

from kgcomplete import Provenance, complete, detect_cycles, typed_adjacency
from kgcomplete.datasets import (
    COMMANDS,
    RELATIVE_OF,
    FamilyTreeParams,
    RomanEmpireParams,
    gen_family_tree,
    gen_roman_empire,
    kinship_config,
    person_id,
    roman_config,
)
from kgcomplete.engine import RelationshipConfig
from kgcomplete.errors import InvalidParams

from conftest import reachable


def test_roman_defaults():
    g = gen_roman_empire()
    assert g.num_nodes() == 48
    assert g.num_edges() == 47
    labels = [n.label for n in g.nodes.values()]
    assert labels.count("Emperor") == 1
    assert labels.count("Prefecture") == 4
    assert labels.count("Diocese") == 12
    assert labels.count("Province") == 31
    for name in ("Prefecture of the East", "Prefecture of Illyricum", "Prefecture of Italy",
                 "Prefecture of the Gauls", "Diocese of Macedonia", "Diocese of Dacia",
                 "Mauretania", "Numidia", "Africa", "Palestine", "Caria"):
        assert name in g.nodes


def test_roman_is_strict_tree():
    g = gen_roman_empire()
    indeg = dict.fromkeys(g.nodes, 0)
    for e in g.edges:
        indeg[e.target] += 1
    assert [v for v, d in indeg.items() if d == 0] == ["Emperor"]
    assert all(d == 1 for v, d in indeg.items() if v != "Emperor")
    assert detect_cycles(typed_adjacency(g, COMMANDS)).acyclic
    # Macedonia and Dacia sit under Illyricum
    assert g.edge("Prefecture of Illyricum", "Diocese of Macedonia", COMMANDS) is not None
    assert g.edge("Prefecture of Illyricum", "Diocese of Dacia", COMMANDS) is not None


def test_roman_minimal_is_chain():
    g = gen_roman_empire(RomanEmpireParams(1, 1, 1))
    assert g.num_nodes() == 4 and g.num_edges() == 3
    out, rep = complete(g, RelationshipConfig(COMMANDS, threshold=0))
    assert rep.inferred_edge_count == 3


def test_roman_invalid():
    with pytest.raises(InvalidParams):
        gen_roman_empire(RomanEmpireParams(0, 1, 1))


def test_roman_completion_matches_closure():
    g = gen_roman_empire()
    arcs = [(e.source, e.target) for e in g.edges]
    closure = sum(len(reachable(arcs, v)) for v in g.nodes)
    assert closure == 121
    out, rep = complete(g, RelationshipConfig(COMMANDS, threshold=0.0))
    assert rep.inferred_edge_count == closure - 47 == 74
    out2, rep2 = complete(g, roman_config())
    assert rep2.inferred_edge_count == 74


def test_generators_are_pure():
    p = FamilyTreeParams(5, 4, 3, 0.4, seed=9)
    assert gen_family_tree(p) == gen_family_tree(p)
    assert gen_roman_empire() == gen_roman_empire()


def test_family_chain_eight_generations():
    g = gen_family_tree(FamilyTreeParams(generations=8))
    assert g.num_nodes() == 8 and g.num_edges() == 7
    out, rep = complete(g, kinship_config())
    e = out.edge(person_id(0, 0), person_id(7, 0), RELATIVE_OF)
    assert e.strength == 1 / 128 and e.provenance is Provenance.INFERRED
    assert rep.inferred_edge_count == 28 - 7


def test_family_grandparents_quarter():
    g = gen_family_tree(FamilyTreeParams(generations=3, children_per_couple=2))
    out, _ = complete(g, kinship_config())
    founder = person_id(0, 0)
    grandkids = [e.target for e in out.edges_of(RELATIVE_OF)
                 if e.source == founder and e.provenance is Provenance.INFERRED]
    assert len(grandkids) == 2
    assert all(out.edge(founder, gk, RELATIVE_OF).strength == 0.25 for gk in grandkids)


def test_family_pedigree_collapse_doubles_strength():
    # seed 0 pairs the two siblings of generation 1 with each other
    g = gen_family_tree(FamilyTreeParams(3, 1, 2, intermarriage_rate=0.9, seed=0))
    parents = {e.source for e in g.edges if e.target == person_id(2, 0)}
    assert parents == {person_id(1, 0), person_id(1, 1)}
    out, _ = complete(g, kinship_config())
    assert out.edge(person_id(0, 0), person_id(2, 0), RELATIVE_OF).strength == 0.5


def test_family_rate_zero_is_forest():
    g = gen_family_tree(FamilyTreeParams(6, 5, 3, 0.0, seed=4))
    indeg = dict.fromkeys(g.nodes, 0)
    for e in g.edges:
        indeg[e.target] += 1
    assert max(indeg.values()) == 1


def test_family_acyclic_over_random_params():
    rng = random.Random(99)
    for _ in range(100):
        p = FamilyTreeParams(rng.randint(2, 6), rng.randint(1, 5), rng.randint(1, 3),
                             rng.random() * 0.99, rng.randint(0, 10 ** 6))
        g = gen_family_tree(p)
        assert detect_cycles(typed_adjacency(g, RELATIVE_OF)).acyclic
        gen_of = {n.id: n.properties["generation"] for n in g.nodes.values()}
        assert all(gen_of[e.target] == gen_of[e.source] + 1 for e in g.edges)


@pytest.mark.parametrize("p", [
    FamilyTreeParams(generations=1),
    FamilyTreeParams(generations=0),
    FamilyTreeParams(couples_per_generation=0),
    FamilyTreeParams(intermarriage_rate=1.0),
])
def test_family_invalid(p):
    with pytest.raises(InvalidParams):
        gen_family_tree(p)
