"""Deterministic generators for the two case-study graphs.

Neither is the historical original. The Roman hierarchy uses round-robin
assignment; the family tree is synthetic with optional pedigree collapse.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .engine import Exponential, RelationshipConfig
from .errors import InvalidParams
from .graph import Edge, KnowledgeGraph, Node, RelationshipType, build_graph

COMMANDS = "COMMANDS"
RELATIVE_OF = "RELATIVE-OF"

PREFECTURES = (
    "Prefecture of the East",
    "Prefecture of Illyricum",
    "Prefecture of Italy",
    "Prefecture of the Gauls",
)
# Positions 1 and 5 fall under Illyricum with round-robin over four prefectures.
_NAMED_DIOCESES = {1: "Diocese of Macedonia", 5: "Diocese of Dacia"}
_NAMED_PROVINCES = ("Mauretania", "Numidia", "Africa", "Palestine", "Caria")


@dataclass(frozen=True)
class RomanEmpireParams:
    prefecture_count: int = 4
    diocese_count: int = 12
    province_count: int = 31


def _names(count: int, named: dict[int, str], prefix: str) -> list[str]:
    return [named.get(i, f"{prefix} {i + 1}") for i in range(count)]


def gen_roman_empire(p: RomanEmpireParams | None = None) -> KnowledgeGraph:
    """Emperor -> prefectures -> dioceses -> provinces, one COMMANDS arc per child.

    Diocese ``i`` reports to prefecture ``i % prefecture_count`` and province
    ``j`` to diocese ``j % diocese_count``.
    """
    p = p or RomanEmpireParams()
    for name in ("prefecture_count", "diocese_count", "province_count"):
        if getattr(p, name) < 1:
            raise InvalidParams(f"{name} must be >= 1")

    prefectures = _names(p.prefecture_count, dict(enumerate(PREFECTURES)), "Prefecture")
    dioceses = _names(p.diocese_count, _NAMED_DIOCESES, "Diocese")
    provinces = _names(p.province_count, dict(enumerate(_NAMED_PROVINCES)), "Province")

    nodes = [Node("Emperor", "Emperor")]
    nodes += [Node(n, "Prefecture") for n in prefectures]
    nodes += [Node(n, "Diocese") for n in dioceses]
    nodes += [Node(n, "Province") for n in provinces]

    edges = [Edge("Emperor", n, COMMANDS) for n in prefectures]
    edges += [Edge(prefectures[i % len(prefectures)], n, COMMANDS) for i, n in enumerate(dioceses)]
    edges += [Edge(dioceses[j % len(dioceses)], n, COMMANDS) for j, n in enumerate(provinces)]
    return build_graph(nodes, edges, [RelationshipType(COMMANDS, transitive=True)])


def roman_config() -> RelationshipConfig:
    return RelationshipConfig(COMMANDS, Exponential(0.5), "sum", threshold=1 / 128, max_hops=7)


@dataclass(frozen=True)
class FamilyTreeParams:
    """Shape of a synthetic pedigree.

    Every generation forms up to ``couples_per_generation`` couples from its
    members, each having ``children_per_couple`` children. A couple is two
    in-graph members with probability ``intermarriage_rate`` (the source of
    pedigree collapse) and otherwise one member plus a spouse from outside
    the graph.
    """

    generations: int = 8
    couples_per_generation: int = 1
    children_per_couple: int = 1
    intermarriage_rate: float = 0.0
    seed: int = 0


def person_id(generation: int, i: int) -> str:
    return f"G{generation:02d}-{i:05d}"


def gen_family_tree(p: FamilyTreeParams | None = None) -> KnowledgeGraph:
    """RELATIVE-OF arcs from each parent to each child; a DAG by construction."""
    p = p or FamilyTreeParams()
    if p.generations < 2:
        raise InvalidParams("generations must be >= 2")
    if p.couples_per_generation < 1 or p.children_per_couple < 1:
        raise InvalidParams("couples_per_generation and children_per_couple must be >= 1")
    if not 0 <= p.intermarriage_rate < 1:
        raise InvalidParams("intermarriage_rate must lie in [0, 1)")

    rng = random.Random(p.seed)
    nodes: list[Node] = []
    edges: list[Edge] = []

    members = [person_id(0, i) for i in range(p.couples_per_generation)]
    nodes += [Node(m, "Person", {"generation": 0}) for m in members]
    for gen in range(1, p.generations):
        pool = list(members)
        couples: list[tuple[str, ...]] = []
        while pool and len(couples) < p.couples_per_generation:
            head = pool.pop(0)
            if len(pool) > 0 and rng.random() < p.intermarriage_rate:
                couples.append((head, pool.pop(rng.randrange(len(pool)))))
            else:
                couples.append((head,))
        children: list[str] = []
        for parents in couples:
            for _ in range(p.children_per_couple):
                child = person_id(gen, len(children))
                children.append(child)
                nodes.append(Node(child, "Person", {"generation": gen}))
                edges += [Edge(parent, child, RELATIVE_OF) for parent in parents]
        members = children
    return build_graph(nodes, edges, [RelationshipType(RELATIVE_OF, transitive=True)])


def kinship_config(max_hops: int = 7) -> RelationshipConfig:
    """Halving per generation, summed over paths, cut at 1/128."""
    return RelationshipConfig(
        RELATIVE_OF, Exponential(0.5), "sum", threshold=0.5 ** 7, max_hops=max_hops
    )
