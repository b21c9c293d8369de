"""In-memory property graph: nodes, typed directed edges and a relationship registry.

A :class:`KnowledgeGraph` is immutable once built. Completion and every other
transformation returns a new graph value.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Union

import numpy as np
import scipy.sparse as sp

from .errors import DanglingEndpoint, GraphValidationError, SelfLoop, UnknownRelationship

log = logging.getLogger(__name__)

Scalar = Union[str, int, float, bool, None]
EdgeKey = tuple[str, str, str]


class Provenance(str, Enum):
    DIRECT = "direct"
    INFERRED = "inferred"


@dataclass(frozen=True)
class Node:
    id: str
    label: str
    properties: Mapping[str, Scalar] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise GraphValidationError(f"node id must be a non-empty string, got {self.id!r}")
        if not self.label:
            raise GraphValidationError(f"node {self.id!r} has an empty label")
        for key, value in self.properties.items():
            if not isinstance(value, (str, int, float, bool, type(None))):
                raise GraphValidationError(
                    f"node {self.id!r}: property {key!r} is not a scalar ({type(value).__name__})"
                )


@dataclass(frozen=True)
class RelationshipType:
    name: str
    transitive: bool = False


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    rel: str
    strength: float | None = None
    provenance: Provenance = Provenance.DIRECT

    @property
    def key(self) -> EdgeKey:
        return (self.source, self.target, self.rel)


class KnowledgeGraph:
    """The ``(V, E, R)`` tuple with referential integrity enforced.

    Use :func:`build_graph` for untrusted input; the constructor assumes the
    caller already validated everything.
    """

    __slots__ = ("_nodes", "_edges", "_registry", "duplicates_collapsed")

    def __init__(
        self,
        nodes: dict[str, Node],
        edges: dict[EdgeKey, Edge],
        registry: dict[str, RelationshipType],
        duplicates_collapsed: int = 0,
    ):
        self._nodes = nodes
        self._edges = edges
        self._registry = registry
        self.duplicates_collapsed = duplicates_collapsed

    @property
    def nodes(self) -> Mapping[str, Node]:
        return MappingProxyType(self._nodes)

    @property
    def registry(self) -> Mapping[str, RelationshipType]:
        return MappingProxyType(self._registry)

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(self._edges.values())

    def edge(self, source: str, target: str, rel: str) -> Edge | None:
        return self._edges.get((source, target, rel))

    def edges_of(self, rel: str | None = None) -> Iterable[Edge]:
        if rel is None:
            return iter(self._edges.values())
        return (e for e in self._edges.values() if e.rel == rel)

    def num_nodes(self) -> int:
        return len(self._nodes)

    def num_edges(self) -> int:
        return len(self._edges)

    def with_edges(self, edges: dict[EdgeKey, Edge]) -> KnowledgeGraph:
        """New graph sharing nodes and registry but with a replaced edge table."""
        return KnowledgeGraph(dict(self._nodes), edges, dict(self._registry))

    def edge_table(self) -> dict[EdgeKey, Edge]:
        return dict(self._edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self._registry == other._registry
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"KnowledgeGraph(|V|={len(self._nodes)}, |E|={len(self._edges)}, "
            f"R={sorted(self._registry)})"
        )


def _check_strength(edge: Edge) -> None:
    s = edge.strength
    if s is None:
        if edge.provenance is Provenance.INFERRED:
            raise GraphValidationError(f"inferred edge {edge.key} has no strength")
        return
    if not isinstance(s, (int, float)) or not math.isfinite(s) or s <= 0:
        raise GraphValidationError(f"edge {edge.key} has invalid strength {s!r}")


def build_graph(
    nodes: Iterable[Node],
    edges: Iterable[Edge],
    registry: Iterable[RelationshipType],
) -> KnowledgeGraph:
    """Validate raw inputs and assemble a :class:`KnowledgeGraph`.

    Duplicate ``(source, target, rel)`` triples keep their first occurrence;
    the number dropped is exposed as ``duplicates_collapsed``.
    """
    reg: dict[str, RelationshipType] = {}
    for rt in registry:
        if rt.name in reg and reg[rt.name] != rt:
            raise GraphValidationError(f"relationship type {rt.name!r} registered twice")
        reg[rt.name] = rt

    node_map: dict[str, Node] = {}
    for n in nodes:
        if n.id in node_map:
            raise GraphValidationError(f"duplicate node id {n.id!r}")
        node_map[n.id] = n

    edge_map: dict[EdgeKey, Edge] = {}
    dups = 0
    for e in edges:
        if e.rel not in reg:
            raise UnknownRelationship(e.rel)
        for end in (e.source, e.target):
            if end not in node_map:
                raise DanglingEndpoint(e.source, e.target, end)
        if e.source == e.target:
            raise SelfLoop(e.source, e.rel)
        _check_strength(e)
        if e.key in edge_map:
            dups += 1
            continue
        edge_map[e.key] = e

    if dups:
        log.warning("collapsed %d duplicate edge triple(s)", dups)
    return KnowledgeGraph(node_map, edge_map, reg, duplicates_collapsed=dups)


@dataclass(frozen=True)
class TypedAdjacency:
    """Out-neighbour lists of the Direct edges of one relationship type.

    ``ids[i]`` is the node id for index ``i``; ``succ[i]`` is a sorted tuple of
    successor indices.
    """

    rel: str
    ids: tuple[str, ...]
    index: Mapping[str, int]
    succ: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.ids)

    def arcs(self) -> set[tuple[str, str]]:
        return {(self.ids[i], self.ids[j]) for i, row in enumerate(self.succ) for j in row}

    def num_arcs(self) -> int:
        return sum(len(row) for row in self.succ)

    def matrix(self, dtype: Any = np.int64) -> sp.csr_matrix:
        """Sparse 0/1 adjacency matrix, rows are sources."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(row) for row in self.succ])
        indices = np.fromiter((j for row in self.succ for j in row), dtype=np.int64,
                              count=int(indptr[-1]))
        data = np.ones(len(indices), dtype=dtype)
        return sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n))


def typed_adjacency(g: KnowledgeGraph, rel: str) -> TypedAdjacency:
    """Materialise the ``rel`` subgraph over Direct edges only."""
    if rel not in g.registry:
        raise UnknownRelationship(rel)
    ids = tuple(g.nodes)
    index = {nid: i for i, nid in enumerate(ids)}
    succ: list[list[int]] = [[] for _ in ids]
    for e in g.edges_of(rel):
        if e.provenance is Provenance.DIRECT:
            succ[index[e.source]].append(index[e.target])
    return TypedAdjacency(
        rel=rel,
        ids=ids,
        index=MappingProxyType(index),
        succ=tuple(tuple(sorted(row)) for row in succ),
    )


@dataclass(frozen=True)
class CycleReport:
    acyclic: bool
    cycle: list[str] | None = None


def detect_cycles(adj: TypedAdjacency) -> CycleReport:
    """Colour-marking DFS. On failure, ``cycle`` is closed (first == last)."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = [WHITE] * adj.n
    parent = [-1] * adj.n
    for root in range(adj.n):
        if colour[root] != WHITE:
            continue
        stack = [(root, 0)]
        colour[root] = GREY
        while stack:
            u, pos = stack[-1]
            row = adj.succ[u]
            if pos == len(row):
                colour[u] = BLACK
                stack.pop()
                continue
            stack[-1] = (u, pos + 1)
            v = row[pos]
            if colour[v] == WHITE:
                colour[v] = GREY
                parent[v] = u
                stack.append((v, 0))
            elif colour[v] == GREY:
                # back edge u -> v closes a cycle v ... u -> v
                cyc = [u]
                while cyc[-1] != v:
                    cyc.append(parent[cyc[-1]])
                cyc.reverse()
                cyc.append(v)
                return CycleReport(False, [adj.ids[i] for i in cyc])
    return CycleReport(True)
