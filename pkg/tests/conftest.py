from __future__ import annotations

import random
from collections import deque

import numpy as np
import pytest
from hypothesis import strategies as st

from kgcomplete import Edge, Node, RelationshipType, build_graph

REL = "COMMANDS"


def graph_from_arcs(arcs, nodes=None, rel=REL, transitive=True):
    ids = list(nodes) if nodes is not None else sorted({x for arc in arcs for x in arc})
    return build_graph(
        [Node(i, "Thing") for i in ids],
        [Edge(s, t, rel) for s, t in arcs],
        [RelationshipType(rel, transitive)],
    )


def random_dag(rng: random.Random, max_nodes: int = 12, p: float = 0.3, rel: str = REL):
    """Random DAG on shuffled ids, so topological order is not the id order."""
    n = rng.randint(2, max_nodes)
    ids = [f"n{i:02d}" for i in range(n)]
    order = ids[:]
    rng.shuffle(order)
    arcs = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return graph_from_arcs(arcs, nodes=ids, rel=rel)


def reachable(arcs, start):
    """BFS oracle: every node reachable from ``start`` (excluding itself)."""
    succ = {}
    for s, t in arcs:
        succ.setdefault(s, []).append(t)
    seen, queue = set(), deque([start])
    while queue:
        u = queue.popleft()
        for v in succ.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    seen.discard(start)
    return seen


def bfs_distance(arcs, start):
    succ = {}
    for s, t in arcs:
        succ.setdefault(s, []).append(t)
    dist, queue = {start: 0}, deque([start])
    while queue:
        u = queue.popleft()
        for v in succ.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    del dist[start]
    return dist


def solve_pagerank(g, d=0.85):
    """Direct solution of (I - d M^T) p = (1 - d) 1, M row-normalised, dangling rows zero."""
    ids = list(g.nodes)
    idx = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    A = np.zeros((n, n))
    for e in g.edges:
        A[idx[e.source], idx[e.target]] += 1.0
    out = A.sum(axis=1)
    M = np.divide(A, out[:, None], out=np.zeros_like(A), where=out[:, None] > 0)
    p = np.linalg.solve(np.eye(n) - d * M.T, np.full(n, 1 - d))
    return dict(zip(ids, p))


@st.composite
def dags(draw, max_nodes=9):
    n = draw(st.integers(2, max_nodes))
    order = draw(st.permutations([f"v{i}" for i in range(n)]))
    flags = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    pairs = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n)]
    arcs = [pr for pr, keep in zip(pairs, flags) if keep]
    return graph_from_arcs(arcs, nodes=sorted(order))


@st.composite
def digraphs(draw, max_nodes=8):
    n = draw(st.integers(1, max_nodes))
    ids = [f"v{i}" for i in range(n)]
    pairs = [(a, b) for a in ids for b in ids if a != b]
    flags = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return graph_from_arcs([pr for pr, k in zip(pairs, flags) if k], nodes=ids)


@pytest.fixture
def chain():
    return graph_from_arcs([("a", "b"), ("b", "c")])


@pytest.fixture
def diamond():
    return graph_from_arcs([("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])
