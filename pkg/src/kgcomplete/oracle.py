"""Exhaustive path enumeration, used as an independent check on the engine.

Exponential in the worst case. Meant for graphs of a dozen or so nodes.
"""

from __future__ import annotations

import time

from .engine import (
    Aggregation,
    CompletionReport,
    RelationshipConfig,
    check_completable,
    materialize,
)
from .errors import CyclicGraph
from .graph import KnowledgeGraph, TypedAdjacency, detect_cycles, typed_adjacency


def enumerate_simple_paths(
    adj: TypedAdjacency, x: str, z: str, max_hops: int | None
) -> list[list[str]]:
    """All simple directed paths from ``x`` to ``z`` with at most ``max_hops`` arcs.

    ``max_hops=None`` lifts the bound.
    """
    if x == z:
        raise ValueError("source and target must differ")
    src, dst = adj.index[x], adj.index[z]
    limit = adj.n if max_hops is None else max_hops
    found: list[list[str]] = []
    path = [src]
    on_path = {src}

    def walk(u: int) -> None:
        if len(path) - 1 >= limit:
            return
        for v in adj.succ[u]:
            if v in on_path:
                continue
            if v == dst:
                found.append([adj.ids[i] for i in path] + [adj.ids[v]])
                continue
            path.append(v)
            on_path.add(v)
            walk(v)
            path.pop()
            on_path.discard(v)

    walk(src)
    return found


def _combine(values: list[float], agg: Aggregation) -> float:
    if agg is Aggregation.MAX:
        return max(values)
    if agg is Aggregation.SUM:
        return sum(values)
    return sum(values) / len(values)


def complete_bruteforce(
    g: KnowledgeGraph, cfg: RelationshipConfig
) -> tuple[KnowledgeGraph, CompletionReport]:
    """Same contract as :func:`kgcomplete.engine.complete`, by per-pair enumeration."""
    started = time.perf_counter()
    check_completable(g, cfg)
    adj = typed_adjacency(g, cfg.rel)
    report = detect_cycles(adj)
    if not report.acyclic:
        raise CyclicGraph(cfg.rel, report.cycle or [])

    strengths: dict[tuple[str, str], tuple[float, int]] = {}
    truncated = 0
    for x in adj.ids:
        for z in adj.ids:
            if x == z:
                continue
            paths = enumerate_simple_paths(adj, x, z, None)
            hops = [len(p) - 1 for p in paths]
            if any(h > cfg.max_hops for h in hops):
                truncated += 1
            kept = [h for h in hops if h <= cfg.max_hops]
            if kept:
                s = _combine([cfg.decay(h) for h in kept], cfg.aggregation)
                strengths[(x, z)] = (s, min(kept))
    return materialize(g, cfg, strengths, truncated, started)
