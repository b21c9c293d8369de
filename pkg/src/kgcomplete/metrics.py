"""Centrality snapshots and before/after comparison."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParams, SnapshotMismatch, UnknownRelationship
from .graph import KnowledgeGraph

log = logging.getLogger(__name__)

# Percentage placeholder when the baseline is zero and the value moved.
NEW = "new"

Pct = Union[float, str]


class Direction(str, Enum):
    IN = "in"
    OUT = "out"
    TOTAL = "total"


@dataclass(frozen=True)
class MetricsSnapshot:
    algorithm: str
    params: Mapping[str, Any]
    values: Mapping[str, float]
    converged: bool = True
    iterations: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "params": dict(self.params),
            "converged": self.converged,
            "iterations": self.iterations,
            "values": dict(sorted(self.values.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> MetricsSnapshot:
        return cls(
            algorithm=d["algorithm"],
            params=dict(d.get("params", {})),
            values={k: float(v) for k, v in d["values"].items()},
            converged=bool(d.get("converged", True)),
            iterations=int(d.get("iterations", 0)),
        )


@dataclass(frozen=True)
class PageRankParams:
    damping: float = 0.85
    tolerance: float = 1e-7
    max_iterations: int = 100
    weighted: bool = False
    normalized: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.damping < 1:
            raise InvalidParams(f"damping must lie in (0, 1), got {self.damping}")
        if not self.tolerance > 0:
            raise InvalidParams(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise InvalidParams(f"max_iterations must be >= 1, got {self.max_iterations}")


def _edges_for(g: KnowledgeGraph, rel: str | None):
    if rel is not None and rel not in g.registry:
        raise UnknownRelationship(rel)
    return g.edges_of(rel)


def degree_centrality(
    g: KnowledgeGraph,
    rel: str | None = None,
    direction: Direction | str = Direction.TOTAL,
    weighted: bool = False,
) -> MetricsSnapshot:
    """Incident edge count per node; ``rel=None`` counts every relationship type.

    Weighted mode sums strengths, treating a missing strength as 1.
    """
    direction = Direction(direction)
    values = dict.fromkeys(g.nodes, 0.0)
    for e in _edges_for(g, rel):
        w = (1.0 if e.strength is None else float(e.strength)) if weighted else 1.0
        if direction is not Direction.IN:
            values[e.source] += w
        if direction is not Direction.OUT:
            values[e.target] += w
    params = {"rel": rel, "direction": direction.value, "weighted": weighted}
    return MetricsSnapshot("degree", params, values)


def pagerank(
    g: KnowledgeGraph,
    rel: str | None = None,
    params: PageRankParams | None = None,
) -> MetricsSnapshot:
    """Power iteration on ``p(v) = (1 - d) + d * sum_{u -> v} p(u) * w(u, v) / W(u)``.

    ``W(u)`` is the out-degree of ``u`` (or its out-strength when weighted).
    Dangling nodes keep their mass. With ``normalized=True`` the teleport
    term becomes ``(1 - d) / N``. Failing to reach the tolerance is reported
    through ``converged=False`` rather than an exception.
    """
    params = params or PageRankParams()
    ids = list(g.nodes)
    n = len(ids)
    if n == 0:
        raise InvalidParams("pagerank of an empty graph")
    index = {nid: i for i, nid in enumerate(ids)}

    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    for e in _edges_for(g, rel):
        rows.append(index[e.source])
        cols.append(index[e.target])
        w = 1.0
        if params.weighted and e.strength is not None:
            w = float(e.strength)
        data.append(w)
    # duplicate (u, v) pairs from different relationship types sum up
    W = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)
    out_w = np.asarray(W.sum(axis=1)).ravel()
    inv = np.divide(1.0, out_w, out=np.zeros(n), where=out_w > 0)
    M = (sp.diags(inv) @ W).T.tocsr()

    d = params.damping
    base = (1 - d) / n if params.normalized else (1 - d)
    p = np.full(n, 1.0 / n if params.normalized else 1.0)
    converged = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        nxt = base + d * (M @ p)
        delta = float(np.abs(nxt - p).sum())
        p = nxt
        if delta < params.tolerance:
            converged = True
            break
    if not converged:
        log.warning("pagerank did not converge in %d iterations", params.max_iterations)
    snap_params = {
        "rel": rel,
        "damping": d,
        "tolerance": params.tolerance,
        "max_iterations": params.max_iterations,
        "weighted": params.weighted,
        "normalized": params.normalized,
    }
    return MetricsSnapshot(
        "pagerank", snap_params, dict(zip(ids, p.tolist())), converged=converged, iterations=it
    )


@dataclass(frozen=True)
class DiffRecord:
    node: str
    before: float
    after: float
    delta: float
    pct: Pct

    def to_dict(self) -> dict[str, Any]:
        return {
            "node": self.node,
            "before": self.before,
            "after": self.after,
            "delta": self.delta,
            "pct": self.pct,
        }


def percent_change(before: float, after: float) -> Pct:
    if before == 0:
        return 0.0 if after == 0 else NEW
    return 100.0 * (after - before) / abs(before)


@dataclass
class MetricsDiff:
    algorithm: str
    records: dict[str, DiffRecord]
    params: Mapping[str, Any] = field(default_factory=dict)
    summary_k: int = 10

    @property
    def unchanged_count(self) -> int:
        return sum(1 for r in self.records.values() if r.delta == 0)

    def summary(self, k: int | None = None) -> dict[str, Any]:
        k = k or self.summary_k
        return {
            "top_increases": [r.to_dict() for r in top_changes(self, k, "increase")],
            "top_decreases": [r.to_dict() for r in top_changes(self, k, "decrease")],
            "unchanged_count": self.unchanged_count,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "params": dict(self.params),
            "records": [r.to_dict() for _, r in sorted(self.records.items())],
            "summary": self.summary(),
        }


def diff_metrics(before: MetricsSnapshot, after: MetricsSnapshot) -> MetricsDiff:
    if before.algorithm != after.algorithm:
        raise SnapshotMismatch(f"algorithms differ: {before.algorithm} vs {after.algorithm}")
    if set(before.values) != set(after.values):
        missing = sorted(set(before.values) ^ set(after.values))
        raise SnapshotMismatch(f"node sets differ, e.g. {missing[:5]}")
    records = {}
    for node in sorted(before.values):
        b, a = before.values[node], after.values[node]
        records[node] = DiffRecord(node, b, a, a - b, percent_change(b, a))
    return MetricsDiff(before.algorithm, records, params=dict(after.params))


def _rank_value(pct: Pct) -> float:
    return math.inf if pct == NEW else float(pct)


def top_changes(diff: MetricsDiff, k: int, direction: str = "increase") -> list[DiffRecord]:
    """The ``k`` largest (``"increase"``) or smallest (``"decrease"``) percentage changes.

    ``NEW`` outranks every finite increase. Ties go to the lexicographically
    smaller node id.
    """
    if k < 1:
        raise InvalidParams("k must be >= 1")
    if direction not in ("increase", "decrease"):
        raise InvalidParams(f"direction must be 'increase' or 'decrease', got {direction!r}")
    sign = -1.0 if direction == "increase" else 1.0
    ranked = sorted(
        diff.records.values(),
        key=lambda r: (sign * _rank_value(r.pct), r.node, sign * r.delta),
    )
    return ranked[:k]
