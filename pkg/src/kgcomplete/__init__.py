"""Deterministic knowledge completion for scalable transitive relationships."""

__version__ = "0.1.0"

from .engine import (  # noqa: E402
    Aggregation,
    CompletionReport,
    CyclePolicy,
    Exponential,
    PairStrengths,
    PowerLaw,
    RelationshipConfig,
    Table,
    aggregate_strength,
    complete,
    count_paths_by_length,
    decay_value,
)
from .graph import (  # noqa: E402
    Edge,
    KnowledgeGraph,
    Node,
    Provenance,
    RelationshipType,
    build_graph,
    detect_cycles,
    typed_adjacency,
)
from .metrics import (  # noqa: E402
    NEW,
    PageRankParams,
    degree_centrality,
    diff_metrics,
    pagerank,
    top_changes,
)
from .oracle import complete_bruteforce, enumerate_simple_paths  # noqa: E402

__all__ = [
    "NEW",
    "Aggregation",
    "CompletionReport",
    "CyclePolicy",
    "Edge",
    "Exponential",
    "KnowledgeGraph",
    "Node",
    "PageRankParams",
    "PairStrengths",
    "PowerLaw",
    "Provenance",
    "RelationshipConfig",
    "RelationshipType",
    "Table",
    "aggregate_strength",
    "build_graph",
    "complete",
    "complete_bruteforce",
    "count_paths_by_length",
    "decay_value",
    "degree_centrality",
    "detect_cycles",
    "diff_metrics",
    "enumerate_simple_paths",
    "pagerank",
    "top_changes",
    "typed_adjacency",
]
