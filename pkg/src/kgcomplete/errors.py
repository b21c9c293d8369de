"""Exception hierarchy shared by every kgcomplete module."""

from __future__ import annotations


class KGError(Exception):
    """Base class for all kgcomplete errors."""


class GraphValidationError(KGError, ValueError):
    """Raised when raw nodes/edges violate the graph invariants."""


class UnknownRelationship(GraphValidationError):
    def __init__(self, rel: str):
        super().__init__(f"relationship type {rel!r} is not registered")
        self.rel = rel


class DanglingEndpoint(GraphValidationError):
    def __init__(self, source: str, target: str, missing: str):
        super().__init__(f"edge {source!r} -> {target!r} references missing node {missing!r}")
        self.missing = missing


class SelfLoop(GraphValidationError):
    def __init__(self, node: str, rel: str):
        super().__init__(f"self-loop on {node!r} ({rel})")
        self.node = node


class NonTransitiveRelationship(KGError, ValueError):
    def __init__(self, rel: str):
        super().__init__(f"relationship type {rel!r} is not marked transitive")
        self.rel = rel


class CyclicGraph(KGError):
    """The typed subgraph has a directed cycle and the policy forbids it."""

    def __init__(self, rel: str, cycle: list[str]):
        shown = " -> ".join(cycle)
        super().__init__(f"{rel} subgraph is cyclic: {shown}")
        self.rel = rel
        self.cycle = cycle


class HopOutOfRange(KGError, ValueError):
    pass


class EmptyPathSet(KGError, ValueError):
    pass


class SnapshotMismatch(KGError, ValueError):
    pass


class InvalidParams(KGError, ValueError):
    pass


class ConfigError(KGError, ValueError):
    pass


class ParseError(KGError):
    """Malformed input file. Always carries the file and 1-based line number."""

    def __init__(self, message: str, path: str, line: int, column: str | None = None):
        where = f"{path}:{line}" + (f" (column {column!r})" if column else "")
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.column = column


class SchemaError(ParseError):
    """Input parses but violates the expected columns or vocabulary."""
