"""File formats: node/edge CSV bundles, config JSON, Cypher scripts and run reports.

Nodes CSV columns are ``id,label[,props]`` where ``props`` is a flat JSON
object. Edges CSV columns are ``source,target,type[,strength][,provenance]``;
output always carries all five. The config file declares the relationship
registry and, for transitive types, how to complete them::

    {"schema_version": 1,
     "relationships": [
        {"name": "RELATIVE-OF", "transitive": true,
         "decay": {"kind": "exponential", "base": 0.5},
         "aggregation": "sum", "threshold": 0.0078125, "max_hops": 7}]}
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .engine import (
    CompletionReport,
    Exponential,
    PowerLaw,
    RelationshipConfig,
    Table,
)
from .errors import ConfigError, GraphValidationError, ParseError, SchemaError
from .graph import Edge, KnowledgeGraph, Node, Provenance, RelationshipType, build_graph
from .metrics import MetricsDiff, MetricsSnapshot

CONFIG_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

NODE_COLUMNS = ("id", "label", "props")
EDGE_COLUMNS = ("source", "target", "type", "strength", "provenance")


@dataclass(frozen=True)
class GraphBundle:
    nodes: Path
    edges: Path
    config: Path | None = None

    @classmethod
    def in_dir(cls, directory: str | os.PathLike[str]) -> GraphBundle:
        d = Path(directory)
        cfg = d / "config.json"
        return cls(d / "nodes.csv", d / "edges.csv", cfg if cfg.exists() else None)


# -- config ------------------------------------------------------------------

_REL_KEYS = {"name", "transitive", "decay", "aggregation", "threshold", "max_hops", "cycle_policy"}


def parse_decay(obj: Any) -> Exponential | PowerLaw | Table:
    if not isinstance(obj, Mapping) or "kind" not in obj:
        raise ConfigError(f"decay must be an object with a 'kind', got {obj!r}")
    kind = obj["kind"]
    expected = {"exponential": {"base"}, "power_law": {"exponent"}, "table": {"values"}}
    if kind not in expected:
        raise ConfigError(f"unknown decay kind {kind!r}")
    keys = set(obj) - {"kind"}
    if keys != expected[kind]:
        raise ConfigError(f"{kind} decay takes exactly {sorted(expected[kind])}, got {sorted(keys)}")
    try:
        if kind == "exponential":
            return Exponential(float(obj["base"]))
        if kind == "power_law":
            return PowerLaw(float(obj["exponent"]))
        return Table(tuple(float(v) for v in obj["values"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad {kind} decay parameters: {exc}") from None


def parse_relationship_config(rel: str, obj: Mapping[str, Any]) -> RelationshipConfig:
    """Build a :class:`RelationshipConfig` from its JSON object form."""
    unknown = set(obj) - _REL_KEYS
    if unknown:
        raise ConfigError(f"{rel}: unknown config field(s) {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    if "decay" in obj:
        kwargs["decay"] = parse_decay(obj["decay"])
    try:
        if "aggregation" in obj:
            kwargs["aggregation"] = str(obj["aggregation"]).lower()
        if "threshold" in obj:
            t = obj["threshold"]
            if isinstance(t, bool) or not isinstance(t, (int, float)):
                raise ConfigError(f"{rel}: threshold must be a number")
            kwargs["threshold"] = float(t)
        if "max_hops" in obj:
            kwargs["max_hops"] = obj["max_hops"]
        if "cycle_policy" in obj:
            kwargs["cycle_policy"] = obj["cycle_policy"]
        return RelationshipConfig(rel, **kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{rel}: {exc}") from None


def parse_config(doc: Any) -> tuple[list[RelationshipType], list[RelationshipConfig]]:
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - {"schema_version", "relationships"}
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")
    if doc.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {CONFIG_SCHEMA_VERSION}, got {doc.get('schema_version')!r}"
        )
    rels = doc.get("relationships")
    if not isinstance(rels, list):
        raise ConfigError("'relationships' must be a list")
    registry: list[RelationshipType] = []
    configs: list[RelationshipConfig] = []
    seen: set[str] = set()
    for entry in rels:
        if not isinstance(entry, Mapping) or not isinstance(entry.get("name"), str):
            raise ConfigError(f"relationship entry needs a string 'name': {entry!r}")
        name = entry["name"]
        if name in seen:
            raise ConfigError(f"relationship {name!r} declared twice")
        seen.add(name)
        transitive = entry.get("transitive", False)
        if not isinstance(transitive, bool):
            raise ConfigError(f"{name}: 'transitive' must be true or false")
        registry.append(RelationshipType(name, transitive))
        completion = {k: v for k, v in entry.items() if k not in ("name", "transitive")}
        if transitive:
            configs.append(parse_relationship_config(name, completion))
        elif completion:
            raise ConfigError(f"{name}: completion settings on a non-transitive relationship")
    return registry, configs


def config_document(
    registry: Iterable[RelationshipType], configs: Iterable[RelationshipConfig] = ()
) -> dict[str, Any]:
    by_rel = {c.rel: c for c in configs}
    rels = []
    for rt in sorted(registry, key=lambda r: r.name):
        entry: dict[str, Any] = {"name": rt.name, "transitive": rt.transitive}
        cfg = by_rel.get(rt.name)
        if cfg is not None:
            d = cfg.to_dict()
            del d["rel"]
            entry.update(d)
        rels.append(entry)
    return {"schema_version": CONFIG_SCHEMA_VERSION, "relationships": rels}


# -- CSV ---------------------------------------------------------------------

def _read_rows(path: Path, required: tuple[str, ...], optional: tuple[str, ...]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file, header row expected", str(path), 1) from None
        except csv.Error as exc:
            raise ParseError(str(exc), str(path), reader.line_num) from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"missing required column(s) {missing}", str(path), 1)
        extra = [c for c in header if c not in required + optional]
        if extra:
            raise SchemaError(f"unexpected column(s) {extra}", str(path), 1)
        pos = {c: header.index(c) for c in header}
        while True:
            try:
                row = next(reader)
            except StopIteration:
                return
            except csv.Error as exc:
                raise ParseError(str(exc), str(path), reader.line_num) from None
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", str(path), reader.line_num
                )
            yield reader.line_num, {c: row[i] for c, i in pos.items()}


def _read_nodes(path: Path) -> list[Node]:
    nodes = []
    for line, row in _read_rows(path, ("id", "label"), ("props",)):
        props: dict[str, Any] = {}
        raw = row.get("props", "")
        if raw:
            try:
                props = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"props is not JSON: {exc.msg}", str(path), line, "props") from None
            if not isinstance(props, dict):
                raise ParseError("props must be a JSON object", str(path), line, "props")
        try:
            nodes.append(Node(row["id"], row["label"], props))
        except GraphValidationError as exc:
            raise SchemaError(str(exc), str(path), line) from None
    return nodes


def _read_edges(path: Path, registry: set[str] | None) -> list[tuple[int, Edge]]:
    edges = []
    for line, row in _read_rows(path, ("source", "target", "type"), ("strength", "provenance")):
        rel = row["type"]
        if not rel:
            raise SchemaError("empty relationship type", str(path), line, "type")
        if registry is not None and rel not in registry:
            raise SchemaError(f"unknown relationship type {rel!r}", str(path), line, "type")
        strength = None
        raw = row.get("strength", "")
        if raw:
            try:
                strength = float(raw)
            except ValueError:
                raise ParseError(f"strength {raw!r} is not a number", str(path), line,
                                 "strength") from None
        prov_raw = row.get("provenance", "") or "direct"
        try:
            prov = Provenance(prov_raw)
        except ValueError:
            raise SchemaError(f"provenance must be direct or inferred, got {prov_raw!r}",
                              str(path), line, "provenance") from None
        edges.append((line, Edge(row["source"], row["target"], rel, strength, prov)))
    return edges


def load_config(path: str | os.PathLike[str]) -> tuple[list[RelationshipType], list[RelationshipConfig]]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno) from None
    return parse_config(doc)


def load_bundle(b: GraphBundle) -> tuple[KnowledgeGraph, list[RelationshipConfig]]:
    """Read and validate a bundle.

    Without a config file every edge type found is registered as
    non-transitive, which is enough for metrics but not for completion.
    """
    configs: list[RelationshipConfig] = []
    registry: list[RelationshipType] | None = None
    if b.config is not None:
        registry, configs = load_config(b.config)
    nodes = _read_nodes(Path(b.nodes))
    known = None if registry is None else {r.name for r in registry}
    numbered = _read_edges(Path(b.edges), known)
    if registry is None:
        registry = [RelationshipType(t) for t in sorted({e.rel for _, e in numbered})]

    # Re-validate edge by edge so a failure can name its line.
    node_ids = {n.id for n in nodes}
    for line, e in numbered:
        for end in (e.source, e.target):
            if end not in node_ids:
                raise SchemaError(f"edge endpoint {end!r} is not a known node", str(b.edges), line)
        if e.source == e.target:
            raise SchemaError(f"self-loop on {e.source!r}", str(b.edges), line)
        if e.strength is not None and not e.strength > 0:
            raise SchemaError(f"strength must be > 0, got {e.strength}", str(b.edges), line,
                              "strength")
        if e.provenance is Provenance.INFERRED and e.strength is None:
            raise SchemaError("inferred edge without strength", str(b.edges), line, "strength")
    return build_graph(nodes, [e for _, e in numbered], registry), configs


def _fmt_strength(s: float | None) -> str:
    # repr() is the shortest string that round-trips a double (<= 17 digits)
    return "" if s is None else repr(float(s))


def _atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def nodes_csv(g: KnowledgeGraph) -> str:
    rows = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        props = json.dumps(dict(n.properties), sort_keys=True) if n.properties else ""
        rows.append((n.id, n.label, props))
    return _csv_text(NODE_COLUMNS, rows)


def edges_csv(g: KnowledgeGraph) -> str:
    rows = [
        (e.source, e.target, e.rel, _fmt_strength(e.strength), e.provenance.value)
        for e in sorted(g.edges, key=lambda e: e.key)
    ]
    return _csv_text(EDGE_COLUMNS, rows)


def write_nodes(g: KnowledgeGraph, path: str | os.PathLike[str]) -> None:
    _atomic_write_text(Path(path), nodes_csv(g))


def write_edges(g: KnowledgeGraph, path: str | os.PathLike[str]) -> None:
    _atomic_write_text(Path(path), edges_csv(g))


def write_bundle(
    g: KnowledgeGraph,
    directory: str | os.PathLike[str],
    configs: Iterable[RelationshipConfig] = (),
) -> GraphBundle:
    """Write ``nodes.csv``, ``edges.csv`` and ``config.json`` into ``directory``."""
    d = Path(directory)
    b = GraphBundle(d / "nodes.csv", d / "edges.csv", d / "config.json")
    write_nodes(g, b.nodes)
    write_edges(g, b.edges)
    doc = config_document(g.registry.values(), configs)
    _atomic_write_text(b.config, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return b


# -- Cypher ------------------------------------------------------------------

CYPHER_BATCH = 500


def cypher_string(s: str) -> str:
    escaped = (
        s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r")
        .replace("\t", "\\t")
    )
    return f'"{escaped}"'


def cypher_name(name: str) -> str:
    """Label or relationship type, backquoted unless it is a plain identifier."""
    if name.isidentifier():
        return name
    return "`" + name.replace("`", "``") + "`"


def _cypher_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return cypher_string(str(v))


def cypher_statements(g: KnowledgeGraph) -> list[str]:
    out = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        props = [f"id: {cypher_string(n.id)}"]
        props += [f"{cypher_name(k)}: {_cypher_value(v)}" for k, v in sorted(n.properties.items())
                  if k != "id"]
        out.append(f"CREATE (:{cypher_name(n.label)} {{{', '.join(props)}}});")
    for e in sorted(g.edges, key=lambda e: e.key):
        props = []
        if e.strength is not None:
            props.append(f"strength: {repr(float(e.strength))}")
        props.append(f"provenance: {cypher_string(e.provenance.value)}")
        out.append(
            f"MATCH (a {{id: {cypher_string(e.source)}}}),(b {{id: {cypher_string(e.target)}}}) "
            f"CREATE (a)-[:{cypher_name(e.rel)} {{{', '.join(props)}}}]->(b);"
        )
    return out


def cypher_script(g: KnowledgeGraph, batch: int = CYPHER_BATCH) -> str:
    """Plain-text script for cypher-shell, one statement per line.

    Statements are grouped into ``:begin``/``:commit`` transactions of ``batch``.
    """
    stmts = cypher_statements(g)
    lines = []
    for i in range(0, len(stmts), batch):
        lines.append(":begin")
        lines.extend(stmts[i:i + batch])
        lines.append(":commit")
    return "\n".join(lines) + ("\n" if lines else "")


def export_cypher(g: KnowledgeGraph, path: str | os.PathLike[str], batch: int = CYPHER_BATCH) -> None:
    _atomic_write_text(Path(path), cypher_script(g, batch))


# -- reports -----------------------------------------------------------------

def file_digest(path: str | os.PathLike[str]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunReport:
    configs: list[RelationshipConfig]
    completions: list[CompletionReport]
    diffs: dict[str, MetricsDiff] = field(default_factory=dict)
    input_digests: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    tool_version: str = __version__

    def to_dict(self, include_timings: bool = False) -> dict[str, Any]:
        d: dict[str, Any] = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "input_digests": dict(sorted(self.input_digests.items())),
            "configs": [c.to_dict() for c in self.configs],
            "completions": [c.to_dict() for c in self.completions],
            "diffs": {name: diff.to_dict() for name, diff in sorted(self.diffs.items())},
        }
        if include_timings:
            d["timings"] = dict(self.timings)
        return d


def report_json(r: RunReport, include_timings: bool = False) -> str:
    return json.dumps(r.to_dict(include_timings), indent=2, sort_keys=True) + "\n"


def diff_csv(diff: MetricsDiff) -> str:
    rows = [
        (rec.node, repr(rec.before), repr(rec.after), repr(rec.delta),
         rec.pct if isinstance(rec.pct, str) else repr(rec.pct))
        for _, rec in sorted(diff.records.items())
    ]
    return _csv_text(("node", "before", "after", "delta", "pct"), rows)


def write_report(
    r: RunReport,
    path: str | os.PathLike[str],
    fmt: str = "json",
    include_timings: bool = False,
) -> list[Path]:
    """Write a report as one JSON file, or as one CSV table per metrics diff.

    For ``fmt="csv"``, ``path`` is a directory and files are named
    ``<diff name>.csv``. Timings are excluded unless asked for, which keeps
    the output byte-identical across runs.
    """
    path = Path(path)
    if fmt == "json":
        _atomic_write_text(path, report_json(r, include_timings))
        return [path]
    if fmt == "csv":
        written = []
        for name, diff in sorted(r.diffs.items()):
            target = path / f"{name}.csv"
            _atomic_write_text(target, diff_csv(diff))
            written.append(target)
        return written
    raise ValueError(f"unknown report format {fmt!r}")


def snapshot_json(s: MetricsSnapshot) -> str:
    doc = {"schema_version": REPORT_SCHEMA_VERSION, **s.to_dict()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_snapshot(s: MetricsSnapshot, path: str | os.PathLike[str]) -> None:
    _atomic_write_text(Path(path), snapshot_json(s))


def read_snapshot(path: str | os.PathLike[str]) -> MetricsSnapshot:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno) from None
    try:
        return MetricsSnapshot.from_dict(doc)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"not a metrics snapshot: {exc}", str(path), 1) from None
