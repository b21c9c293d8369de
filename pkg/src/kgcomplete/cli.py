"""Command-line entry point: ``kgcomplete <subcommand> ...``.

Exit codes
----------
0  success
1  unexpected internal error
2  usage error (bad or unknown flags)
3  input file cannot be parsed or violates the CSV schema
4  invalid configuration
5  cyclic subgraph under the require_dag policy
6  I/O failure
7  invalid generator or metric parameters
8  graph validation failure (unknown relationship, dangling endpoint,
   self-loop, completion of a non-transitive relationship)
9  snapshot mismatch in ``diff``

Set ``KGCOMPLETE_LOG`` to a logging level name (e.g. ``INFO``) for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from collections.abc import Sequence
from pathlib import Path

from . import __version__, datasets, kgio
from .engine import CompletionReport, CyclePolicy, RelationshipConfig, complete
from .errors import (
    ConfigError,
    CyclicGraph,
    GraphValidationError,
    InvalidParams,
    KGError,
    NonTransitiveRelationship,
    ParseError,
    SnapshotMismatch,
)
from .graph import KnowledgeGraph
from .metrics import (
    NEW,
    Direction,
    MetricsDiff,
    MetricsSnapshot,
    PageRankParams,
    degree_centrality,
    diff_metrics,
    pagerank,
    top_changes,
)

log = logging.getLogger("kgcomplete")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_CYCLIC = 5
EXIT_IO = 6
EXIT_PARAMS = 7
EXIT_GRAPH = 8
EXIT_MISMATCH = 9


def _exit_code(exc: BaseException) -> int:
    # order matters: ConfigError and friends also subclass ValueError
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, CyclicGraph):
        return EXIT_CYCLIC
    if isinstance(exc, InvalidParams):
        return EXIT_PARAMS
    if isinstance(exc, (GraphValidationError, NonTransitiveRelationship)):
        return EXIT_GRAPH
    if isinstance(exc, SnapshotMismatch):
        return EXIT_MISMATCH
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_INTERNAL


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output staging ----------------------------------------------------------

def commit_outputs(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write every file into a staging directory, then move them into place.

    Nothing lands in ``out_dir`` unless all files were written.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        for rel, text in files.items():
            p = staging / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        written = []
        for rel in files:
            dest = out_dir / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / rel, dest)
            written.append(dest)
        return written
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def _config_json(g: KnowledgeGraph, configs: Sequence[RelationshipConfig]) -> str:
    return json.dumps(kgio.config_document(g.registry.values(), configs), indent=2,
                      sort_keys=True) + "\n"


def _bundle_files(g: KnowledgeGraph, configs: Sequence[RelationshipConfig]) -> dict[str, str]:
    return {
        "nodes.csv": kgio.nodes_csv(g),
        "edges.csv": kgio.edges_csv(g),
        "config.json": _config_json(g, configs),
    }


# -- argument helpers --------------------------------------------------------

def _add_bundle_args(p: argparse.ArgumentParser, config: bool = True) -> None:
    g = p.add_argument_group("input bundle")
    g.add_argument("--bundle", type=Path, metavar="DIR",
                   help="directory holding nodes.csv, edges.csv and optionally config.json")
    g.add_argument("--nodes", type=Path, help="nodes CSV (overrides --bundle)")
    g.add_argument("--edges", type=Path, help="edges CSV (overrides --bundle)")
    if config:
        g.add_argument("--config", type=Path, help="config JSON (overrides --bundle)")


def _bundle_from(args: argparse.Namespace) -> kgio.GraphBundle:
    base = kgio.GraphBundle.in_dir(args.bundle) if args.bundle else None
    nodes = args.nodes or (base.nodes if base else None)
    edges = args.edges or (base.edges if base else None)
    config = getattr(args, "config", None) or (base.config if base else None)
    if nodes is None or edges is None:
        raise InvalidParams("give --bundle DIR or both --nodes and --edges")
    return kgio.GraphBundle(nodes, edges, config)


def _select_configs(
    configs: list[RelationshipConfig], args: argparse.Namespace
) -> list[RelationshipConfig]:
    if args.rel:
        chosen = [c for c in configs if c.rel in args.rel]
        missing = set(args.rel) - {c.rel for c in chosen}
        if missing:
            raise ConfigError(f"no completion config for {sorted(missing)}")
    else:
        chosen = list(configs)
    if args.cycle_policy:
        chosen = [
            RelationshipConfig(c.rel, c.decay, c.aggregation, c.threshold, c.max_hops,
                               CyclePolicy(args.cycle_policy))
            for c in chosen
        ]
    if not chosen:
        raise ConfigError("no transitive relationship with a completion config")
    return chosen


def _run_completion(
    g: KnowledgeGraph, configs: Sequence[RelationshipConfig]
) -> tuple[KnowledgeGraph, list[CompletionReport]]:
    reports = []
    for cfg in configs:
        g, rep = complete(g, cfg)
        reports.append(rep)
    return g, reports


def _add_completion_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rel", action="append", metavar="TYPE",
                   help="complete only this relationship type (repeatable)")
    p.add_argument("--cycle-policy", choices=[c.value for c in CyclePolicy],
                   help="override the configured cycle policy")


def _add_pagerank_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--damping", type=float, default=0.85, help="PageRank damping (default 0.85)")
    p.add_argument("--tolerance", type=float, default=1e-7,
                   help="PageRank L1 stopping tolerance (default 1e-7)")
    p.add_argument("--max-iterations", type=int, default=100,
                   help="PageRank iteration cap (default 100)")
    p.add_argument("--normalized", action="store_true",
                   help="use (1-d)/N teleport instead of the per-node (1-d) baseline")


def _pagerank_params(args: argparse.Namespace) -> PageRankParams:
    return PageRankParams(args.damping, args.tolerance, args.max_iterations,
                          weighted=args.weighted, normalized=args.normalized)


def _fmt_pct(pct: float | str) -> str:
    return "new" if pct == NEW else f"{pct:+.2f}%"


def _print_top(name: str, diff: MetricsDiff, k: int) -> None:
    print(f"\n{name}: top {k} increases")
    print(f"  {'rank':>4}  {'node':<28} {'before':>12} {'after':>12} {'pct':>10}")
    for i, r in enumerate(top_changes(diff, k, "increase"), 1):
        print(f"  {i:>4}  {r.node:<28} {r.before:>12.6g} {r.after:>12.6g} {_fmt_pct(r.pct):>10}")
    print(f"{name}: top {k} decreases")
    for i, r in enumerate(top_changes(diff, k, "decrease"), 1):
        print(f"  {i:>4}  {r.node:<28} {r.before:>12.6g} {r.after:>12.6g} {_fmt_pct(r.pct):>10}")


# -- subcommands -------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    if args.kind == "roman":
        g = datasets.gen_roman_empire(datasets.RomanEmpireParams(
            args.prefectures, args.dioceses, args.provinces))
        cfg = datasets.roman_config()
    else:
        g = datasets.gen_family_tree(datasets.FamilyTreeParams(
            args.generations, args.couples, args.children, args.intermarriage_rate, args.seed))
        cfg = datasets.kinship_config()
    commit_outputs(args.out, _bundle_files(g, [cfg]))
    print(f"wrote {args.kind} bundle to {args.out}: {g.num_nodes()} nodes, {g.num_edges()} edges")
    return EXIT_OK


def cmd_complete(args: argparse.Namespace) -> int:
    g, configs = kgio.load_bundle(_bundle_from(args))
    chosen = _select_configs(configs, args)
    done, reports = _run_completion(g, chosen)
    files = _bundle_files(done, configs)
    files["completion.json"] = json.dumps(
        {"schema_version": kgio.REPORT_SCHEMA_VERSION,
         "completions": [r.to_dict() for r in reports]},
        indent=2, sort_keys=True) + "\n"
    commit_outputs(args.out, files)
    for r in reports:
        print(f"{r.rel}: {r.inferred_edge_count} inferred edges, "
              f"{r.annotated_direct_count} direct edges annotated, "
              f"{r.truncated_pairs_count} truncated pairs")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    g, _ = kgio.load_bundle(_bundle_from(args))
    if args.algorithm == "degree":
        snap = degree_centrality(g, args.metrics_rel, args.direction, args.weighted)
    else:
        snap = pagerank(g, args.metrics_rel, _pagerank_params(args))
    text = kgio.snapshot_json(snap)
    if args.out:
        commit_outputs(args.out.parent, {args.out.name: text})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_diff(args: argparse.Namespace) -> int:
    diff = diff_metrics(kgio.read_snapshot(args.before), kgio.read_snapshot(args.after))
    if args.out:
        text = json.dumps(diff.to_dict(), indent=2, sort_keys=True) + "\n"
        commit_outputs(args.out.parent, {args.out.name: text})
    if args.csv:
        commit_outputs(args.csv.parent, {args.csv.name: kgio.diff_csv(diff)})
    _print_top(diff.algorithm, diff, args.top_k)
    return EXIT_OK


def _metric_pairs(
    before: KnowledgeGraph, after: KnowledgeGraph, args: argparse.Namespace
) -> dict[str, tuple[MetricsSnapshot, MetricsSnapshot]]:
    pairs = {}
    suffix = "_weighted" if args.weighted else ""
    for direction in args.degree_direction or ["total"]:
        name = f"degree_{direction}{suffix}"
        pairs[name] = (
            degree_centrality(before, args.metrics_rel, direction, args.weighted),
            degree_centrality(after, args.metrics_rel, direction, args.weighted),
        )
    if not args.no_pagerank:
        params = _pagerank_params(args)
        pairs[f"pagerank{suffix}"] = (
            pagerank(before, args.metrics_rel, params),
            pagerank(after, args.metrics_rel, params),
        )
    return pairs


def cmd_pipeline(args: argparse.Namespace) -> int:
    """load -> complete -> metrics before/after -> diff -> report/export."""
    t0 = time.perf_counter()
    bundle = _bundle_from(args)
    g, configs = kgio.load_bundle(bundle)
    chosen = _select_configs(configs, args)
    t1 = time.perf_counter()
    done, reports = _run_completion(g, chosen)
    t2 = time.perf_counter()
    diffs = {name: diff_metrics(b, a) for name, (b, a) in _metric_pairs(g, done, args).items()}
    t3 = time.perf_counter()

    digests = {Path(p).name: kgio.file_digest(p)
               for p in (bundle.nodes, bundle.edges, bundle.config) if p is not None}
    timings = {"load": t1 - t0, "complete": t2 - t1, "metrics": t3 - t2}
    report = kgio.RunReport(chosen, reports, diffs, digests, timings)
    for d in diffs.values():
        d.summary_k = args.top_k

    files = _bundle_files(done, configs)
    files["report.json"] = kgio.report_json(report)
    for name, d in diffs.items():
        files[f"diffs/{name}.csv"] = kgio.diff_csv(d)
    if args.cypher:
        files["graph.cypher"] = kgio.cypher_script(done)
    if args.timings:
        files["timings.json"] = json.dumps(timings, indent=2, sort_keys=True) + "\n"
    commit_outputs(args.out, files)

    for r in reports:
        print(f"{r.rel}: {r.inferred_edge_count} inferred edges added "
              f"({g.num_edges()} -> {done.num_edges()}), "
              f"{r.annotated_direct_count} direct edges annotated, "
              f"{r.truncated_pairs_count} truncated pairs")
    for name, d in diffs.items():
        _print_top(name, d, args.top_k)
    print(f"\noutputs in {args.out}")
    return EXIT_OK


def cmd_export_cypher(args: argparse.Namespace) -> int:
    g, _ = kgio.load_bundle(_bundle_from(args))
    commit_outputs(args.out.parent, {args.out.name: kgio.cypher_script(g, args.batch)})
    print(f"wrote {g.num_nodes()} node and {g.num_edges()} edge statements to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kgcomplete", description=__doc__.split("\n")[0],
                     epilog="Exit codes: 0 ok, 1 internal, 2 usage, 3 parse, 4 config, "
                            "5 cyclic, 6 io, 7 params, 8 graph, 9 snapshot mismatch.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a case-study bundle")
    p.add_argument("kind", choices=["roman", "family"])
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--prefectures", type=int, default=4, help="roman: prefecture count")
    p.add_argument("--dioceses", type=int, default=12, help="roman: diocese count")
    p.add_argument("--provinces", type=int, default=31, help="roman: province count")
    p.add_argument("--generations", type=int, default=8, help="family: generation count")
    p.add_argument("--couples", type=int, default=1, help="family: couples per generation")
    p.add_argument("--children", type=int, default=1, help="family: children per couple")
    p.add_argument("--intermarriage-rate", type=float, default=0.0,
                   help="family: probability that a couple is two in-graph members")
    p.add_argument("--seed", type=int, default=0, help="family: RNG seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("complete", help="materialise inferred edges")
    _add_bundle_args(p)
    _add_completion_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("metrics", help="compute one centrality snapshot")
    _add_bundle_args(p)
    p.add_argument("--algorithm", choices=["degree", "pagerank"], default="degree")
    p.add_argument("--direction", choices=[d.value for d in Direction], default="total",
                   help="degree direction (default total)")
    p.add_argument("--weighted", action="store_true", help="use edge strengths as weights")
    p.add_argument("--metrics-rel", metavar="TYPE", help="restrict to one relationship type")
    _add_pagerank_args(p)
    p.add_argument("--out", type=Path, help="snapshot JSON path (default stdout)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("diff", help="compare two metric snapshots")
    p.add_argument("before", type=Path)
    p.add_argument("after", type=Path)
    p.add_argument("--out", type=Path, help="diff JSON path")
    p.add_argument("--csv", type=Path, help="diff CSV path")
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("pipeline", help="complete, measure, diff and report in one go")
    _add_bundle_args(p)
    _add_completion_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--degree-direction", action="append",
                   choices=[d.value for d in Direction],
                   help="degree modes to diff (repeatable, default total)")
    p.add_argument("--no-pagerank", action="store_true", help="skip PageRank")
    p.add_argument("--weighted", action="store_true", help="weight metrics by strength")
    p.add_argument("--metrics-rel", metavar="TYPE",
                   help="restrict metrics to one relationship type (default all)")
    _add_pagerank_args(p)
    p.add_argument("--top-k", type=int, default=10, help="rows in the top-change tables")
    p.add_argument("--cypher", action="store_true", help="also write graph.cypher")
    p.add_argument("--timings", action="store_true",
                   help="write timings.json (kept out of report.json for reproducibility)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("export-cypher", help="write a Cypher import script")
    _add_bundle_args(p)
    p.add_argument("--out", type=Path, required=True, help="script path")
    p.add_argument("--batch", type=int, default=kgio.CYPHER_BATCH,
                   help="statements per transaction")
    p.set_defaults(func=cmd_export_cypher)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("KGCOMPLETE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "top_k", 1) < 1:
        print("kgcomplete: error: --top-k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (KGError, OSError) as exc:
        print(f"kgcomplete: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except Exception as exc:  # malformed input must never surface as a traceback
        log.debug("internal error", exc_info=True)
        print(f"kgcomplete: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
