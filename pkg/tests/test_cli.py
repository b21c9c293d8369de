import json
import subprocess
import sys

import pytest

from kgcomplete import cli
from kgcomplete.kgio import GraphBundle, load_bundle

from conftest import REL


@pytest.fixture
def roman(tmp_path):
    assert cli.main(["gen", "roman", "--out", str(tmp_path / "roman")]) == 0
    return tmp_path / "roman"


def test_gen_roman(roman):
    g, configs = load_bundle(GraphBundle.in_dir(roman))
    assert g.num_nodes() == 48 and g.num_edges() == 47
    assert configs[0].rel == "COMMANDS"


def test_gen_family_chain(tmp_path):
    assert cli.main(["gen", "family", "--generations", "8", "--out", str(tmp_path)]) == 0
    g, _ = load_bundle(GraphBundle.in_dir(tmp_path))
    assert g.num_nodes() == 8 and g.num_edges() == 7


def test_gen_invalid_params(tmp_path, capsys):
    assert cli.main(["gen", "family", "--generations", "0", "--out", str(tmp_path / "x")]) \
        == cli.EXIT_PARAMS
    assert not (tmp_path / "x" / "nodes.csv").exists()
    assert "generations" in capsys.readouterr().err


def test_pipeline_roman(roman, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["pipeline", "--bundle", str(roman), "--out", str(out), "--cypher",
                     "--top-k", "3"]) == 0
    stdout = capsys.readouterr().out
    assert "74 inferred edges added" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["completions"][0]["inferred_edge_count"] == 74
    assert report["diffs"]["degree_total"]["summary"]["top_increases"][0]["node"] == "Emperor"
    assert (out / "diffs" / "degree_total.csv").exists()
    assert (out / "diffs" / "pagerank.csv").exists()
    assert (out / "graph.cypher").exists()
    assert not (out / "timings.json").exists()
    g, _ = load_bundle(GraphBundle.in_dir(out))
    assert g.num_edges() == 121
    assert not [p for p in out.iterdir() if p.name.startswith(".staging")]


def test_pipeline_deterministic(roman, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["pipeline", "--bundle", str(roman), "--out", str(tmp_path / name)]) == 0
    for f in ("report.json", "edges.csv", "nodes.csv", "diffs/pagerank.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_pipeline_kinship_chain(tmp_path):
    cli.main(["gen", "family", "--generations", "8", "--out", str(tmp_path / "fam")])
    assert cli.main(["pipeline", "--bundle", str(tmp_path / "fam"), "--out",
                     str(tmp_path / "out"), "--timings", "--degree-direction", "out",
                     "--degree-direction", "in", "--weighted"]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    recs = report["completions"][0]["records"]
    inferred = [r for r in recs if r["provenance"] == "inferred"]
    # every ancestor pair 2..7 hops apart: 6+5+4+3+2+1
    assert len(inferred) == 21
    assert max(r["shortest_hops"] for r in inferred) == 7
    assert set(report["diffs"]) == {"degree_out_weighted", "degree_in_weighted",
                                    "pagerank_weighted"}
    assert json.loads((tmp_path / "out" / "timings.json").read_text())["complete"] >= 0


def test_pipeline_cyclic_is_atomic(tmp_path):
    b = tmp_path / "cyc"
    b.mkdir()
    (b / "nodes.csv").write_text("id,label\na,X\nb,X\n")
    (b / "edges.csv").write_text(f"source,target,type\na,b,{REL}\nb,a,{REL}\n")
    (b / "config.json").write_text(json.dumps(
        {"schema_version": 1, "relationships": [{"name": REL, "transitive": True}]}))
    out = tmp_path / "out"
    assert cli.main(["pipeline", "--bundle", str(b), "--out", str(out)]) == cli.EXIT_CYCLIC
    assert not out.exists() or not any(out.iterdir())
    # opt-in walk semantics makes it run
    assert cli.main(["pipeline", "--bundle", str(b), "--out", str(out),
                     "--cycle-policy", "bounded_walks"]) == 0


@pytest.mark.parametrize("edges, config, code", [
    (f"source,target,type\na,b,{REL}\nb,c,OTHER\n", None, cli.EXIT_PARSE),
    (f"source,target,type\na,b,{REL}\n", {"schema_version": 1, "relationships": [
        {"name": REL, "transitive": True, "threshold": -1}]}, cli.EXIT_CONFIG),
    (f"source,target,type\na,b,{REL}\n", {"schema_version": 1, "relationships": [
        {"name": REL, "transitive": False}]}, cli.EXIT_CONFIG),
])
def test_pipeline_error_codes(tmp_path, edges, config, code):
    (tmp_path / "nodes.csv").write_text("id,label\na,X\nb,X\nc,X\n")
    (tmp_path / "edges.csv").write_text(edges)
    cfg = config or {"schema_version": 1, "relationships": [{"name": REL, "transitive": True}]}
    (tmp_path / "config.json").write_text(json.dumps(cfg))
    assert cli.main(["pipeline", "--bundle", str(tmp_path), "--out", str(tmp_path / "o")]) == code


def test_missing_input_is_io_error(tmp_path):
    assert cli.main(["pipeline", "--bundle", str(tmp_path / "nope"), "--out",
                     str(tmp_path / "o")]) == cli.EXIT_IO


def test_unknown_flag_is_usage_error(roman):
    with pytest.raises(SystemExit) as info:
        cli.main(["pipeline", "--bundle", str(roman), "--out", "x", "--bogus"])
    assert info.value.code == cli.EXIT_USAGE


def test_complete_metrics_diff_export(roman, tmp_path, capsys):
    done = tmp_path / "done"
    assert cli.main(["complete", "--bundle", str(roman), "--out", str(done)]) == 0
    assert json.loads((done / "completion.json").read_text())["completions"][0][
        "inferred_edge_count"] == 74
    for name, bundle in (("before", roman), ("after", done)):
        assert cli.main(["metrics", "--bundle", str(bundle), "--direction", "out",
                         "--out", str(tmp_path / f"{name}.json")]) == 0
    capsys.readouterr()
    assert cli.main(["diff", str(tmp_path / "before.json"), str(tmp_path / "after.json"),
                     "--out", str(tmp_path / "diff.json"), "--csv", str(tmp_path / "d.csv"),
                     "--top-k", "1"]) == 0
    stdout = capsys.readouterr().out
    assert "Emperor" in stdout and "+1075.00%" in stdout
    d = json.loads((tmp_path / "diff.json").read_text())
    emp = next(r for r in d["records"] if r["node"] == "Emperor")
    assert (emp["before"], emp["after"]) == (4.0, 47.0)
    assert cli.main(["metrics", "--bundle", str(roman), "--algorithm", "pagerank",
                     "--out", str(tmp_path / "pr.json")]) == 0
    assert cli.main(["diff", str(tmp_path / "before.json"), str(tmp_path / "pr.json")]) \
        == cli.EXIT_MISMATCH
    assert cli.main(["export-cypher", "--bundle", str(done), "--out",
                     str(tmp_path / "g.cypher")]) == 0
    assert (tmp_path / "g.cypher").read_text().count("CREATE") == 48 + 121


def test_help_documents_flags():
    out = subprocess.run([sys.executable, "-m", "kgcomplete", "pipeline", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for flag in ("--bundle", "--config", "--out", "--cycle-policy", "--top-k", "--weighted",
                 "--damping", "--cypher", "--no-pagerank", "--degree-direction"):
        assert flag in out
