from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from acqgraph.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from acqgraph.graph import from_graphml


@pytest.fixture(scope="module")
def data(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("cli")
    raw, clean = root / "raw", root / "clean"
    args = ["synth", "--out", str(raw), "--n-orgs", "120", "--n-events", "400", "--n-categories", "8"]
    args += ["--n-category-groups", "3", "--homophily", "country=1.0", "--inject-duplicates", "3"]
    assert main(args + ["--seed", "7"]) == EXIT_OK
    assert main(["ingest", "--data", str(raw), "--out", str(clean)]) == EXIT_OK
    return clean


def test_help_and_usage_errors(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "analyze" in capsys.readouterr().out
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["metrics", "--data", "x"]) == EXIT_USAGE


def test_missing_data_exits_with_data_code(tmp_path):
    assert main(["metrics", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_ingest_report_and_manifest(data):
    report = json.loads((data / "cleaning_report.json").read_text())
    assert report["removed_by_rule"]["dup"] == 3
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["subcommand"] == "ingest"
    assert set(manifest["input_hashes"]) >= {"organizations.csv", "acquisitions.csv", "descriptions.csv"}
    assert "cleaning_report.json" in manifest["outputs"]


def test_synth_writes_truth(data):
    truth = json.loads((data.parent / "raw" / "synth_truth.json").read_text())
    assert "match:country" in json.dumps(truth)


def test_non_convergence_exits_with_numeric_code(data, tmp_path):
    args = ["ergm", "--data", str(data), "--out", str(tmp_path), "--terms", "edges,match:country"]
    assert main(args + ["--max-iterations", "1"]) == EXIT_NUMERIC
    assert main(args) == EXIT_OK
    fit = json.loads((tmp_path / "ergm.json").read_text())
    assert [r["term"] for r in fit["rows"]] == ["edges", "match:country"]


def test_bad_ergm_term_is_a_data_error(data, tmp_path):
    assert main(["ergm", "--data", str(data), "--out", str(tmp_path), "--terms", "match:shoe_size"]) == EXIT_DATA


def test_analyze_is_thread_invariant(data, tmp_path):
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / threads
        args = ["analyze", "--data", str(data), "--out", str(out), "--baseline-samples", "2", "--threads", threads]
        assert main(args) == EXIT_OK
        outs.append((out / "analysis.json").read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.parametrize("fmt,name", [("markdown", "analysis.md"), ("csv", "analysis.csv")])
def test_analyze_formats(data, tmp_path, fmt, name):
    args = ["analyze", "--data", str(data), "--out", str(tmp_path), "--format", fmt, "--with", "assortativity"]
    assert main(args + ["--network", "cross-border"]) == EXIT_OK
    assert (tmp_path / name).stat().st_size > 0


def test_metrics_and_centrality(data, tmp_path):
    assert main(["metrics", "--data", str(data), "--out", str(tmp_path), "--network", "common-acquirer"]) == EXIT_OK
    assert "structure" in json.loads((tmp_path / "metrics.json").read_text())
    args = ["centrality", "--data", str(data), "--out", str(tmp_path), "--metric", "pagerank,degree", "--top", "2"]
    assert main(args) == EXIT_OK
    with open(tmp_path / "ranked.csv", newline="") as fh:
        ranked = list(csv.DictReader(fh))
    assert len(ranked) == 4


def test_communities_baseline_temporal(data, tmp_path):
    assert main(["communities", "--data", str(data), "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "partition.csv").exists()
    assert main(["baseline", "--data", str(data), "--out", str(tmp_path), "--samples", "2"]) == EXIT_OK
    assert json.loads((tmp_path / "baseline.json").read_text())["n_samples"] == 2
    args = ["temporal", "--data", str(data), "--out", str(tmp_path), "--from", "2020-01", "--to", "2020-06"]
    assert main(args) == EXIT_OK
    assert len((tmp_path / "series.csv").read_text().splitlines()) == 7


def test_export_graphml_round_trips(data, tmp_path):
    args = ["export", "--data", str(data), "--out", str(tmp_path), "--top-degree", "10", "--color-by-community"]
    assert main(args) == EXIT_OK
    [path] = list(tmp_path.glob("*.graphml"))
    assert len(from_graphml(path)) == 10
    assert main(["export", "--data", str(data), "--out", str(tmp_path), "--format", "dot"]) == EXIT_OK
    assert list(tmp_path.glob("*.dot"))
