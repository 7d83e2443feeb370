from __future__ import annotations

import json
import warnings

import pytest

from qkprobe.harness.cli import main
from qkprobe.harness.experiment import EvalReport


def run(*argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Dataset, planted model and capture shared by the CLI tests."""
    d = tmp_path_factory.mktemp("cli")
    assert run("gen", "--family", "pronto", "--min-hops", 1, "--max-hops", 2, "--distractors", "0-1",
               "--n-cal", 30, "--n-eval", 30, "--seed", 2, "--out", d / "p.jsonl") == 0
    assert run("plant", "--layer", 1, "--head", 3, "--out", d / "m.qkpm") == 0
    assert run("capture", "--model", d / "m.qkpm", "--data", d / "p.jsonl", "--marker",
               "--out", d / "caps" / "p.qkcap") == 0
    return d


def test_gen_families(tmp_path):
    assert run("gen", "--family", "pararule", "--min-hops", 2, "--n-cal", 4, "--n-eval", 4,
               "--out", tmp_path / "r.jsonl") == 0
    assert run("gen", "--family", "mle", "--schemes", "MP_MP,MT_DS", "--n-cal", 4, "--n-eval", 4,
               "--out", tmp_path / "m.jsonl") == 0
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    assert len([ln for ln in lines if ln.strip()]) >= 8


def test_calibrate_and_eval(workdir, capsys):
    d = workdir
    assert run("calibrate", "--captures", d / "caps" / "p.qkcap", "--data", d / "p.jsonl",
               "--out", d / "cal" / "p") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["best_head"] == [1, 3]
    assert run("eval", "--captures", d / "caps" / "p.qkcap", "--data", d / "p.jsonl",
               "--calibration", d / "cal" / "p.json") == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows["QK (1, 3)"]["accuracy"] == 1.0 and rows["QK (1, 3)"]["total"] == 30
    assert run("eval", "--captures", d / "caps" / "p.qkcap", "--data", d / "p.jsonl",
               "--heads", "1,3;0,0", "--reversed") == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows["QK (1, 3)"]["accuracy"] == 0.0 and set(rows) == {"QK (1, 3)", "QK (0, 0)", "Baseline"}


def test_run_report_and_ingest_agree(workdir, tmp_path, capsys):
    d = workdir
    assert run("run", "--model", d / "m.qkpm", "--data", d / "p.jsonl", "--marker", "--out", tmp_path / "run") == 0
    md = capsys.readouterr().out
    assert "| QK (best head) | **1.0000** |" in md
    for name in ("report.json", "report.csv", "report.md", "heatmap-p.svg"):
        assert (tmp_path / "run" / name).exists()
    assert run("report", "--report", tmp_path / "run" / "report.json", "--formats", "csv,markdown",
               "--out", tmp_path / "again") == 0
    assert (tmp_path / "again" / "report.csv").read_bytes() == (tmp_path / "run" / "report.csv").read_bytes()
    assert run("ingest", "--captures", d / "caps" / "p.qkcap", "--data", d / "p.jsonl", "--out", tmp_path / "ing") == 0
    a = EvalReport.load(tmp_path / "run" / "report.json")
    b = EvalReport.load(tmp_path / "ing" / "report.json")
    assert a.cells == b.cells and a.calibration == b.calibration


def test_run_from_config(workdir, tmp_path):
    cfg = {"setups": [{"name": "p", "path": str(workdir / "p.jsonl")}], "capture_dir": str(workdir / "caps"),
           "heads": [[1, 3], [0, 1]]}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert run("run", "--config", tmp_path / "c.json", "--out", tmp_path / "out") == 0
    rep = EvalReport.load(tmp_path / "out" / "report.json")
    assert rep.sources == ["QK (1, 3)", "QK (0, 1)", "Baseline"]


def test_errors_return_2(workdir, tmp_path, capsys):
    d = workdir
    assert run("run", "--data", d / "p.jsonl") == 2  # neither model nor captures
    assert run("report", "--report", tmp_path / "missing.json", "--out", tmp_path) == 2
    assert run("plant", "--layers", 5, "--layer", 0, "--head", 0, "--out", tmp_path / "x.qkpm") == 2
    assert run("eval", "--captures", d / "caps" / "p.qkcap", "--data", d / "p.jsonl") == 2
    assert run("run", "--model", d / "m.qkpm", "--data", d / "p.jsonl", "--formats", "pdf",
               "--out", tmp_path / "r") == 2
    (tmp_path / "bad.json").write_text(json.dumps({"setups": [], "colour": "red"}))
    assert run("run", "--config", tmp_path / "bad.json") == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        run("gen", "--family", "nope", "--out", tmp_path / "x")
