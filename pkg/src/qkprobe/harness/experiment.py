"""Two-step experiments: calibrate heads on one split, evaluate them on another.

A run directory holds everything needed to re-derive its numbers::

    config.json  run.json  report.json
    datasets/<setup>.jsonl (+ .manifest.json)
    captures/<setup>.qkcap          (optional)
    tables/<setup>.csv              score tables
    calibration/<setup>.csv/.json   per-head accuracies and summary
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from qkprobe import __version__
from qkprobe.calibration import CalibrationReport, calibrate, detect_orientation, select_cover_heads
from qkprobe.datagen import generate
from qkprobe.datagen.sample import DatasetSplit, GenConfig, content_hash, read_split, write_split
from qkprobe.errors import ConfigError, DigestMismatch, IdMismatch
from qkprobe.probe import HeadId, Orientation, ScoreTable, accuracy, score_table
from qkprobe.runtime.capture import QKCapture, normalize_variant, read_capture, write_capture
from qkprobe.runtime.forward import Model, forward_capture, load_model
from qkprobe.runtime.prompts import render_prompt
from qkprobe.runtime.spec import ModelSpec

WORKERS_ENV = "QKPROBE_WORKERS"
BASELINE = "Baseline"


@dataclass
class SetupSpec:
    name: str
    gen: GenConfig | None = None
    path: str | None = None
    capture: str | None = None  # external capture file for this setup

    def to_dict(self) -> dict:
        return {"name": self.name, "gen": self.gen.to_dict() if self.gen else None, "path": self.path,
                "capture": self.capture}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SetupSpec":
        gen = GenConfig.from_dict(d["gen"]) if d.get("gen") else None
        return cls(d["name"], gen, d.get("path"), d.get("capture"))


@dataclass
class ExperimentConfig:
    setups: list
    model_path: str | None = None
    capture_dir: str | None = None  # directory of <setup>.qkcap files, or per-setup capture fields
    variant: str = "pre_positional"
    heads: Any = "best"  # "best" | "cover" | [[layer, head], ...]
    source_setups: list | None = None  # setups whose calibration chooses heads; None means each its own
    cover_size: int = 5
    top_k: int = 10
    apply_orientation: bool = False
    marker: bool = False  # render the statement end of line as a gold marker (planted runs)
    output_dir: str | None = None
    save_captures: bool = True
    seed: int = 0
    name: str = "experiment"
    model_label: str = ""

    def __post_init__(self):
        self.setups = [s if isinstance(s, SetupSpec) else SetupSpec.from_dict(s) for s in self.setups]
        self.variant = normalize_variant(self.variant)

    def validate(self, *, in_memory_model: bool = False) -> None:
        """``in_memory_model`` counts as the model source when no path is given."""
        if not self.setups:
            raise ConfigError("no setups configured")
        names = [s.name for s in self.setups]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate setup names: {names}")
        has_caps = self.capture_dir is not None or any(s.capture for s in self.setups)
        has_model = self.model_path is not None or in_memory_model
        if has_model == has_caps:
            raise ConfigError("configure exactly one of a model or capture files")
        if self.model_path is not None and not Path(self.model_path).exists():
            raise ConfigError(f"model path {self.model_path} does not exist")
        for s in self.setups:
            if (s.gen is None) == (s.path is None):
                raise ConfigError(f"setup {s.name!r}: give exactly one of a generator config or a dataset path")
            if s.path is not None and not Path(s.path).exists():
                raise ConfigError(f"setup {s.name!r}: dataset {s.path} does not exist")
            cap = self.capture_file(s)
            if cap is not None and not cap.exists():
                raise ConfigError(f"setup {s.name!r}: capture {cap} does not exist")
        for src in self.source_setups or []:
            if src not in names:
                raise ConfigError(f"source setup {src!r} is not configured")
        if isinstance(self.heads, str) and self.heads not in ("best", "cover"):
            raise ConfigError(f"heads must be 'best', 'cover' or a list, got {self.heads!r}")

    def capture_file(self, setup: SetupSpec) -> Path | None:
        if setup.capture:
            return Path(setup.capture)
        if self.capture_dir:
            return Path(self.capture_dir) / f"{setup.name}.qkcap"
        return None

    def to_dict(self) -> dict:
        return {
            "setups": [s.to_dict() for s in self.setups], "model_path": self.model_path,
            "capture_dir": self.capture_dir, "variant": self.variant,
            "heads": self.heads if isinstance(self.heads, str) else [list(h) for h in self.heads],
            "source_setups": self.source_setups, "cover_size": self.cover_size, "top_k": self.top_k,
            "apply_orientation": self.apply_orientation, "marker": self.marker, "output_dir": self.output_dir,
            "save_captures": self.save_captures, "seed": self.seed, "name": self.name,
            "model_label": self.model_label,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class Cell:
    accuracy: float
    correct: int
    total: int
    head: tuple | None = None  # None for the baseline
    orientation: str = "direct"

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "correct": self.correct, "total": self.total,
                "head": list(self.head) if self.head is not None else None, "orientation": self.orientation}


@dataclass
class EvalReport:
    setups: list  # column order
    sources: list  # row order; BASELINE last
    cells: dict  # (setup, source) -> Cell
    n_layers: int
    n_heads: int
    calibration: dict = field(default_factory=dict)  # setup -> {"best_head", "top10", "grid"}
    meta: dict = field(default_factory=dict)

    def cell(self, setup: str, source: str) -> Cell:
        return self.cells[(setup, source)]

    def to_dict(self) -> dict:
        return {
            "setups": self.setups,
            "sources": self.sources,
            "cells": [{"setup": s, "source": r, **self.cells[(s, r)].to_dict()}
                      for r in self.sources for s in self.setups if (s, r) in self.cells],
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "calibration": self.calibration,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvalReport":
        cells = {}
        for c in d["cells"]:
            head = tuple(c["head"]) if c["head"] is not None else None
            cells[(c["setup"], c["source"])] = Cell(c["accuracy"], c["correct"], c["total"], head, c["orientation"])
        return cls(list(d["setups"]), list(d["sources"]), cells, d["n_layers"], d["n_heads"],
                   dict(d.get("calibration", {})), dict(d.get("meta", {})))

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# captures

def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer") from exc


def capture_split(model: Model, split: DatasetSplit, *, marker: bool = False, template_id: str | None = None,
                  workers: int | None = None) -> list[QKCapture]:
    """Forward every sample; results come back in sample-id order whatever the worker count."""
    samples = sorted(split.samples, key=lambda s: s.id)

    def job(sample):
        text, spans = render_prompt(sample, template_id, marker=marker)
        layout = model.tokenizer.tokenize(text, spans, template_id or "", sample.id)
        return forward_capture(model, layout)

    workers = workers or worker_count()
    if workers == 1:
        return [job(s) for s in samples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, samples))


def ingest_external_capture(
    path: str | Path,
    dataset: DatasetSplit | str | Path,
    *,
    expected_digest: str | None = None,
) -> tuple[list[QKCapture], ModelSpec]:
    """Join a capture file to a dataset by sample id.

    Every dataset sample needs exactly one capture and every capture must name
    a dataset sample.  Returns captures in sample-id order with the file's spec.
    """
    split = dataset if isinstance(dataset, DatasetSplit) else read_split(dataset)
    caps, spec = read_capture(path)
    if expected_digest is not None and spec.digest() != expected_digest:
        raise DigestMismatch(f"{path}: model digest {spec.digest()} != expected {expected_digest}")
    by_id: dict[str, QKCapture] = {}
    for c in caps:
        if c.sample_id in by_id:
            raise IdMismatch(f"{path}: sample {c.sample_id!r} captured twice")
        by_id[c.sample_id] = c
    wanted = {s.id for s in split.samples}
    extra = sorted(set(by_id) - wanted)
    if extra:
        raise IdMismatch(f"{path}: captures for unknown samples {extra[:5]}")
    missing = sorted(wanted - set(by_id))
    if missing:
        raise IdMismatch(f"{path}: no capture for samples {missing[:5]}" + (" ..." if len(missing) > 5 else ""))
    return [by_id[s] for s in sorted(wanted)], spec


# ---------------------------------------------------------------------------
# evaluation

def setup_descriptor(setup: SetupSpec, split: DatasetSplit) -> dict:
    gen = setup.gen.to_dict() if setup.gen else split.manifest.get("config", {})
    return {
        "name": setup.name,
        "family": gen.get("family", split.samples[0].family if split.samples else ""),
        "rule_mode": gen.get("rule_mode", ""),
        "depth": gen.get("hops"),
        "distractors": gen.get("distractors"),
    }


def evaluate_head(table: ScoreTable, head: HeadId, orientation: Orientation = Orientation.DIRECT) -> Cell:
    dec = table.decisions(orientation)[:, head[0], head[1]]
    correct = int((dec == table.gold).sum())
    return Cell(accuracy(dec, table.gold), correct, len(table), tuple(head), str(orientation))


def evaluate_baseline(table: ScoreTable) -> Cell:
    correct = int((table.baseline == table.gold).sum())
    return Cell(accuracy(table.baseline, table.gold), correct, len(table))


def _head_label(h) -> str:
    return f"QK ({h[0]}, {h[1]})"


def run_experiment(config: ExperimentConfig, *, model: Model | None = None) -> EvalReport:
    """Run every configured setup and return the accuracy grid.

    ``model`` may be passed to skip loading ``config.model_path`` (the path is
    still recorded).  Results depend only on the config and the inputs; the
    wall-clock time goes to ``run.json``, never to ``report.json``.
    """
    config.validate(in_memory_model=model is not None)
    out = Path(config.output_dir) if config.output_dir else None
    if out:
        for sub in ("datasets", "captures", "tables", "calibration"):
            (out / sub).mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(json.dumps(config.to_dict(), sort_keys=True, indent=1) + "\n")
    started = time.time()
    if config.model_path is not None and model is None:
        model = load_model(config.model_path)

    tables: dict[str, tuple[ScoreTable, ScoreTable]] = {}
    reports: dict[str, CalibrationReport] = {}
    digests: dict[str, str] = {}
    spec: ModelSpec | None = model.spec if model is not None else None
    for setup in config.setups:
        split = generate(setup.gen) if setup.gen is not None else read_split(setup.path)
        digests[setup.name] = content_hash(split)
        if out:
            write_split(split, out / "datasets" / f"{setup.name}.jsonl")
        if model is not None:
            caps = capture_split(model, split, marker=config.marker)
            if out and config.save_captures:
                write_capture(caps, out / "captures" / f"{setup.name}.qkcap", model.spec)
        else:
            caps, cap_spec = ingest_external_capture(config.capture_file(setup), split)
            if spec is not None and cap_spec.digest() != spec.digest():
                raise DigestMismatch(f"setup {setup.name!r}: captures come from a different model spec")
            spec = cap_spec
        cal_ids = [s.id for s in split.calibration]
        ev_ids = [s.id for s in split.evaluation]
        if set(cal_ids) & set(ev_ids):
            raise ConfigError(f"setup {setup.name!r}: calibration and evaluation share sample ids")
        gold = {s.id: s.gold for s in split.samples}
        table = score_table(caps, gold, config.variant, digests[setup.name], ids=cal_ids + ev_ids)
        cal, ev = table.subset(cal_ids), table.subset(ev_ids)
        tables[setup.name] = (cal, ev)
        reports[setup.name] = calibrate(cal, setup_descriptor(setup, split), config.top_k)
        if out:
            table.export(out / "tables" / f"{setup.name}.csv")
            reports[setup.name].export(out / "calibration" / setup.name)

    names = [s.name for s in config.setups]
    sources: list[str] = []
    cells: dict[tuple[str, str], Cell] = {}

    def orientation_for(head: HeadId, source_setups: Sequence[str]) -> Orientation:
        if not config.apply_orientation:
            return Orientation.DIRECT
        mean = sum(reports[s].accuracy[head] for s in source_setups) / len(source_setups)
        return detect_orientation(mean)

    src_names = config.source_setups or names
    if isinstance(config.heads, str) and config.heads == "best" and config.source_setups is None:
        label = "QK (best head)"
        sources.append(label)
        for n in names:
            head = reports[n].best_head
            cells[(n, label)] = evaluate_head(tables[n][1], head, orientation_for(head, [n]))
    else:
        if config.heads == "best":
            heads = []
            for s in src_names:
                if reports[s].best_head not in heads:
                    heads.append(reports[s].best_head)
        elif config.heads == "cover":
            heads = select_cover_heads([reports[s] for s in src_names], config.cover_size).heads
        else:
            heads = [HeadId(*h) for h in config.heads]
        for head in heads:
            label = _head_label(head)
            sources.append(label)
            orient = orientation_for(head, src_names)
            for n in names:
                cells[(n, label)] = evaluate_head(tables[n][1], head, orient)
    sources.append(BASELINE)
    for n in names:
        cells[(n, BASELINE)] = evaluate_baseline(tables[n][1])

    assert spec is not None
    calib = {
        n: {
            "best_head": list(reports[n].best_head),
            "best_accuracy": reports[n].accuracy[reports[n].best_head],
            "top10": [list(h) for h in reports[n].top10],
            "grid": [[reports[n].accuracy[HeadId(l, h)] for h in range(spec.n_heads)] for l in range(spec.n_layers)],
            "n_samples": reports[n].n_samples,
            "setup": reports[n].setup,
        }
        for n in names
    }
    report = EvalReport(
        setups=names,
        sources=sources,
        cells=cells,
        n_layers=spec.n_layers,
        n_heads=spec.n_heads,
        calibration=calib,
        meta={
            "name": config.name,
            "model": config.model_label or f"model-{spec.digest()}",
            "spec_digest": spec.digest(),
            "variant": config.variant,
            "seed": config.seed,
            "dataset_digests": digests,
            "eval_sizes": {n: len(tables[n][1]) for n in names},
            "calibration_sizes": {n: len(tables[n][0]) for n in names},
            "version": __version__,
        },
    )
    if out:
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        run = {"started": started, "finished": time.time(), "version": __version__, "workers": worker_count()}
        (out / "run.json").write_text(json.dumps(run, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return report
