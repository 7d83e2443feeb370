"""Head ranking on a calibration split, best-head and cover selection, orientation."""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from qkprobe.errors import EmptyTable, InsufficientHeads
from qkprobe.probe import HeadId, Orientation, ScoreTable

MIN_CALIBRATION = 400
TOP_K = 10


def head_accuracy(table: ScoreTable) -> dict[HeadId, float]:
    """Direct-orientation accuracy of every head."""
    if len(table) == 0:
        raise EmptyTable("score table has no samples")
    hits = (table.decisions() == table.gold[:, None, None]).mean(axis=0)
    return {HeadId(l, h): float(hits[l, h]) for l in range(table.n_layers) for h in range(table.n_heads)}


def rank_heads(acc: Mapping[HeadId, float]) -> list[HeadId]:
    """Descending accuracy; equal accuracies in ascending (layer, head) order."""
    return sorted(acc, key=lambda h: (-acc[h], h[0], h[1]))


def detect_orientation(accuracy: float, threshold: float = 0.5) -> Orientation:
    if not 0.0 <= accuracy <= 1.0:
        raise ValueError(f"accuracy {accuracy} outside [0, 1]")
    return Orientation.REVERSED if accuracy < threshold else Orientation.DIRECT


@dataclass
class CalibrationReport:
    accuracy: dict  # HeadId -> float
    ranking: list
    best_head: HeadId
    top10: list
    orientation: dict  # HeadId -> Orientation
    setup: dict = field(default_factory=dict)
    digest: str = ""
    n_samples: int = 0

    def flipped_accuracy(self, head: HeadId) -> float:
        return 1.0 - self.accuracy[HeadId(*head)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["layer", "head", "accuracy", "flipped_accuracy", "rank", "orientation"])
        for rank, h in enumerate(self.ranking, start=1):
            w.writerow([h.layer, h.head, repr(self.accuracy[h]), repr(1.0 - self.accuracy[h]), rank, str(self.orientation[h])])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "setup": self.setup,
            "best_head": list(self.best_head),
            "best_accuracy": self.accuracy[self.best_head],
            "top10": [list(h) for h in self.top10],
            "reversed_heads": [list(h) for h in self.ranking if self.orientation[h] is Orientation.REVERSED],
            "n_samples": self.n_samples,
            "digest": self.digest,
        }

    def to_json(self) -> str:
        body = {**self.summary(), "accuracy": [[h.layer, h.head, self.accuracy[h]] for h in self.ranking]}
        return json.dumps(body, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CalibrationReport":
        d = json.loads(text)
        acc = {HeadId(l, h): a for l, h, a in d["accuracy"]}
        ranking = rank_heads(acc)
        return cls(
            accuracy=acc,
            ranking=ranking,
            best_head=HeadId(*d["best_head"]),
            top10=[HeadId(*h) for h in d["top10"]],
            orientation={h: detect_orientation(a) for h, a in acc.items()},
            setup=d.get("setup", {}),
            digest=d.get("digest", ""),
            n_samples=d.get("n_samples", 0),
        )

    def export(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``<path>.csv`` (per-head rows) and ``<path>.json`` (summary plus accuracies)."""
        path = Path(path)
        table, summary = path.with_suffix(".csv"), path.with_suffix(".json")
        path.parent.mkdir(parents=True, exist_ok=True)
        table.write_text(self.to_csv(), encoding="utf-8")
        summary.write_text(self.to_json(), encoding="utf-8")
        return table, summary


def calibrate(table: ScoreTable, setup: Mapping | None = None, top_k: int = TOP_K) -> CalibrationReport:
    if len(table) < MIN_CALIBRATION:
        warnings.warn(
            f"calibrating on {len(table)} samples; head rankings are unreliable below {MIN_CALIBRATION}",
            stacklevel=2,
        )
    acc = head_accuracy(table)
    ranking = rank_heads(acc)
    return CalibrationReport(
        accuracy=acc,
        ranking=ranking,
        best_head=ranking[0],
        top10=ranking[: min(top_k, len(ranking))],
        orientation={h: detect_orientation(a) for h, a in acc.items()},
        setup=dict(setup or {}),
        digest=table.digest(),
        n_samples=len(table),
    )


def select_best_head(report: CalibrationReport | Mapping[HeadId, float]) -> HeadId:
    acc = report.accuracy if isinstance(report, CalibrationReport) else report
    if not acc:
        raise EmptyTable("no head accuracies")
    return rank_heads({HeadId(*h): a for h, a in acc.items()})[0]


@dataclass
class HeadCover:
    heads: list
    coverage: dict  # HeadId -> set of setup names whose top-k list contains it

    def covered(self) -> set:
        return set().union(*(self.coverage[h] for h in self.heads)) if self.heads else set()


def _setup_name(report: CalibrationReport, i: int) -> str:
    return str(report.setup.get("name", i)) if report.setup else str(i)


def select_cover_heads(reports: Sequence[CalibrationReport], k: int = 5) -> HeadCover:
    """Greedy maximum coverage over the reports' top-k pools.

    Each round takes the head found in the most still-uncovered setups; ties go
    to the higher mean accuracy across reports, then to the lower (layer, head).
    """
    if not reports:
        raise InsufficientHeads("no calibration reports")
    names = [_setup_name(r, i) for i, r in enumerate(reports)]
    coverage: dict[HeadId, set] = {}
    for name, r in zip(names, reports):
        for h in r.top10:
            coverage.setdefault(HeadId(*h), set()).add(name)
    if len(coverage) < k:
        raise InsufficientHeads(f"only {len(coverage)} distinct top heads for a cover of {k}")
    mean_acc = {h: float(np.mean([r.accuracy.get(h, 0.0) for r in reports])) for h in coverage}
    uncovered, chosen = set(names), []
    for _ in range(k):
        pool = [h for h in coverage if h not in chosen]
        best = min(
            pool,
            key=lambda h: (-len(coverage[h] & uncovered), -mean_acc[h], h[0], h[1]),
        )
        chosen.append(best)
        uncovered -= coverage[best]
    return HeadCover(chosen, coverage)
