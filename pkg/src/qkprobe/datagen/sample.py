"""Sample, configuration and split types plus their on-disk JSON-lines format."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from qkprobe.errors import FormatError, VersionMismatch
from qkprobe.logic.formula import Formula, parse, to_text

DATASET_FORMAT = "qkprobe-dataset"
DATASET_VERSION = 1

FAMILIES = ("pronto", "pararule", "mle")
OPTIONS = {"pronto": ("true", "false"), "pararule": ("true", "false"), "mle": ("yes", "no")}


@dataclass(frozen=True)
class Premise:
    text: str
    formula: Formula


@dataclass(frozen=True)
class LogicSample:
    id: str
    family: str
    context: tuple  # of Premise
    statement: Premise
    gold: int  # 0 -> first option (true/yes), 1 -> second option (false/no)
    polarity: str  # "positive" | "negative"
    depth: int
    distractors: int = 0
    rule_tags: tuple = ()
    counterpart_id: str | None = None
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def options(self) -> tuple[str, str]:
        return OPTIONS[self.family]

    @property
    def answer(self) -> str:
        return self.options[self.gold]

    @property
    def theory(self) -> list[Formula]:
        return [p.formula for p in self.context]

    def pair_key(self) -> tuple:
        """Identity of the (axioms, theorem) pair, independent of premise order."""
        return (frozenset(to_text(p.formula) for p in self.context), to_text(self.statement.formula))

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "family": self.family,
            "depth": self.depth,
            "distractors": self.distractors,
            "polarity": self.polarity,
            "gold": self.gold,
            "answer": self.answer,
            "context": [p.text for p in self.context],
            "context_formulas": [to_text(p.formula) for p in self.context],
            "statement": self.statement.text,
            "statement_formula": to_text(self.statement.formula),
            "rule_tags": list(self.rule_tags),
            "counterpart_id": self.counterpart_id,
            "meta": self.meta,
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "LogicSample":
        try:
            context = tuple(
                Premise(t, parse(f)) for t, f in zip(rec["context"], rec["context_formulas"], strict=True)
            )
            return cls(
                id=rec["id"],
                family=rec["family"],
                context=context,
                statement=Premise(rec["statement"], parse(rec["statement_formula"])),
                gold=int(rec["gold"]),
                polarity=rec["polarity"],
                depth=int(rec["depth"]),
                distractors=int(rec["distractors"]),
                rule_tags=tuple(rec.get("rule_tags", ())),
                counterpart_id=rec.get("counterpart_id"),
                meta=rec.get("meta", {}),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad sample record: {exc}") from exc


@dataclass
class GenConfig:
    family: str
    rule_mode: str = "mp_only"  # mp_only | composed | scheme
    hops: tuple = (1, 1)
    distractors: tuple = (0, 0)
    n_calibration: int = 600
    n_evaluation: int = 1000
    seed: int = 0
    schemes: tuple = ()  # mle: explicit scheme names, default all schemes of the depth
    category_count: int = 100  # size of the pseudoword pool (pronto)
    name: str = ""

    def __post_init__(self):
        self.hops = tuple(self.hops)
        self.distractors = tuple(self.distractors)
        self.schemes = tuple(self.schemes)
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_calibration % 2:
            raise ValueError("n_calibration must be even")
        lo, hi = self.hops
        if not 1 <= lo <= hi <= 5:
            raise ValueError(f"hops must lie within 1..5, got {self.hops}")
        lo, hi = self.distractors
        if not 0 <= lo <= hi <= 5:
            raise ValueError(f"distractors must lie within 0..5, got {self.distractors}")

    @property
    def total(self) -> int:
        return self.n_calibration + self.n_evaluation

    def setup_name(self) -> str:
        if self.name:
            return self.name
        d0, d1 = self.hops
        depth = f"d{d0}" if d0 == d1 else f"d{d0}-{d1}"
        x0, x1 = self.distractors
        distr = f"x{x0}" if x0 == x1 else f"x{x0}-{x1}"
        return f"{self.family}-{self.rule_mode}-{depth}-{distr}"

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["hops"], d["distractors"], d["schemes"] = list(self.hops), list(self.distractors), list(self.schemes)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GenConfig":
        return cls(**d)


@dataclass
class DatasetSplit:
    calibration: list
    evaluation: list
    manifest: dict = field(default_factory=dict)

    @property
    def samples(self) -> list[LogicSample]:
        return [*self.calibration, *self.evaluation]

    def by_id(self) -> dict[str, LogicSample]:
        return {s.id: s for s in self.samples}


def _record_lines(split: DatasetSplit) -> list[str]:
    lines = []
    for part, samples in (("calibration", split.calibration), ("evaluation", split.evaluation)):
        for s in samples:
            rec = {"split": part, **s.to_record()}
            lines.append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
    return lines


def content_hash(split: DatasetSplit) -> str:
    h = hashlib.sha256()
    for line in _record_lines(split):
        h.update(line.encode("utf-8") + b"\n")
    return h.hexdigest()


def write_split(split: DatasetSplit, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.jsonl`` and ``<path>.manifest.json``; returns both paths."""
    path = Path(path)
    data = path.with_suffix(".jsonl") if path.suffix != ".jsonl" else path
    man = data.with_suffix(".manifest.json")
    data.parent.mkdir(parents=True, exist_ok=True)
    body = "".join(line + "\n" for line in _record_lines(split))
    data.write_text(body, encoding="utf-8")
    manifest = {
        **split.manifest,
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "n_calibration": len(split.calibration),
        "n_evaluation": len(split.evaluation),
        "sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
    }
    man.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return data, man


def read_split(path: str | Path, *, verify: bool = True) -> DatasetSplit:
    path = Path(path)
    data = path.with_suffix(".jsonl") if path.suffix != ".jsonl" else path
    man = data.with_suffix(".manifest.json")
    manifest: dict = {}
    body = data.read_bytes()
    if man.exists():
        manifest = json.loads(man.read_text(encoding="utf-8"))
        if manifest.get("format") != DATASET_FORMAT:
            raise FormatError(f"{man}: not a {DATASET_FORMAT} manifest")
        if manifest.get("version") != DATASET_VERSION:
            raise VersionMismatch(f"{man}: version {manifest.get('version')} != {DATASET_VERSION}")
        if verify and manifest.get("sha256") != hashlib.sha256(body).hexdigest():
            raise FormatError(f"{data}: content hash does not match manifest")
    cal, ev = [], []
    for line in body.decode("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        (cal if rec.pop("split", "evaluation") == "calibration" else ev).append(LogicSample.from_record(rec))
    return DatasetSplit(cal, ev, manifest)


def write_samples(samples: Iterable[LogicSample], path: str | Path) -> Path:
    """Plain JSON-lines dump without split assignment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
    return path
