"""QK-scores, head decisions, the output-probability baseline and score tables."""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from qkprobe.errors import HeadOutOfRange, IncompleteCaptures, MissingLogits
from qkprobe.runtime.capture import QKCapture, normalize_variant

A0, A1 = 0, 1


class HeadId(NamedTuple):
    layer: int
    head: int

    def __str__(self) -> str:
        return f"({self.layer}, {self.head})"


class Orientation(str, Enum):
    DIRECT = "direct"
    REVERSED = "reversed"

    def __str__(self) -> str:
        return self.value


def _check_head(capture: QKCapture, head: HeadId) -> None:
    L, H, _ = capture.shape
    if not (0 <= head[0] < L and 0 <= head[1] < H):
        raise HeadOutOfRange(f"head {tuple(head)} outside {L} layers x {H} heads")


def qk_score(capture: QKCapture, head: HeadId, option: int, variant: str = "pre_positional") -> float:
    """Raw dot product of the option's query with the statement key; no scaling, mask or softmax."""
    _check_head(capture, head)
    q, k = capture.vectors(variant)
    l, h = head
    return float(np.dot(q[l, h, option].astype(np.float64), k[l, h].astype(np.float64)))


def decide(s0: float, s1: float, orientation: Orientation | str = Orientation.DIRECT) -> int:
    choice = A0 if s0 >= s1 else A1
    return 1 - choice if Orientation(orientation) is Orientation.REVERSED else choice


def decide_qk(capture: QKCapture, head: HeadId, orientation=Orientation.DIRECT, variant: str = "pre_positional") -> int:
    return decide(qk_score(capture, head, A0, variant), qk_score(capture, head, A1, variant), orientation)


def decide_logits(l0: float, l1: float) -> int:
    return A0 if l0 >= l1 else A1


def decide_baseline(capture: QKCapture) -> int:
    logits = capture.option_logits
    if logits is None or len(logits) != 2 or not np.all(np.isfinite(logits)):
        raise MissingLogits(f"capture {capture.sample_id!r} lacks two finite option logits")
    return decide_logits(float(logits[0]), float(logits[1]))


@dataclass
class ScoreTable:
    """Complete (sample x head) grid of QK-scores plus gold and baseline decisions."""

    sample_ids: list
    n_layers: int
    n_heads: int
    s0: np.ndarray  # (N, L, H) float64
    s1: np.ndarray
    gold: np.ndarray  # (N,) int
    baseline: np.ndarray  # (N,) int
    variant: str = "pre_positional"
    dataset_digest: str = ""
    attn: np.ndarray | None = field(default=None, repr=False)  # (N, L, H, 2) diagnostic

    def __post_init__(self):
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise ValueError("duplicate sample ids in score table")

    def __len__(self) -> int:
        return len(self.sample_ids)

    @property
    def heads(self) -> list[HeadId]:
        return [HeadId(l, h) for l in range(self.n_layers) for h in range(self.n_heads)]

    def decisions(self, orientation=Orientation.DIRECT) -> np.ndarray:
        """(N, L, H) array of QK decisions under one orientation."""
        d = np.where(self.s0 >= self.s1, A0, A1)
        return 1 - d if Orientation(orientation) is Orientation.REVERSED else d

    def subset(self, ids: Iterable[str]) -> "ScoreTable":
        pos = {s: i for i, s in enumerate(self.sample_ids)}
        idx = [pos[s] for s in ids]
        return ScoreTable(
            [self.sample_ids[i] for i in idx], self.n_layers, self.n_heads, self.s0[idx], self.s1[idx],
            self.gold[idx], self.baseline[idx], self.variant, self.dataset_digest,
            None if self.attn is None else self.attn[idx],
        )

    def records(self):
        """Rows (sample_id, layer, head, s0, s1, gold, qk_decision, baseline_decision), sample-major."""
        dec = self.decisions()
        for i, sid in enumerate(self.sample_ids):
            for l in range(self.n_layers):
                for h in range(self.n_heads):
                    yield sid, l, h, self.s0[i, l, h], self.s1[i, l, h], int(self.gold[i]), int(dec[i, l, h]), int(self.baseline[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["sample_id", "layer", "head", "s0", "s1", "gold", "qk_decision", "baseline_decision"]
        if self.attn is not None:
            cols += ["attn_a0", "attn_a1"]
        w.writerow(cols)
        for i, row in enumerate(self.records()):
            sid, l, h, s0, s1, *rest = row
            out = [sid, l, h, repr(float(s0)), repr(float(s1)), *rest]
            if self.attn is not None:
                n = i // (self.n_layers * self.n_heads)
                out += [repr(float(self.attn[n, l, h, 0])), repr(float(self.attn[n, l, h, 1]))]
            w.writerow(out)
        return buf.getvalue()

    def export(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()[:16]


def score_table(
    captures: Sequence[QKCapture],
    gold: Mapping[str, int],
    variant: str = "pre_positional",
    dataset_digest: str = "",
    ids: Sequence[str] | None = None,
) -> ScoreTable:
    """Score every head on every sample.

    Rows follow ``ids`` when given (each must have a capture), otherwise the
    sorted sample ids, so the table does not depend on capture order.
    """
    variant = normalize_variant(variant)
    by_id: dict[str, QKCapture] = {}
    for c in captures:
        if c.sample_id in by_id:
            raise IncompleteCaptures(f"duplicate capture for {c.sample_id!r}")
        by_id[c.sample_id] = c
    order = list(ids) if ids is not None else sorted(by_id)
    missing = [s for s in order if s not in by_id]
    if missing:
        raise IncompleteCaptures(f"{len(missing)} samples lack captures, e.g. {missing[:3]}")
    no_gold = [s for s in order if s not in gold]
    if no_gold:
        raise IncompleteCaptures(f"{len(no_gold)} captures lack gold labels, e.g. {no_gold[:3]}")
    if not order:
        raise IncompleteCaptures("no captures")
    shapes = {by_id[s].shape for s in order}
    if len(shapes) != 1:
        raise IncompleteCaptures(f"captures disagree on (layers, heads, head_dim): {sorted(shapes)}")
    (L, H, _), = shapes
    q = np.stack([by_id[s].vectors(variant)[0] for s in order]).astype(np.float64)  # (N, L, H, 2, hd)
    k = np.stack([by_id[s].vectors(variant)[1] for s in order]).astype(np.float64)  # (N, L, H, hd)
    scores = np.einsum("nlhod,nlhd->nlho", q, k)
    baseline = np.array([decide_baseline(by_id[s]) for s in order], dtype=np.int64)
    attn = None
    if all(by_id[s].attn_diag is not None for s in order):
        attn = np.stack([by_id[s].attn_diag for s in order]).astype(np.float64)
    return ScoreTable(
        sample_ids=order,
        n_layers=L,
        n_heads=H,
        s0=scores[..., 0],
        s1=scores[..., 1],
        gold=np.array([int(gold[s]) for s in order], dtype=np.int64),
        baseline=baseline,
        variant=variant,
        dataset_digest=dataset_digest,
        attn=attn,
    )


def accuracy(decisions: np.ndarray, gold: np.ndarray) -> float:
    return float(np.mean(decisions == gold)) if len(gold) else float("nan")
