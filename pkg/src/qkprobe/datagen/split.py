"""Calibration / evaluation splitting with pair-level hygiene."""
from __future__ import annotations

import random
from typing import Sequence

from qkprobe.datagen.sample import DATASET_VERSION, DatasetSplit, LogicSample
from qkprobe.errors import InsufficientSamples


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _groups(samples: Sequence[LogicSample]) -> list[list[int]]:
    """Indices that must share a split: equal (axioms, theorem) pairs and counterpart links."""
    uf = _UnionFind(len(samples))
    first_by_key: dict = {}
    index_by_id = {s.id: i for i, s in enumerate(samples)}
    for i, s in enumerate(samples):
        key = s.pair_key()
        if key in first_by_key:
            uf.union(first_by_key[key], i)
        else:
            first_by_key[key] = i
        j = index_by_id.get(s.counterpart_id) if s.counterpart_id else None
        if j is not None:
            uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(len(samples)):
        groups.setdefault(uf.find(i), []).append(i)
    return list(groups.values())


def split_calibration_eval(samples: Sequence[LogicSample], n_cal: int, seed: int) -> DatasetSplit:
    """Exactly ``n_cal/2`` samples of each gold class go to calibration; the rest evaluate.

    Samples are grouped so that duplicated (axioms, theorem) pairs and negation
    counterparts never straddle the boundary.  Groups are visited in seeded
    random order and taken whole whenever they fit the remaining quota.
    """
    if n_cal % 2 or n_cal < 0:
        raise ValueError("n_cal must be a non-negative even number")
    quota = [n_cal // 2, n_cal // 2]
    have = [sum(s.gold == c for s in samples) for c in (0, 1)]
    if have[0] < quota[0] or have[1] < quota[1]:
        raise InsufficientSamples(f"need {quota[0]} per class, have {have[0]}/{have[1]}")
    groups = _groups(samples)
    random.Random(seed).shuffle(groups)
    cal_idx: set[int] = set()
    for g in groups:
        if quota == [0, 0]:
            break
        need = [sum(samples[i].gold == c for i in g) for c in (0, 1)]
        if need[0] <= quota[0] and need[1] <= quota[1]:
            cal_idx.update(g)
            quota = [quota[0] - need[0], quota[1] - need[1]]
    if quota != [0, 0]:
        raise InsufficientSamples(f"could not fill a balanced calibration set; {quota} still missing")
    cal = [s for i, s in enumerate(samples) if i in cal_idx]
    ev = [s for i, s in enumerate(samples) if i not in cal_idx]
    manifest = {"seed": seed, "n_cal": n_cal, "dataset_version": DATASET_VERSION}
    return DatasetSplit(cal, ev, manifest)
