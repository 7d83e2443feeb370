"""Benchmark generators with oracle-certified gold answers."""
from __future__ import annotations

from qkprobe.datagen.certify import certify, oracle_gold
from qkprobe.datagen.multilogieval import SCHEMES, gen_multilogieval
from qkprobe.datagen.pararule import gen_pararule
from qkprobe.datagen.pronto import add_distractors, gen_prontoqa, negation_counterpart
from qkprobe.datagen.sample import (
    OPTIONS,
    DatasetSplit,
    GenConfig,
    LogicSample,
    Premise,
    read_split,
    write_split,
)
from qkprobe.datagen.split import split_calibration_eval

GENERATORS = {"pronto": gen_prontoqa, "pararule": gen_pararule, "mle": gen_multilogieval}


def generate(config: GenConfig) -> DatasetSplit:
    return GENERATORS[config.family](config)


__all__ = [
    "OPTIONS", "SCHEMES", "DatasetSplit", "GenConfig", "LogicSample", "Premise", "add_distractors",
    "certify", "gen_multilogieval", "gen_pararule", "gen_prontoqa", "generate", "negation_counterpart",
    "oracle_gold", "read_split", "split_calibration_eval", "write_split",
]
