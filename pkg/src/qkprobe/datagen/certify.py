"""Oracle verification of generated samples."""
from __future__ import annotations

from qkprobe.datagen.sample import LogicSample
from qkprobe.errors import CertificationError
from qkprobe.logic.chaining import proof_depth
from qkprobe.logic.semantics import Verdict, consistent, entails

DEFAULT_DOMAIN = 3


def oracle_gold(sample: LogicSample, domain_size: int = DEFAULT_DOMAIN) -> int:
    """Gold index implied by the entailment oracle (0 when the statement is entailed)."""
    verdict = entails(sample.theory, sample.statement.formula, domain_size)
    if verdict is Verdict.ENTAILED:
        return 0
    if verdict is Verdict.NOT_ENTAILED:
        return 1
    raise CertificationError(f"{sample.id}: statement is undetermined by its context")


def certify(sample: LogicSample, domain_size: int = DEFAULT_DOMAIN, *, check_depth: bool = True) -> LogicSample:
    """Raise CertificationError unless gold and depth agree with the oracles."""
    if not consistent(sample.theory, domain_size):
        raise CertificationError(f"{sample.id}: context is inconsistent")
    gold = oracle_gold(sample, domain_size)
    if gold != sample.gold:
        raise CertificationError(f"{sample.id}: recorded gold {sample.gold}, oracle says {gold}")
    if check_depth:
        depth = proof_depth(sample.theory, sample.statement.formula)
        if depth != sample.depth:
            raise CertificationError(f"{sample.id}: recorded depth {sample.depth}, recomputed {depth}")
    return sample
