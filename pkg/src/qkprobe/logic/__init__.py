"""Formulas, inference rules, entailment and derivation depth."""
from qkprobe.logic.chaining import (
    DerivationTrace,
    closure_depths,
    forward_chain,
    proof_depth,
    rule_search,
)
from qkprobe.logic.formula import (
    And,
    Atom,
    Const,
    Exists,
    ForAll,
    Formula,
    Implies,
    Not,
    Or,
    Predicate,
    Var,
    atom,
    exists,
    forall,
    negate,
    parse,
    to_text,
)
from qkprobe.logic.rules import SCHEMAS, InferenceRule, apply_rule
from qkprobe.logic.semantics import Verdict, entails

__all__ = [
    "And", "Atom", "Const", "DerivationTrace", "Exists", "ForAll", "Formula", "Implies",
    "InferenceRule", "Not", "Or", "Predicate", "SCHEMAS", "Var", "Verdict", "apply_rule",
    "atom", "closure_depths", "entails", "exists", "forall", "forward_chain", "negate",
    "parse", "proof_depth", "rule_search", "to_text",
]
