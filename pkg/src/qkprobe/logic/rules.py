"""The thirteen first-order inference rules and schema-driven rule application.

Each rule is stored as a list of premise patterns and a conclusion pattern over
placeholder predicates ``p, q, r, s``, the placeholder constant ``a`` and the
placeholder variable ``x``.  Premises given as one big conjunction (as the rules
are usually written) are split into their conjuncts before matching, and a
universally quantified conjunction is split into one universal per conjunct.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from qkprobe.errors import SchemaMismatch
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
    Var,
    constants,
    validate,
)


class InferenceRule(str, Enum):
    MP = "MP"    # modus ponens
    MT = "MT"    # modus tollens
    HS = "HS"    # hypothetical syllogism
    DS = "DS"    # disjunctive syllogism
    CD = "CD"    # constructive dilemma
    DD = "DD"    # destructive dilemma
    BD = "BD"    # bidirectional dilemma
    CT = "CT"    # commutation
    DMT = "DMT"  # De Morgan
    CO = "CO"    # composition
    IM = "IM"    # importation
    EG = "EG"    # existential generalization
    UI = "UI"    # universal instantiation

    def __str__(self) -> str:
        return self.value


PRED_SLOTS = ("p", "q", "r", "s")
CONST_SLOT = "a"
VAR_SLOT = "x"


def _px(name: str) -> Atom:
    return Atom(name, (Var(VAR_SLOT),))


def _pa(name: str) -> Atom:
    return Atom(name, (Const(CONST_SLOT),))


def _all(body: Formula) -> ForAll:
    return ForAll(VAR_SLOT, body)


p, q, r, s = (_px(n) for n in PRED_SLOTS)
pa, qa, ra, sa = (_pa(n) for n in PRED_SLOTS)


@dataclass(frozen=True)
class Schema:
    premises: tuple
    conclusion: Formula


SCHEMAS: dict[InferenceRule, Schema] = {
    InferenceRule.MP: Schema((_all(p >> q), pa), qa),
    InferenceRule.MT: Schema((_all(p >> q), ~qa), ~pa),
    InferenceRule.HS: Schema((_all(p >> q), _all(q >> r)), pa >> ra),
    InferenceRule.DS: Schema((_all(p | q), ~pa), qa),
    InferenceRule.CD: Schema((_all(p >> q), _all(r >> s), pa | ra), qa | sa),
    InferenceRule.DD: Schema((_all(p >> q), _all(r >> s), ~qa | ~sa), ~pa | ~ra),
    InferenceRule.BD: Schema((_all(p >> q), _all(r >> s), pa | ~sa), qa | ~ra),
    InferenceRule.CT: Schema((_all(p | q),), _all(q | p)),
    InferenceRule.DMT: Schema((~_all(p & q),), Exists(VAR_SLOT, ~p | ~q)),
    InferenceRule.CO: Schema((_all(p >> q), _all(p >> r)), _all(p >> (q & r))),
    InferenceRule.IM: Schema((_all(p >> (q >> r)),), _all((p & q) >> r)),
    InferenceRule.EG: Schema((pa,), Exists(VAR_SLOT, p)),
    InferenceRule.UI: Schema((_all(p),), pa),
}


def split_premises(premises: Sequence[Formula]) -> list[Formula]:
    """Flatten top-level conjunctions, including conjunctions under a universal."""
    out: list[Formula] = []
    for f in premises:
        if isinstance(f, And):
            out.extend(split_premises([f.left, f.right]))
        elif isinstance(f, ForAll) and isinstance(f.body, And):
            out.extend(split_premises([ForAll(f.var, f.body.left), ForAll(f.var, f.body.right)]))
        else:
            out.append(f)
    return out


@dataclass
class Binding:
    preds: dict
    const: str | None = None
    var: str | None = None

    def copy(self) -> "Binding":
        return Binding(dict(self.preds), self.const, self.var)


def unify(pattern: Formula, f: Formula, b: Binding) -> Binding | None:
    """Match ``f`` against a schema pattern, extending a copy of ``b``.

    Placeholder predicates must bind injectively (no aliasing of p and q).
    """
    if type(pattern) is not type(f):
        return None
    if isinstance(pattern, Atom):
        if len(f.args) != 1:
            return None
        b = b.copy()
        bound = b.preds.get(pattern.pred)
        if bound is None:
            if f.pred in b.preds.values():
                return None
            b.preds[pattern.pred] = f.pred
        elif bound != f.pred:
            return None
        pt, ft = pattern.args[0], f.args[0]
        if isinstance(pt, Var):
            if not isinstance(ft, Var) or ft.name != b.var:
                return None
        else:
            if not isinstance(ft, Const):
                return None
            if b.const is None:
                b.const = ft.name
            elif b.const != ft.name:
                return None
        return b
    if isinstance(pattern, Not):
        return unify(pattern.body, f.body, b)
    if isinstance(pattern, (And, Or, Implies)):
        b2 = unify(pattern.left, f.left, b)
        return None if b2 is None else unify(pattern.right, f.right, b2)
    # quantifier: bind the pattern variable to the formula's variable name
    outer = b.var
    b2 = b.copy()
    b2.var = f.var
    b2 = unify(pattern.body, f.body, b2)
    if b2 is None:
        return None
    b2.var = outer
    return b2


def instantiate(pattern: Formula, b: Binding, var: str = VAR_SLOT) -> Formula:
    """Fill placeholders of a schema formula from a binding."""
    if isinstance(pattern, Atom):
        t = pattern.args[0]
        term = Var(var) if isinstance(t, Var) else Const(b.const)
        return Atom(b.preds[pattern.pred], (term,))
    if isinstance(pattern, Not):
        return Not(instantiate(pattern.body, b, var))
    if isinstance(pattern, (And, Or, Implies)):
        return type(pattern)(instantiate(pattern.left, b, var), instantiate(pattern.right, b, var))
    return type(pattern)(var, instantiate(pattern.body, b, var))


def _match_all(patterns: Sequence[Formula], premises: list[Formula], used: list[bool], b: Binding) -> Binding | None:
    if not patterns:
        return b
    head, rest = patterns[0], patterns[1:]
    for i, f in enumerate(premises):
        if used[i]:
            continue
        b2 = unify(head, f, b)
        if b2 is None:
            continue
        used[i] = True
        found = _match_all(rest, premises, used, b2)
        used[i] = False
        if found is not None:
            return found
    return None


def match_rule(rule: InferenceRule, premises: Sequence[Formula]) -> tuple[Binding, str | None]:
    """Bind the rule's schema to ``premises``; returns the binding and the premises' bound variable."""
    rule = InferenceRule(rule)
    for f in premises:
        validate(f)
    flat = split_premises(premises)
    schema = SCHEMAS[rule]
    if len(flat) != len(schema.premises):
        raise SchemaMismatch(f"{rule}: expected {len(schema.premises)} premises, got {len(flat)}")
    b = _match_all(schema.premises, flat, [False] * len(flat), Binding({}))
    if b is None:
        raise SchemaMismatch(f"{rule}: premises {flat!r} do not match {list(schema.premises)!r}")
    quantified = [f.var for f in flat if isinstance(f, (ForAll, Exists))]
    quantified += [f.body.var for f in flat if isinstance(f, Not) and isinstance(f.body, (ForAll, Exists))]
    return b, (quantified[0] if quantified else None)


def apply_rule(
    rule: InferenceRule | str,
    premises: Sequence[Formula],
    constant: str | None = None,
    var: str = VAR_SLOT,
) -> Formula:
    """Apply one inference rule to concrete premises and return its conclusion.

    ``constant`` names the individual for rules whose conclusion mentions a
    constant absent from the premises (HS, UI).  ``var`` names the variable
    introduced by existential generalization.

    >>> from qkprobe.logic.formula import parse
    >>> apply_rule("MP", [parse("forall x (imp (atom p x) (atom q x))"), parse("(atom p a)")])
    q(a)
    """
    rule = InferenceRule(rule)
    b, premise_var = match_rule(rule, premises)
    if b.const is None and CONST_SLOT in constants([SCHEMAS[rule].conclusion]):
        if constant is None:
            raise SchemaMismatch(f"{rule}: conclusion needs a constant; pass constant=")
        b.const = constant
    return instantiate(SCHEMAS[rule].conclusion, b, premise_var or var)
