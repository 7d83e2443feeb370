"""Derivability with minimal depth.

Depth is the height of the derivation: facts sit at depth 0 and a derived
formula sits one level above the deepest premise it needs.

Three routes cover the theories the generators emit:

* ``forward_chain`` for Horn theories (ground literals plus universal rules
  with a conjunction of positive atoms as antecedent).
* ``closure_depths`` for the richer literal fragment used by composed
  ontology chains: disjunctive antecedents, conjunctive consequents, reasoning
  by contradiction on single-literal rules and case analysis on ground
  disjunctions.
* ``rule_search`` which chains applications of the thirteen inference rules.

``proof_depth`` picks the narrowest route that accepts the theory.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Sequence

from qkprobe.errors import FragmentViolation, NotDerivable, SchemaMismatch
from qkprobe.logic.formula import (
    And,
    Atom,
    Const,
    ForAll,
    Formula,
    Implies,
    Not,
    Or,
    Var,
    constants,
    is_literal,
    negate,
    rename_bound,
    substitute,
    validate,
)
from qkprobe.logic.rules import SCHEMAS, Binding, InferenceRule, apply_rule, split_premises, unify


@dataclass(frozen=True)
class GroundRule:
    body: frozenset
    head: tuple


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _dnf_terms(f: Formula) -> list[list[Formula]] | None:
    """DNF of an and/or tree of literals; None when other connectives appear."""
    if is_literal(f):
        return [[f]]
    if isinstance(f, Or):
        left, right = _dnf_terms(f.left), _dnf_terms(f.right)
        return None if left is None or right is None else left + right
    if isinstance(f, And):
        left, right = _dnf_terms(f.left), _dnf_terms(f.right)
        if left is None or right is None:
            return None
        return [a + b for a in left for b in right]
    return None


def _is_ground_literal(f: Formula) -> bool:
    return is_literal(f) and isinstance((f.body if isinstance(f, Not) else f).args[0], Const)


def _horn_parts(f: Formula) -> tuple[list[Formula], list[Formula]] | None:
    """(body atoms, head literals) of a Horn rule over the bound variable, else None."""
    if not (isinstance(f, ForAll) and isinstance(f.body, Implies)):
        return None
    body = _conjuncts(f.body.left)
    head = _conjuncts(f.body.right)
    if not all(isinstance(b, Atom) and b.args[0] == Var(f.var) for b in body):
        return None
    for h in head:
        a = h.body if isinstance(h, Not) else h
        if not (is_literal(h) and a.args[0] == Var(f.var)):
            return None
    return body, head


def is_horn(theory: Sequence[Formula]) -> bool:
    return all(_is_ground_literal(f) or _horn_parts(f) is not None for f in theory)


def _ground_rules(rules, names) -> list[GroundRule]:
    out = []
    for var, body, head in rules:
        for c in names:
            out.append(
                GroundRule(
                    frozenset(substitute(b, var, c) for b in body),
                    tuple(substitute(h, var, c) for h in head),
                )
            )
    return out


def _saturate(facts: dict[Formula, int], rules: list[GroundRule], max_depth: int) -> dict[Formula, int]:
    """Least depths by an agenda ordered on depth (each rule fires once, when its last body literal settles)."""
    watchers: dict[Formula, list[int]] = {}
    for i, rule in enumerate(rules):
        for b in rule.body:
            watchers.setdefault(b, []).append(i)
    remaining = [len(rule.body) for rule in rules]
    best = dict(facts)
    heap = [(d, repr(f), f) for f, d in facts.items()]
    heapq.heapify(heap)
    settled: dict[Formula, int] = {}
    for i, rule in enumerate(rules):
        if not rule.body:
            for h in rule.head:
                if best.get(h, max_depth + 1) > 1 and 1 <= max_depth:
                    best[h] = 1
                    heapq.heappush(heap, (1, repr(h), h))
    while heap:
        d, _, f = heapq.heappop(heap)
        if f in settled or best.get(f) != d:
            continue
        settled[f] = d
        for i in watchers.get(f, ()):
            remaining[i] -= 1
            if remaining[i]:
                continue
            nd = d + 1
            if nd > max_depth:
                continue
            for h in rules[i].head:
                if h not in settled and nd < best.get(h, max_depth + 1):
                    best[h] = nd
                    heapq.heappush(heap, (nd, repr(h), h))
    return settled


def forward_chain(theory: Sequence[Formula], max_depth: int = 64) -> dict[Formula, int]:
    """Every derivable ground literal of a Horn theory with its minimal depth.

    Negative literals are treated as opaque facts: a rule ``p(x) -> ~q(x)``
    derives ``~q(a)`` from ``p(a)``, but nothing is derived by contraposition.
    """
    facts: dict[Formula, int] = {}
    rules = []
    for f in theory:
        validate(f)
        if _is_ground_literal(f):
            facts[f] = 0
            continue
        parts = _horn_parts(f)
        if parts is None:
            raise FragmentViolation(f"not a ground literal or Horn rule: {f!r}")
        rules.append((f.var, *parts))
    names = sorted(constants(theory))
    return _saturate(facts, _ground_rules(rules, names), max_depth)


# ---------------------------------------------------------------------------
# literal fragment with case analysis and contradiction

def _literal_parts(f: Formula):
    """Classify a member of the literal fragment; None when outside it."""
    if _is_ground_literal(f):
        return ("fact", f)
    terms = _dnf_terms(f)
    if terms is not None and all(all(_is_ground_literal(x) for x in t) for t in terms):
        if all(len(t) == 1 for t in terms):
            return ("cases", [t[0] for t in terms])
        return None
    if isinstance(f, ForAll) and isinstance(f.body, Implies):
        body = _dnf_terms(f.body.left)
        head = _conjuncts(f.body.right)
        if body is None or not all(is_literal(h) for h in head):
            return None
        return ("rule", f.var, body, head)
    return None


def in_literal_fragment(theory: Sequence[Formula]) -> bool:
    return all(_literal_parts(f) is not None for f in theory)


def closure_depths(theory: Sequence[Formula], max_depth: int = 64) -> dict[Formula, int]:
    """Minimal derivation depth of every ground literal in the literal fragment.

    Each rule application (including one that discharges a conjunctive or a
    disjunctive antecedent, or reasons by contradiction from a negated
    consequent) costs one level.  Case analysis over a ground disjunction
    derives a literal at the deepest level it reaches across the cases.
    """
    facts: dict[Formula, int] = {}
    cases: list[list[Formula]] = []
    rules = []
    for f in theory:
        validate(f)
        parts = _literal_parts(f)
        if parts is None:
            raise FragmentViolation(f"outside the literal fragment: {f!r}")
        if parts[0] == "fact":
            facts[f] = 0
        elif parts[0] == "cases":
            cases.append(parts[1])
        else:
            _, var, body_terms, head = parts
            for term in body_terms:
                rules.append((var, term, head))
                if len(term) == 1:
                    for h in head:
                        rules.append((var, [negate(h)], [negate(term[0])]))
    names = sorted(constants(theory))
    ground = _ground_rules(rules, names)
    extra: dict[Formula, int] = {}
    while True:
        base = {**facts}
        for f, d in extra.items():
            if d < base.get(f, max_depth + 1):
                base[f] = d
        derived = _saturate(base, ground, max_depth)
        changed = False
        for disj in cases:
            if any(lit in derived for lit in disj):
                continue
            branches = [_saturate({**derived, lit: 0}, ground, max_depth) for lit in disj]
            common = set(branches[0]).intersection(*branches[1:])
            for f in common:
                d = max(b[f] for b in branches)
                if 0 < d <= max_depth and d < derived.get(f, max_depth + 1) and d < extra.get(f, max_depth + 1):
                    extra[f] = d
                    changed = True
        if not changed:
            return derived


# ---------------------------------------------------------------------------
# chaining the thirteen rules

@dataclass
class DerivationTrace:
    """Derivation steps in dependency order; premise index i < n_axioms refers to the theory."""

    axioms: list
    steps: list = field(default_factory=list)  # (rule tag, premise indices, formula)

    @property
    def depth(self) -> int:
        depth: dict[int, int] = {i: 0 for i in range(len(self.axioms))}
        for k, (_, prem, _) in enumerate(self.steps):
            depth[len(self.axioms) + k] = 1 + max((depth[i] for i in prem), default=0)
        return depth[len(self.axioms) + len(self.steps) - 1] if self.steps else 0

    @property
    def conclusion(self) -> Formula | None:
        return self.steps[-1][2] if self.steps else None


def _norm(f: Formula) -> Formula:
    return rename_bound(f)


def _candidates(pattern: Formula, pool: list[Formula]) -> list[int]:
    return [i for i, f in enumerate(pool) if unify(pattern, f, Binding({})) is not None]


def rule_search(
    theory: Sequence[Formula],
    goals: Sequence[Formula],
    max_depth: int = 6,
    rules: Sequence[InferenceRule] = tuple(InferenceRule),
) -> DerivationTrace:
    """Breadth-first chaining of rule applications until one of ``goals`` appears.

    Raises NotDerivable when no goal appears within ``max_depth`` levels.
    """
    for f in theory:
        validate(f)
    pool = [_norm(f) for f in split_premises(list(theory))]
    uniq: list[Formula] = []
    for f in pool:
        if f not in uniq:
            uniq.append(f)
    pool = uniq
    names = sorted(constants([*theory, *goals]))
    goals_n = {_norm(g) for g in goals}
    origin: dict[int, tuple] = {}
    depth = {i: 0 for i in range(len(pool))}
    index = {f: i for i, f in enumerate(pool)}

    def trace_for(target: int) -> DerivationTrace:
        axioms = [f for i, f in enumerate(pool) if i not in origin]
        ax_index = {f: j for j, f in enumerate(axioms)}
        steps: list = []
        placed: dict[int, int] = {}

        def place(i: int) -> int:
            if i not in origin:
                return ax_index[pool[i]]
            if i in placed:
                return placed[i]
            rule, prem = origin[i]
            ids = [place(j) for j in prem]
            steps.append((rule, tuple(ids), pool[i]))
            placed[i] = len(axioms) + len(steps) - 1
            return placed[i]

        place(target)
        return DerivationTrace(axioms, steps)

    for f in pool:
        if f in goals_n:
            return trace_for(index[f])
    for level in range(1, max_depth + 1):
        frontier_start = len(pool)
        new: list[tuple[Formula, InferenceRule, tuple]] = []
        for rule in rules:
            schema = SCHEMAS[rule]
            cands = [_candidates(pat, pool) for pat in schema.premises]
            for combo in itertools.product(*cands):
                if len(set(combo)) != len(combo):
                    continue
                if max(depth[i] for i in combo) != level - 1:
                    continue
                premises = [pool[i] for i in combo]
                consts = [None] if rule not in (InferenceRule.HS, InferenceRule.UI) else names
                for c in consts:
                    try:
                        concl = apply_rule(rule, premises, constant=c)
                    except SchemaMismatch:
                        break
                    new.append((_norm(concl), rule, combo))
        for concl, rule, combo in new:
            if concl in index:
                continue
            index[concl] = len(pool)
            pool.append(concl)
            depth[index[concl]] = level
            origin[index[concl]] = (rule, combo)
        for i in range(frontier_start, len(pool)):
            if pool[i] in goals_n:
                return trace_for(i)
        if len(pool) == frontier_start:
            break
    raise NotDerivable(f"none of {list(goals)!r} derivable within {max_depth} rule applications")


# ---------------------------------------------------------------------------

def proof_depth(theory: Sequence[Formula], statement: Formula, max_depth: int = 8) -> int:
    """Minimal chained-rule count deriving ``statement`` or its negation.

    Literal statements go through forward chaining when the theory is Horn,
    then through the literal-fragment closure; anything else (or a literal
    neither route reaches) is searched with the thirteen rules.
    """
    validate(statement)
    targets = [statement, negate(statement)]
    if is_literal(statement):
        routes = []
        if is_horn(theory):
            routes.append(forward_chain)
        if in_literal_fragment(theory):
            routes.append(closure_depths)
        for route in routes:
            derived = route(theory, max_depth)
            found = [derived[t] for t in targets if t in derived]
            if found:
                return min(found)
    return rule_search(theory, targets, max_depth).depth
