"""Finite-domain entailment checking.

A theory entails a query over domain size ``n`` when the query is true in every
interpretation with exactly ``n`` individuals that satisfies the theory.
Constants may denote the same individual; interpretations are enumerated up to
renaming of individuals, so only the partition of the constants matters.

Two decision routes are provided.  ``method="search"`` grounds everything into
clauses and runs a complete DPLL search, which explores the same assignment
space as a truth table but prunes it.  ``method="enumerate"`` walks every
truth assignment to the ground atoms and evaluates the formulas directly.
"""
from __future__ import annotations

import enum
import itertools
from typing import Iterator, Sequence

from qkprobe.errors import DomainTooLarge
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
    constants,
    predicates,
    validate,
)

DEFAULT_BUDGET = 2**24
MAX_DOMAIN = 6


class Verdict(str, enum.Enum):
    ENTAILED = "Entailed"
    NOT_ENTAILED = "NotEntailed"
    UNDETERMINED = "Undetermined"

    def __str__(self) -> str:
        return self.value


def constant_partitions(names: Sequence[str], max_blocks: int) -> Iterator[dict[str, int]]:
    """Maps constant -> individual, one per partition of ``names`` into <= max_blocks blocks."""
    names = list(names)

    def grow(i: int, acc: list[int], nblocks: int):
        if i == len(names):
            yield dict(zip(names, acc))
            return
        for blk in range(min(nblocks + 1, max_blocks)):
            acc.append(blk)
            yield from grow(i + 1, acc, max(nblocks, blk + 1))
            acc.pop()

    yield from grow(0, [], 0)


# ---------------------------------------------------------------------------
# grounding into clauses

class _Grounder:
    def __init__(self, cmap: dict[str, int], domain: int):
        self.cmap = cmap
        self.domain = domain
        self.ids: dict[tuple[str, int], int] = {}
        self.nvars = 0
        self.clauses: list[list[int]] = []

    def atom_id(self, pred: str, elem: int) -> int:
        key = (pred, elem)
        if key not in self.ids:
            self.nvars += 1
            self.ids[key] = self.nvars
        return self.ids[key]

    def fresh(self) -> int:
        self.nvars += 1
        return self.nvars

    def nnf(self, f: Formula, env: dict[str, int], pos: bool = True):
        """Ground, negation-normal tree: ('lit', int) | ('and', [...]) | ('or', [...])."""
        if isinstance(f, Atom):
            t = f.args[0]
            elem = self.cmap[t.name] if isinstance(t, Const) else env[t.name]
            v = self.atom_id(f.pred, elem)
            return ("lit", v if pos else -v)
        if isinstance(f, Not):
            return self.nnf(f.body, env, not pos)
        if isinstance(f, (And, Or)):
            kind = "and" if isinstance(f, And) == pos else "or"
            return (kind, [self.nnf(f.left, env, pos), self.nnf(f.right, env, pos)])
        if isinstance(f, Implies):
            kind = "or" if pos else "and"
            return (kind, [self.nnf(f.left, env, not pos), self.nnf(f.right, env, pos)])
        kind = "and" if isinstance(f, ForAll) == pos else "or"
        kids = [self.nnf(f.body, {**env, f.var: e}, pos) for e in range(self.domain)]
        return (kind, kids)

    def assert_node(self, node) -> None:
        kind, payload = node
        if kind == "lit":
            self.clauses.append([payload])
        elif kind == "and":
            for child in payload:
                self.assert_node(child)
        else:
            self.clauses.append(self._disjuncts(node))

    def _disjuncts(self, node) -> list[int]:
        kind, payload = node
        if kind == "lit":
            return [payload]
        if kind == "or":
            return [lit for child in payload for lit in self._disjuncts(child)]
        # a conjunction inside a disjunction gets a one-directional definition
        aux = self.fresh()
        for child in payload:
            self.clauses.append([-aux] + self._disjuncts(child))
        return [aux]

    def add(self, f: Formula, pos: bool = True) -> None:
        self.assert_node(self.nnf(f, {}, pos))


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise DomainTooLarge(f"search exceeded the budget of {self.limit} assignments")


def satisfiable(clauses: list[list[int]], nvars: int, budget: _Budget | None = None) -> bool:
    """Complete DPLL search with unit propagation."""
    if any(not c for c in clauses):
        return False
    budget = budget or _Budget(DEFAULT_BUDGET)
    assign = [0] * (nvars + 1)
    trail: list[int] = []
    occurs: list[list[int]] = [[] for _ in range(nvars + 1)]
    for ci, c in enumerate(clauses):
        for lit in c:
            occurs[abs(lit)].append(ci)

    def value(lit: int) -> int:
        a = assign[abs(lit)]
        return a if lit > 0 else -a

    def set_lit(lit: int) -> None:
        assign[abs(lit)] = 1 if lit > 0 else -1
        trail.append(abs(lit))

    def propagate(queue: list[int]) -> bool:
        while queue:
            v = queue.pop()
            for ci in occurs[v]:
                unassigned = None
                n_unassigned = 0
                sat = False
                for lit in clauses[ci]:
                    val = value(lit)
                    if val == 1:
                        sat = True
                        break
                    if val == 0:
                        n_unassigned += 1
                        unassigned = lit
                if sat:
                    continue
                if n_unassigned == 0:
                    return False
                if n_unassigned == 1:
                    set_lit(unassigned)
                    queue.append(abs(unassigned))
        return True

    def undo(mark: int) -> None:
        while len(trail) > mark:
            assign[trail.pop()] = 0

    # initial units
    queue = []
    for c in clauses:
        if len(c) == 1:
            lit = c[0]
            if value(lit) == -1:
                return False
            if value(lit) == 0:
                set_lit(lit)
                queue.append(abs(lit))
    if not propagate(queue):
        return False

    def pick() -> int:
        for c in clauses:
            if any(value(lit) == 1 for lit in c):
                continue
            for lit in c:
                if value(lit) == 0:
                    return abs(lit)
        return 0

    def solve() -> bool:
        v = pick()
        if v == 0:
            return True
        for lit in (-v, v):
            budget.spend()
            mark = len(trail)
            set_lit(lit)
            if propagate([v]) and solve():
                return True
            undo(mark)
        return False

    return solve()


# ---------------------------------------------------------------------------
# direct evaluation (enumeration route)

def evaluate(f: Formula, truth: dict[tuple[str, int], bool], cmap: dict[str, int], domain: int, env=None) -> bool:
    env = env or {}
    if isinstance(f, Atom):
        t = f.args[0]
        elem = cmap[t.name] if isinstance(t, Const) else env[t.name]
        return truth[(f.pred, elem)]
    if isinstance(f, Not):
        return not evaluate(f.body, truth, cmap, domain, env)
    if isinstance(f, And):
        return evaluate(f.left, truth, cmap, domain, env) and evaluate(f.right, truth, cmap, domain, env)
    if isinstance(f, Or):
        return evaluate(f.left, truth, cmap, domain, env) or evaluate(f.right, truth, cmap, domain, env)
    if isinstance(f, Implies):
        return (not evaluate(f.left, truth, cmap, domain, env)) or evaluate(f.right, truth, cmap, domain, env)
    results = (evaluate(f.body, truth, cmap, domain, {**env, f.var: e}) for e in range(domain))
    return all(results) if isinstance(f, ForAll) else any(results)


def _enumerate(theory, query, domain_size, budget) -> Verdict:
    preds = sorted(predicates([*theory, query]))
    consts = sorted(constants([*theory, query]))
    partitions = list(constant_partitions(consts, domain_size))
    keys = [(pr, e) for pr in preds for e in range(domain_size)]
    total = len(partitions) * 2 ** len(keys)
    if total > budget:
        raise DomainTooLarge(f"{total} assignments exceed the budget of {budget}")
    query_always, neg_always = True, True
    for cmap in partitions:
        for bits in itertools.product((False, True), repeat=len(keys)):
            truth = dict(zip(keys, bits))
            if not all(evaluate(f, truth, cmap, domain_size) for f in theory):
                continue
            if evaluate(query, truth, cmap, domain_size):
                neg_always = False
            else:
                query_always = False
            if not query_always and not neg_always:
                return Verdict.UNDETERMINED
    if query_always:
        return Verdict.ENTAILED
    return Verdict.NOT_ENTAILED


def _search(theory, query, domain_size, budget) -> Verdict:
    consts = sorted(constants([*theory, query]))
    spend = _Budget(budget)
    query_always, neg_always = True, True
    for cmap in constant_partitions(consts, domain_size):
        g = _Grounder(cmap, domain_size)
        for f in theory:
            g.add(f)
        base = list(g.clauses)
        if query_always:
            g.add(query, pos=False)
            if satisfiable(g.clauses, g.nvars, spend):
                query_always = False
            g.clauses = list(base)
        if neg_always:
            g.add(query, pos=True)
            if satisfiable(g.clauses, g.nvars, spend):
                neg_always = False
        if not query_always and not neg_always:
            return Verdict.UNDETERMINED
    if query_always:
        return Verdict.ENTAILED
    return Verdict.NOT_ENTAILED


def consistent(theory: Sequence[Formula], domain_size: int = 3, *, budget: int = DEFAULT_BUDGET) -> bool:
    """True when the theory has at least one model over ``domain_size`` individuals."""
    theory = [validate(f) for f in theory]
    spend = _Budget(budget)
    for cmap in constant_partitions(sorted(constants(theory)), domain_size):
        g = _Grounder(cmap, domain_size)
        for f in theory:
            g.add(f)
        if satisfiable(g.clauses, g.nvars, spend):
            return True
    return False


def entails(
    theory: Sequence[Formula],
    query: Formula,
    domain_size: int = 3,
    *,
    method: str = "search",
    budget: int = DEFAULT_BUDGET,
) -> Verdict:
    """Decide whether ``theory`` fixes the truth value of ``query``.

    Returns ENTAILED if the query holds in every model of the theory over
    ``domain_size`` individuals, NOT_ENTAILED if its negation does, and
    UNDETERMINED otherwise.  An inconsistent theory entails everything and
    yields ENTAILED.
    """
    if not 1 <= domain_size <= MAX_DOMAIN:
        raise ValueError(f"domain_size must be in 1..{MAX_DOMAIN}, got {domain_size}")
    theory = [validate(f) for f in theory]
    validate(query)
    if method == "search":
        return _search(theory, query, domain_size, budget)
    if method == "enumerate":
        return _enumerate(theory, query, domain_size, budget)
    raise ValueError(f"unknown method {method!r}")
