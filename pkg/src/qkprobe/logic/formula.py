"""First-order formulas over unary predicates, plus the canonical prefix text form.

Formulas are immutable and hashable, so they can key dictionaries and sets.
The text form is a fully prefixed s-expression::

    forall x (imp (atom p x) (atom q x))

A term inside an ``atom`` is a variable when an enclosing quantifier binds its
name, otherwise it is a constant.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from qkprobe.errors import ArityError, FormulaError


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Const, Var]


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int = 1


class Formula:
    """Base class; supplies operator sugar (``~``, ``&``, ``|``, ``>>``)."""

    __slots__ = ()

    def __invert__(self) -> "Not":
        return Not(self)

    def __and__(self, other: "Formula") -> "And":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Or":
        return Or(self, other)

    def __rshift__(self, other: "Formula") -> "Implies":
        return Implies(self, other)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    pred: str
    args: tuple

    @property
    def term(self) -> Term:
        if len(self.args) != 1:
            raise ArityError(f"predicate {self.pred!r} used with arity {len(self.args)}")
        return self.args[0]

    def __repr__(self) -> str:
        return f"{self.pred}({', '.join(map(str, self.args))})"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    body: Formula

    def __repr__(self) -> str:
        return f"¬{self.body!r}"


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"({self.left!r} ∧ {self.right!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"({self.left!r} ∨ {self.right!r})"


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"({self.left!r} → {self.right!r})"


@dataclass(frozen=True, repr=False)
class ForAll(Formula):
    var: str
    body: Formula

    def __repr__(self) -> str:
        return f"∀{self.var}{self.body!r}"


@dataclass(frozen=True, repr=False)
class Exists(Formula):
    var: str
    body: Formula

    def __repr__(self) -> str:
        return f"∃{self.var}{self.body!r}"


BINARY = (And, Or, Implies)
QUANTIFIERS = (ForAll, Exists)


def atom(pred: str, term: Term | str) -> Atom:
    """``atom("p", "a")`` is p(a) with constant a; pass ``Var("x")`` for variables."""
    if isinstance(term, str):
        term = Const(term)
    return Atom(pred, (term,))


def forall(var: str, body: Formula) -> ForAll:
    return ForAll(var, body)


def exists(var: str, body: Formula) -> Exists:
    return Exists(var, body)


def negate(f: Formula) -> Formula:
    """Syntactic complement: strips one negation instead of stacking two."""
    return f.body if isinstance(f, Not) else Not(f)


def is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.body, Atom))


def is_ground(f: Formula) -> bool:
    return not any(isinstance(t, Var) for t in terms(f)) and not any(
        isinstance(g, QUANTIFIERS) for g in subformulas(f)
    )


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not) or isinstance(f, QUANTIFIERS):
        yield from subformulas(f.body)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


def atoms(f: Formula) -> Iterator[Atom]:
    for g in subformulas(f):
        if isinstance(g, Atom):
            yield g


def terms(f: Formula) -> Iterator[Term]:
    for a in atoms(f):
        yield from a.args


def predicates(fs) -> set[str]:
    if isinstance(fs, Formula):
        fs = [fs]
    return {a.pred for f in fs for a in atoms(f)}


def constants(fs) -> set[str]:
    if isinstance(fs, Formula):
        fs = [fs]
    return {t.name for f in fs for t in terms(f) if isinstance(t, Const)}


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {t.name for t in f.args if isinstance(t, Var)}
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, QUANTIFIERS):
        return free_vars(f.body) - {f.var}
    raise FormulaError(f"not a formula: {f!r}")


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return quantifier_depth(f.body)
    if isinstance(f, BINARY):
        return max(quantifier_depth(f.left), quantifier_depth(f.right))
    return 1 + quantifier_depth(f.body)


def validate(f: Formula, *, closed: bool = True) -> Formula:
    """Check the in-scope restrictions: unary atoms, one quantifier level, no free variables."""
    for a in atoms(f):
        if len(a.args) != 1:
            raise ArityError(f"predicate {a.pred!r} used with arity {len(a.args)}; only unary is supported")
    if quantifier_depth(f) > 1:
        raise FormulaError(f"nested quantifiers are not supported: {f!r}")
    if closed and free_vars(f):
        raise FormulaError(f"free variables {sorted(free_vars(f))} in {f!r}")
    return f


def substitute(f: Formula, var: str, const: str) -> Formula:
    """Replace free occurrences of ``var`` with the constant ``const``."""
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(Const(const) if t == Var(var) else t for t in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.body, var, const))
    if isinstance(f, BINARY):
        return type(f)(substitute(f.left, var, const), substitute(f.right, var, const))
    if f.var == var:
        return f
    return type(f)(f.var, substitute(f.body, var, const))


def rename_bound(f: Formula, new: str = "x") -> Formula:
    """Alpha-rename every bound variable to ``new`` (safe at quantifier depth <= 1)."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(rename_bound(f.body, new))
    if isinstance(f, BINARY):
        return type(f)(rename_bound(f.left, new), rename_bound(f.right, new))
    return type(f)(new, _rename_var(f.body, f.var, new))


def _rename_var(f: Formula, old: str, new: str) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(Var(new) if t == Var(old) else t for t in f.args))
    if isinstance(f, Not):
        return Not(_rename_var(f.body, old, new))
    if isinstance(f, BINARY):
        return type(f)(_rename_var(f.left, old, new), _rename_var(f.right, old, new))
    if f.var == old:
        return f
    return type(f)(f.var, _rename_var(f.body, old, new))


# ---------------------------------------------------------------------------
# canonical text form

_KEYWORDS = {Not: "not", And: "and", Or: "or", Implies: "imp"}
_BY_KEYWORD = {v: k for k, v in _KEYWORDS.items()}
_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        return "(atom " + " ".join([f.pred, *(t.name for t in f.args)]) + ")"
    if isinstance(f, Not):
        return f"(not {to_text(f.body)})"
    if isinstance(f, BINARY):
        return f"({_KEYWORDS[type(f)]} {to_text(f.left)} {to_text(f.right)})"
    kw = "forall" if isinstance(f, ForAll) else "exists"
    return f"{kw} {f.var} {to_text(f.body)}"


def parse(text: str) -> Formula:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise FormulaError("empty formula text")
    f, pos = _parse(tokens, 0, frozenset())
    if pos != len(tokens):
        raise FormulaError(f"trailing tokens after formula: {tokens[pos:]}")
    return f


def _parse(tokens: list[str], pos: int, bound: frozenset) -> tuple[Formula, int]:
    if pos >= len(tokens):
        raise FormulaError("unexpected end of formula text")
    tok = tokens[pos]
    if tok in ("forall", "exists"):
        if pos + 1 >= len(tokens) or tokens[pos + 1] in "()":
            raise FormulaError(f"quantifier {tok!r} without a variable")
        var = tokens[pos + 1]
        body, pos = _parse(tokens, pos + 2, bound | {var})
        return (ForAll if tok == "forall" else Exists)(var, body), pos
    if tok != "(":
        raise FormulaError(f"expected '(' or quantifier, got {tok!r}")
    if pos + 1 >= len(tokens):
        raise FormulaError("unexpected end of formula text")
    head = tokens[pos + 1]
    pos += 2
    if head == "atom":
        names = []
        while pos < len(tokens) and tokens[pos] not in "()":
            names.append(tokens[pos])
            pos += 1
        if len(names) < 2:
            raise FormulaError("atom needs a predicate and at least one term")
        pred, args = names[0], tuple(Var(n) if n in bound else Const(n) for n in names[1:])
        f: Formula = Atom(pred, args)
    elif head == "not":
        body, pos = _parse(tokens, pos, bound)
        f = Not(body)
    elif head in _BY_KEYWORD:
        left, pos = _parse(tokens, pos, bound)
        right, pos = _parse(tokens, pos, bound)
        f = _BY_KEYWORD[head](left, right)
    else:
        raise FormulaError(f"unknown connective {head!r}")
    if pos >= len(tokens) or tokens[pos] != ")":
        raise FormulaError(f"missing ')' after {head!r}")
    return f, pos + 1
