"""Fictional-ontology true/false questions in the style of ProntoQA-OOD.

A sample is a chain of category memberships leading from a fact about one
entity to a target literal.  In ``mp_only`` mode every hop is a universal
implication ("Every wumpus is a jompus.").  In ``composed`` mode each hop uses
one of six deduction steps: modus ponens, conjunction introduction and
elimination, disjunction introduction and elimination (case analysis), and
proof by contradiction.
"""
from __future__ import annotations

import dataclasses
import random
from typing import Sequence

from qkprobe.datagen import lexicon
from qkprobe.datagen.certify import certify
from qkprobe.datagen.sample import DatasetSplit, GenConfig, LogicSample, Premise
from qkprobe.datagen.split import split_calibration_eval
from qkprobe.errors import CertificationError, ExhaustedOntology
from qkprobe.logic.formula import And, Atom, Const, ForAll, Formula, Implies, Not, Or, Var, negate

HOP_TYPES = ("MP", "AndIntro", "AndElim", "OrIntro", "OrElim", "Contradiction")
_MAX_ATTEMPTS = 200


# ---------------------------------------------------------------------------
# rendering

def _phrase(lit: Formula, kinds: dict, plural: bool = False) -> str:
    neg = isinstance(lit, Not)
    a = lit.body if neg else lit
    if kinds.get(a.pred) == "category":
        word = lexicon.plural(a.pred) if plural else f"{lexicon.article(a.pred)} {a.pred}"
    else:
        word = a.pred
    return f"not {word}" if neg else word


def _conj(f: Formula) -> list[Formula]:
    return _conj(f.left) + _conj(f.right) if isinstance(f, And) else [f]


def render(f: Formula, kinds: dict, style: int = 0) -> str:
    """One English sentence for a context formula or statement."""
    if isinstance(f, (Atom, Not)):
        a = f.body if isinstance(f, Not) else f
        return f"{a.args[0].name} is {_phrase(f, kinds)}."
    if isinstance(f, Or):
        left, right = f.left, f.right
        return f"{left.args[0].name} is {_phrase(left, kinds)} or {_phrase(right, kinds)}."
    assert isinstance(f, ForAll) and isinstance(f.body, Implies)
    body, head = f.body.left, f.body.right
    heads = " and ".join(_phrase(h, kinds) for h in _conj(head))
    if isinstance(body, Or):
        return f"Everything that is {_phrase(body.left, kinds)} or {_phrase(body.right, kinds)} is {heads}."
    if isinstance(body, And):
        first, *rest = _conj(body)
        extra = " and ".join(_phrase(b, kinds) for b in rest)
        return f"Every {first.pred} that is {extra} is {heads}."
    subj = body.pred
    if style == 1:
        return f"Each {subj} is {heads}."
    if style == 2 and not isinstance(head, And):
        return f"{lexicon.plural(subj).capitalize()} are {_phrase(head, kinds, plural=True)}."
    return f"Every {subj} is {heads}."


# ---------------------------------------------------------------------------
# chain construction

def _x(pred: str) -> Atom:
    return Atom(pred, (Var("x"),))


def _c(pred: str, name: str) -> Atom:
    return Atom(pred, (Const(name),))


def _plan(k: int, mode: str, rng: random.Random) -> list[str]:
    if mode == "mp_only":
        return ["MP"] * k
    plan = []
    for j in range(k):
        options = ["MP", "AndIntro", "AndElim", "OrIntro"]
        if j == 0:
            options.append("OrElim")
        if j == k - 1:
            options.append("Contradiction")
        plan.append(rng.choice(options))
    return plan


def _needs(plan: Sequence[str]) -> tuple[int, int]:
    """(fresh categories, fresh attributes) required by a hop plan."""
    k = len(plan)
    cats = k + sum(t in ("OrIntro", "OrElim", "Contradiction") for t in plan)
    attrs = (k - 1) + sum(t in ("AndIntro", "AndElim") for t in plan) + (plan[-1] != "Contradiction")
    return cats, attrs


def build_chain(
    rng: random.Random,
    hops: int,
    mode: str,
    form: str,
    *,
    pool: Sequence[str] | None = None,
    sample_id: str = "pronto",
) -> LogicSample:
    """One certified-shape sample (not yet oracle-checked) with a ``hops``-step chain."""
    pool = list(pool) if pool is not None else lexicon.pseudowords()
    plan = _plan(hops, mode, rng)
    n_cats, n_attrs = _needs(plan)
    if n_cats > len(pool):
        raise ExhaustedOntology(f"{n_cats} categories needed for {hops} hops, lexicon has {len(pool)}")
    if n_attrs > len(lexicon.PRONTO_ATTRIBUTES):
        raise ExhaustedOntology("attribute lexicon too small")
    cats = rng.sample(pool, n_cats)
    attrs = rng.sample(lexicon.PRONTO_ATTRIBUTES, n_attrs)
    name = rng.choice(lexicon.PRONTO_NAMES)
    kinds = {c: "category" for c in cats} | {a: "attribute" for a in attrs}

    chain, extra_cats = cats[:hops], cats[hops:]
    side_attrs, extra_attrs = attrs[: hops - 1], attrs[hops - 1:]
    premises: list[Formula] = []

    if plan[-1] == "Contradiction":
        target = Not(_c(extra_cats.pop(), name))
        last_node = None
    else:
        target_attr = extra_attrs.pop()
        positive = rng.random() < 0.5
        last_node = _x(target_attr) if positive else Not(_x(target_attr))
        target = _c(target_attr, name) if positive else Not(_c(target_attr, name))

    if plan[0] != "OrElim":
        premises.append(_c(chain[0], name))
    for j, kind in enumerate(plan):
        src = _x(chain[j])
        dst = _x(chain[j + 1]) if j + 1 < hops else last_node
        if kind == "MP":
            premises.append(ForAll("x", Implies(src, dst)))
        elif kind == "AndIntro":
            b = extra_attrs.pop()
            premises.append(_c(b, name))
            premises.append(ForAll("x", Implies(And(src, _x(b)), dst)))
        elif kind == "AndElim":
            b = extra_attrs.pop()
            premises.append(ForAll("x", Implies(src, And(dst, _x(b)))))
        elif kind == "OrIntro":
            d = extra_cats.pop()
            premises.append(ForAll("x", Implies(Or(src, _x(d)), dst)))
        elif kind == "OrElim":
            d = extra_cats.pop()
            premises.append(Or(_c(chain[0], name), _c(d, name)))
            premises.append(ForAll("x", Implies(src, dst)))
            premises.append(ForAll("x", Implies(_x(d), dst)))
        else:  # Contradiction
            z = target.body.pred
            premises.append(ForAll("x", Implies(_x(z), Not(src))))
    for j, attr in enumerate(side_attrs):
        head = _x(attr) if rng.random() < 0.5 else Not(_x(attr))
        premises.append(ForAll("x", Implies(_x(chain[j]), head)))
    rng.shuffle(premises)

    target_atom = target.body if isinstance(target, Not) else target
    statement = target_atom if form == "positive" else Not(target_atom)
    gold = 0 if statement == target else 1
    context = tuple(Premise(render(f, kinds, rng.randrange(3)), f) for f in premises)
    return LogicSample(
        id=sample_id,
        family="pronto",
        context=context,
        statement=Premise(render(statement, kinds), statement),
        gold=gold,
        polarity=form,
        depth=hops,
        distractors=0,
        rule_tags=("MP",) if mode == "mp_only" else tuple(plan),
        meta={"entity": name, "kinds": kinds, "rule_mode": mode},
    )


def _counterpart_id(sample_id: str) -> str:
    return sample_id[:-2] if sample_id.endswith("-n") else sample_id + "-n"


def negation_counterpart(sample: LogicSample) -> LogicSample:
    """Same context, negated statement, flipped gold; the two ids point at each other."""
    if sample.family != "pronto":
        raise ValueError("negation counterparts are defined for pronto samples only")
    stmt = negate(sample.statement.formula)
    kinds = sample.meta.get("kinds", {})
    return dataclasses.replace(
        sample,
        id=_counterpart_id(sample.id),
        statement=Premise(render(stmt, kinds), stmt),
        gold=1 - sample.gold,
        polarity="negative" if sample.polarity == "positive" else "positive",
        counterpart_id=sample.id,
        meta={**sample.meta},
    )


def add_distractors(
    sample: LogicSample,
    k: int,
    seed: int,
    *,
    pool: Sequence[str] | None = None,
) -> LogicSample:
    """Insert ``k`` rules about categories absent from the sample, at seeded positions.

    Each distractor has a fresh category as its antecedent, so no model of the
    original context is lost and the statement's verdict cannot change.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if sample.family != "pronto":
        raise ValueError("distractors are defined for pronto samples only")
    if k == 0:
        return sample
    rng = random.Random(seed)
    pool = list(pool) if pool is not None else lexicon.pseudowords()
    kinds = dict(sample.meta.get("kinds", {}))
    used = set(kinds) | {a.pred for f in [*sample.theory, sample.statement.formula] for a in _atoms(f)}
    fresh = [c for c in pool if c not in used]
    if len(fresh) < k:
        raise ExhaustedOntology(f"need {k} unused categories, only {len(fresh)} left")
    subjects = rng.sample(fresh, k)
    targets = [w for w in [*pool, *lexicon.PRONTO_ATTRIBUTES] if w not in subjects]
    context = list(sample.context)
    for subj in subjects:
        obj = rng.choice(targets)
        kinds[subj] = "category"
        kinds.setdefault(obj, "category" if obj in pool else "attribute")
        head = _x(obj) if rng.random() < 0.5 else Not(_x(obj))
        f = ForAll("x", Implies(_x(subj), head))
        context.insert(rng.randint(0, len(context)), Premise(render(f, kinds, rng.randrange(3)), f))
    return dataclasses.replace(
        sample,
        context=tuple(context),
        distractors=sample.distractors + k,
        meta={**sample.meta, "kinds": kinds},
    )


def _atoms(f: Formula):
    from qkprobe.logic.formula import atoms

    return atoms(f)


def gen_prontoqa(config: GenConfig) -> DatasetSplit:
    if config.family != "pronto":
        raise ValueError(f"gen_prontoqa needs family 'pronto', got {config.family!r}")
    if config.rule_mode not in ("mp_only", "composed"):
        raise ValueError(f"rule_mode must be mp_only or composed, got {config.rule_mode!r}")
    if config.total % 2:
        raise ValueError("pronto sets are built from counterpart pairs; total size must be even")
    rng = random.Random(config.seed)
    pool = lexicon.pseudowords(config.category_count)
    setup = config.setup_name()
    hop_values = list(range(config.hops[0], config.hops[1] + 1))
    samples: list[LogicSample] = []
    for i in range(config.total // 2):
        hops = hop_values[i % len(hop_values)]
        k = rng.randint(*config.distractors)
        form = "positive" if i % 2 == 0 else "negative"
        for _ in range(_MAX_ATTEMPTS):
            base = build_chain(rng, hops, config.rule_mode, form, pool=pool, sample_id=f"{setup}-{i:05d}")
            base = add_distractors(base, k, rng.getrandbits(32), pool=pool)
            twin = negation_counterpart(base)
            base = dataclasses.replace(base, counterpart_id=twin.id)
            try:
                certify(base)
                certify(twin)
            except CertificationError:
                continue
            break
        else:
            raise CertificationError(f"could not build a certified {hops}-hop sample")
        samples.extend([base, twin])
    split = split_calibration_eval(samples, config.n_calibration, config.seed)
    split.manifest["config"] = config.to_dict()
    return split
