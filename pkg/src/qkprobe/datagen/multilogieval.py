"""Yes/no questions built by chaining first-order inference rules.

A scheme such as ``("MT", "DS")`` is instantiated step by step: the first rule
gets fresh activity predicates and a person's name, and every later rule
consumes the previous conclusion through one of its premise slots while its
other premises join the context.  The "yes" question asks about the final
conclusion, the "no" question about its negation.
"""
from __future__ import annotations

import random
from typing import Sequence

from qkprobe.datagen import lexicon
from qkprobe.datagen.certify import certify
from qkprobe.datagen.sample import DatasetSplit, GenConfig, LogicSample, Premise
from qkprobe.datagen.split import split_calibration_eval
from qkprobe.errors import CertificationError, SchemaMismatch
from qkprobe.logic.formula import And, Atom, Const, Exists, ForAll, Formula, Implies, Not, Or, negate
from qkprobe.logic.rules import PRED_SLOTS, SCHEMAS, Binding, InferenceRule, instantiate, unify

SCHEMES: dict[int, list[tuple[str, ...]]] = {
    1: [(r.value,) for r in InferenceRule],
    2: [("MP", "MP"), ("MT", "MT"), ("UI", "MP"), ("MP", "EG"), ("MT", "DS"), ("CT", "DS"), ("DS", "MP")],
    3: [
        ("MP", "MP", "MP"), ("UI", "MP", "MP"), ("MT", "MT", "MT"), ("MT", "MT", "DS"), ("CT", "DS", "MP"),
        ("DS", "MP", "MP"), ("MP", "MP", "EG"), ("MT", "DS", "MP"), ("DS", "MP", "EG"),
    ],
    4: [
        ("MP", "MP", "MP", "MP"), ("UI", "MP", "MP", "MP"), ("MT", "MT", "MT", "DS"), ("CT", "DS", "MP", "MP"),
        ("DS", "MP", "MP", "EG"), ("MT", "DS", "MP", "MP"), ("MT", "MT", "DS", "MP"),
    ],
}

N_STYLES = 4
_MAX_ATTEMPTS = 50


def scheme_name(scheme: Sequence[str]) -> str:
    return "_".join(scheme)


def parse_scheme(name: str) -> tuple[str, ...]:
    parts = tuple(name.split("_"))
    for p in parts:
        InferenceRule(p)
    return parts


# ---------------------------------------------------------------------------
# chain instantiation

def instantiate_scheme(
    scheme: Sequence[str], person: str, activities: list[str]
) -> tuple[list[Formula], Formula]:
    """Context premises and final conclusion for a rule chain.

    ``activities`` is consumed from the end as fresh predicates are needed.
    """
    context: list[Formula] = []
    prev: Formula | None = None
    for step, rule in enumerate(scheme):
        schema = SCHEMAS[InferenceRule(rule)]
        b = Binding({})
        linked = None
        if prev is not None:
            for i, pat in enumerate(schema.premises):
                got = unify(pat, prev, b)
                if got is not None:
                    b, linked = got, i
                    break
            if linked is None:
                raise SchemaMismatch(f"step {step} ({rule}) cannot consume {prev!r}")
        for slot in PRED_SLOTS:
            if slot not in b.preds and _mentions(schema, slot):
                b.preds[slot] = activities.pop()
        if b.const is None:
            b.const = person
        for i, pat in enumerate(schema.premises):
            if i != linked:
                context.append(instantiate(pat, b))
        prev = instantiate(schema.conclusion, b)
    return context, prev


def _mentions(schema, slot: str) -> bool:
    from qkprobe.logic.formula import predicates

    return slot in predicates([*schema.premises, schema.conclusion])


# ---------------------------------------------------------------------------
# English rendering

def _verb(pred: str, third: bool, negated: bool = False) -> str:
    base, third_form = lexicon.ACTIVITY_FORMS[pred]
    if negated:
        return f"{'does' if third else 'do'} not {base}"
    return third_form if third else base


def _clause(lit: Formula, third: bool = True) -> str:
    """Verb phrase for a literal whose subject is supplied by the caller."""
    if isinstance(lit, Not):
        return _verb(lit.body.pred, third, negated=True)
    return _verb(lit.pred, third)


def _name(lit: Formula) -> str:
    a = lit.body if isinstance(lit, Not) else lit
    return a.args[0].name


def _conj(f: Formula, third: bool) -> str:
    if isinstance(f, And):
        return f"{_conj(f.left, third)} and {_conj(f.right, third)}"
    return _clause(f, third)


def sentence(f: Formula, style: int = 0) -> str:
    """Render one formula as an English sentence (no final punctuation)."""
    if isinstance(f, (Atom,)) or (isinstance(f, Not) and isinstance(f.body, Atom)):
        return f"{_name(f)} {_clause(f)}"
    if isinstance(f, Or) and not isinstance(f.left, (ForAll, Exists)):
        return f"{_name(f.left)} {_clause(f.left)} or {_clause(f.right)}"
    if isinstance(f, Implies):
        return f"if {_name(f.left)} {_clause(f.left)}, then {_name(f.right)} {_clause(f.right)}"
    if isinstance(f, Exists):
        body = f.body
        if isinstance(body, Or):
            return f"someone either {_clause(body.left)} or {_clause(body.right)}"
        return f"someone {_clause(body)}"
    if isinstance(f, Not) and isinstance(f.body, ForAll) and isinstance(f.body.body, (And, Atom)):
        body = f.body.body
        if isinstance(body, And):
            return f"not everyone both {_clause(body.left)} and {_clause(body.right)}"
        return f"not everyone {_clause(body)}"
    if isinstance(f, Not) and isinstance(f.body, Exists):
        body = f.body.body
        if isinstance(body, Or):
            return f"no one either {_clause(body.left)} or {_clause(body.right)}"
        return f"no one {_clause(body)}"
    if isinstance(f, Not):
        return f"it is not the case that {sentence(f.body, style)}"
    assert isinstance(f, ForAll)
    body = f.body
    if isinstance(body, Or):
        return f"everyone either {_clause(body.left)} or {_clause(body.right)}"
    if not isinstance(body, Implies):
        return f"everyone {_clause(body)}"
    ante, cons = body.left, body.right
    if isinstance(cons, Implies):
        return (f"if a person {_clause(ante)}, then if they {_clause(cons.left, False)}, "
                f"they {_clause(cons.right, False)}")
    a3, c3, cb = _conj(ante, True), _conj(cons, True), _conj(cons, False)
    a_base = _conj(ante, False)
    if style == 0:
        return f"if a person {a3}, they {cb}"
    if style == 1:
        return f"anyone who {a3} {c3}"
    if style == 2:
        return f"whenever someone {a3}, they {cb}"
    return f"people who {a_base} {cb}"


def _cap(text: str) -> str:
    return text[0].upper() + text[1:]


def render_premise(f: Formula, style: int = 0) -> str:
    return _cap(sentence(f, style)) + "."


def render_question(f: Formula) -> str:
    if isinstance(f, Atom):
        base, _ = lexicon.ACTIVITY_FORMS[f.pred]
        return f"Does {_name(f)} {base}?"
    if isinstance(f, Exists) and isinstance(f.body, Atom):
        base, _ = lexicon.ACTIVITY_FORMS[f.body.pred]
        return f"Does anyone {base}?"
    return f"Is it true that {sentence(f)}?"


# ---------------------------------------------------------------------------
# generation

def build_sample(rng: random.Random, scheme: Sequence[str], gold: int, sample_id: str, style: int) -> LogicSample:
    acts = [lexicon.activity_id(b) for b, _ in lexicon.MLE_ACTIVITIES]
    rng.shuffle(acts)
    person = rng.choice(lexicon.MLE_NAMES)
    context, conclusion = instantiate_scheme(scheme, person, acts)
    rng.shuffle(context)
    statement = conclusion if gold == 0 else negate(conclusion)
    return LogicSample(
        id=sample_id,
        family="mle",
        context=tuple(Premise(render_premise(f, style), f) for f in context),
        statement=Premise(render_question(statement), statement),
        gold=gold,
        polarity="negative" if isinstance(statement, Not) else "positive",
        depth=len(scheme),
        rule_tags=tuple(scheme),
        meta={"scheme": scheme_name(scheme), "entity": person, "style": style},
    )


def schemes_for(config: GenConfig) -> list[tuple[str, ...]]:
    if config.schemes:
        return [parse_scheme(s) if isinstance(s, str) else tuple(s) for s in config.schemes]
    out = []
    for d in range(config.hops[0], config.hops[1] + 1):
        if d not in SCHEMES:
            raise ValueError(f"no schemes of depth {d}; available depths {sorted(SCHEMES)}")
        out.extend(SCHEMES[d])
    return out


def gen_multilogieval(config: GenConfig) -> DatasetSplit:
    if config.family != "mle":
        raise ValueError(f"gen_multilogieval needs family 'mle', got {config.family!r}")
    schemes = schemes_for(config)
    per_scheme, leftover = divmod(config.total, len(schemes))
    if leftover or per_scheme % 2:
        raise ValueError(
            f"{config.total} samples cannot be shared evenly and 50/50 across {len(schemes)} schemes"
        )
    rng = random.Random(config.seed)
    setup = config.setup_name()
    samples = []
    for si, scheme in enumerate(schemes):
        for j in range(per_scheme):
            sid = f"{setup}-{scheme_name(scheme)}-{j:04d}"
            for _ in range(_MAX_ATTEMPTS):
                s = build_sample(rng, scheme, j % 2, sid, (si + j) % N_STYLES)
                try:
                    certify(s)
                except CertificationError:
                    continue
                break
            else:
                raise CertificationError(f"scheme {scheme_name(scheme)} does not certify")
            samples.append(s)
    split = split_calibration_eval(samples, config.n_calibration, config.seed)
    split.manifest["config"] = config.to_dict()
    return split
