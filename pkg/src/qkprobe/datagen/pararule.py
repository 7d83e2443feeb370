"""People-and-attributes worlds with fixed-depth true/false statements."""
from __future__ import annotations

import random

from qkprobe.datagen import lexicon
from qkprobe.datagen.certify import certify
from qkprobe.datagen.sample import DatasetSplit, GenConfig, LogicSample, Premise
from qkprobe.datagen.split import split_calibration_eval
from qkprobe.errors import CertificationError, ExhaustedOntology
from qkprobe.logic.chaining import forward_chain
from qkprobe.logic.formula import And, Atom, Const, ForAll, Formula, Implies, Not, Var

N_PEOPLE = 4
_MAX_ATTEMPTS = 100


def _x(attr: str) -> Atom:
    return Atom(attr, (Var("x"),))


def _lit(attr: str, positive: bool) -> Formula:
    return _x(attr) if positive else Not(_x(attr))


def render(f: Formula, style: int = 0) -> str:
    if isinstance(f, Atom):
        return f"{f.args[0].name} is {f.pred}."
    if isinstance(f, Not):
        return f"{f.body.args[0].name} is not {f.body.pred}."
    body, head = f.body.left, f.body.right
    neg = "not " if isinstance(head, Not) else ""
    h = head.body.pred if isinstance(head, Not) else head.pred
    if isinstance(body, And):
        return f"If someone is {body.left.pred} and {body.right.pred} then they are {neg}{h}."
    if style == 0:
        return f"All {body.pred} people are {neg}{h}."
    if style == 1:
        return f"{body.pred.capitalize()} people are {neg}{h}."
    return f"If someone is {body.pred} then they are {neg}{h}."


def build_world(rng: random.Random, depth: int, gold: int, sample_id: str) -> LogicSample:
    """Target person plus three filler people; the statement needs exactly ``depth`` rule steps."""
    names = rng.sample(lexicon.PARARULE_NAMES, N_PEOPLE)
    target, fillers = names[0], names[1:]
    conj = [rng.random() < 0.4 for _ in range(depth)]
    n_target = depth + 1 + sum(conj) + 1  # chain nodes, conjunct facts, one idle fact
    n_filler = 3 * len(fillers)
    if n_target + n_filler > len(lexicon.PARARULE_ATTRIBUTES):
        raise ExhaustedOntology(f"depth {depth} needs {n_target + n_filler} attributes")
    attrs = rng.sample(lexicon.PARARULE_ATTRIBUTES, n_target + n_filler)
    chain, rest = attrs[: depth + 1], attrs[depth + 1:]

    facts: list[Formula] = [Atom(chain[0], (Const(target),))]
    rules: list[Formula] = []
    for j in range(depth):
        body: Formula = _x(chain[j])
        if conj[j]:
            extra = rest.pop()
            facts.append(Atom(extra, (Const(target),)))
            body = And(body, _x(extra))
        last = j == depth - 1
        positive_head = True
        if last:
            stmt_positive = rng.random() < 0.5
            # derived literal equals the statement iff gold is "true"
            positive_head = stmt_positive == (gold == 0)
        rules.append(ForAll("x", Implies(body, _lit(chain[j + 1], positive_head))))
    facts.append(Atom(rest.pop(), (Const(target),)))

    # filler people: own facts and one rule each over their own attributes
    for person in fillers:
        a, b, c = rest.pop(), rest.pop(), rest.pop()
        facts.extend([Atom(a, (Const(person),)), Atom(b, (Const(person),))])
        body = And(_x(a), _x(b)) if rng.random() < 0.5 else _x(a)
        rules.append(ForAll("x", Implies(body, _lit(c, rng.random() < 0.7))))

    rng.shuffle(rules)
    fact_order = sorted(range(len(facts)), key=lambda i: names.index(facts[i].args[0].name))
    facts = [facts[i] for i in fact_order]
    target_atom = Atom(chain[-1], (Const(target),))
    statement = target_atom if stmt_positive else Not(target_atom)
    context = tuple(Premise(render(f, rng.randrange(3)), f) for f in [*facts, *rules])
    return LogicSample(
        id=sample_id,
        family="pararule",
        context=context,
        statement=Premise(render(statement), statement),
        gold=gold,
        polarity="positive" if stmt_positive else "negative",
        depth=depth,
        rule_tags=("MP",),
        meta={"entity": target},
    )


def _chained(sample: LogicSample) -> bool:
    """The derived literal for the statement comes out of forward chaining at the recorded depth."""
    derived = forward_chain(sample.theory)
    stmt = sample.statement.formula
    want = stmt if sample.gold == 0 else (stmt.body if isinstance(stmt, Not) else Not(stmt))
    return derived.get(want) == sample.depth


def gen_pararule(config: GenConfig) -> DatasetSplit:
    if config.family != "pararule":
        raise ValueError(f"gen_pararule needs family 'pararule', got {config.family!r}")
    if config.hops[0] < 2:
        raise ValueError("pararule depths start at 2")
    rng = random.Random(config.seed)
    setup = config.setup_name()
    depths = list(range(config.hops[0], config.hops[1] + 1))
    samples = []
    for i in range(config.total):
        depth = depths[(i // 2) % len(depths)]
        for _ in range(_MAX_ATTEMPTS):
            s = build_world(rng, depth, i % 2, f"{setup}-{i:05d}")
            try:
                certify(s)
            except CertificationError:
                continue
            if _chained(s):
                break
        else:
            raise CertificationError(f"could not build a certified depth-{depth} world")
        samples.append(s)
    split = split_calibration_eval(samples, config.n_calibration, config.seed)
    split.manifest["config"] = config.to_dict()
    return split
