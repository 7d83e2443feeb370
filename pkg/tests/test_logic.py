from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import horn_levels, truth_table
from qkprobe.errors import ArityError, DomainTooLarge, FormulaError, FragmentViolation, NotDerivable, SchemaMismatch
from qkprobe.logic import (
    And,
    Atom,
    Const,
    Exists,
    ForAll,
    Implies,
    InferenceRule,
    Not,
    Or,
    Var,
    Verdict,
    apply_rule,
    atom,
    entails,
    forall,
    forward_chain,
    parse,
    proof_depth,
    rule_search,
    to_text,
)
from qkprobe.logic.semantics import consistent

X = Var("x")


def px(p):
    return Atom(p, (X,))


def pc(p, c):
    return Atom(p, (Const(c),))


# ---------------------------------------------------------------------------
# formulas and text form

PREDS = st.sampled_from(["p", "q", "r", "wumpus", "s1"])
CONSTS = st.sampled_from(["a", "b", "Polly", "c7"])


def _open(var):
    """Quantifier-free formulas over one variable and some constants."""
    leaf = st.one_of(
        st.builds(lambda p, c: pc(p, c), PREDS, CONSTS),
        st.builds(lambda p: Atom(p, (Var(var),)), PREDS),
    )
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.builds(Not, inner),
            st.builds(And, inner, inner),
            st.builds(Or, inner, inner),
            st.builds(Implies, inner, inner),
        ),
        max_leaves=6,
    )


def _ground():
    leaf = st.builds(lambda p, c: pc(p, c), PREDS, CONSTS)
    return st.recursive(
        leaf,
        lambda inner: st.one_of(st.builds(Not, inner), st.builds(And, inner, inner), st.builds(Or, inner, inner)),
        max_leaves=5,
    )


closed_formulas = st.one_of(
    _ground(),
    st.builds(lambda b: ForAll("x", b), _open("x")),
    st.builds(lambda b: Exists("y", b), _open("y")),
    st.builds(lambda b: Not(ForAll("z", b)), _open("z")),
)


@settings(max_examples=300, deadline=None)
@given(closed_formulas)
def test_text_form_round_trip(f):
    assert parse(to_text(f)) == f
    assert to_text(parse(to_text(f))) == to_text(f)


def test_text_form_examples():
    f = parse("forall x (imp (atom p x) (atom q x))")
    assert f == ForAll("x", Implies(px("p"), px("q")))
    assert to_text(f) == "forall x (imp (atom p x) (atom q x))"
    # a name is a variable only under a binder for it
    assert parse("(atom p x)") == pc("p", "x")
    assert atom("p", "a") == pc("p", "a")
    assert forall("x", px("p") >> ~px("q")) == ForAll("x", Implies(px("p"), Not(px("q"))))


@pytest.mark.parametrize("text", ["", "(atom p)", "(foo (atom p a))", "(not (atom p a)", "forall (atom p x)",
                                  "(atom p a) (atom q a)"])
def test_parse_rejects_malformed(text):
    with pytest.raises(FormulaError):
        parse(text)


def test_validation_limits():
    with pytest.raises(ArityError):
        apply_rule("UI", [ForAll("x", Atom("p", (X, Const("a"))))], constant="a")
    nested = ForAll("x", Exists("y", Implies(px("p"), Atom("q", (Var("y"),)))))
    with pytest.raises(FormulaError):
        entails([nested], pc("q", "a"), 2)
    with pytest.raises(FormulaError):
        entails([px("p")], pc("q", "a"), 2)  # free variable


# ---------------------------------------------------------------------------
# inference rules


def test_apply_rule_examples():
    assert apply_rule(InferenceRule.MP, [ForAll("x", px("p") >> px("q")), pc("p", "a")]) == pc("q", "a")
    assert apply_rule("UI", [ForAll("x", px("p"))], constant="a") == pc("p", "a")
    with pytest.raises(SchemaMismatch):
        apply_rule("MP", [pc("p", "a"), pc("q", "a")])


def test_apply_rule_binds_concrete_names():
    rule = ForAll("y", Atom("wumpus", (Var("y"),)) >> Atom("opaque", (Var("y"),)))
    got = apply_rule("MP", [pc("wumpus", "Polly"), rule])  # premise order is irrelevant
    assert got == pc("opaque", "Polly")
    # schemas match structurally: a negated consequent is not an instance of q(x)
    with pytest.raises(SchemaMismatch):
        neg = ForAll("y", Atom("wumpus", (Var("y"),)) >> Not(Atom("opaque", (Var("y"),))))
        apply_rule("MP", [pc("wumpus", "Polly"), neg])
    # conjoined premises are split before matching
    assert apply_rule("MT", [And(ForAll("x", px("p") >> px("q")), Not(pc("q", "a")))]) == Not(pc("p", "a"))
    eg = apply_rule("EG", [pc("p", "a")], var="z")
    assert eg == Exists("z", Atom("p", (Var("z"),)))


def test_apply_rule_needs_constant_when_unbound():
    with pytest.raises(SchemaMismatch):
        apply_rule("UI", [ForAll("x", px("p"))])
    hs = apply_rule("HS", [ForAll("x", px("p") >> px("q")), ForAll("x", px("q") >> px("r"))], constant="b")
    assert hs == Implies(pc("p", "b"), pc("r", "b"))


def test_apply_rule_rejects_aliasing():
    # p and q must be different predicates
    with pytest.raises(SchemaMismatch):
        apply_rule("MP", [ForAll("x", px("p") >> px("p")), pc("p", "a")])
    # the constant placeholder binds once
    with pytest.raises(SchemaMismatch):
        apply_rule("CD", [ForAll("x", px("p") >> px("q")), ForAll("x", px("r") >> px("s")),
                          Or(pc("p", "a"), pc("r", "b"))])


def test_apply_rule_wrong_premise_count():
    with pytest.raises(SchemaMismatch):
        apply_rule("MP", [ForAll("x", px("p") >> px("q"))])
    with pytest.raises(SchemaMismatch):
        apply_rule("CT", [ForAll("x", px("p") | px("q")), pc("p", "a")])


# ---------------------------------------------------------------------------
# entailment


def test_entails_examples():
    mp = [ForAll("x", px("p") >> px("q")), pc("p", "a")]
    assert entails(mp, pc("q", "a"), 2) is Verdict.ENTAILED
    assert entails([pc("p", "a")], pc("q", "a"), 2) is Verdict.UNDETERMINED
    dmt = [Not(ForAll("x", px("p") & px("q")))]
    assert entails(dmt, Exists("x", ~px("p") | ~px("q")), 3) is Verdict.ENTAILED
    assert entails(mp, Not(pc("q", "a")), 2) is Verdict.NOT_ENTAILED


def test_inconsistent_theory_entails_everything():
    th = [pc("p", "a"), Not(pc("p", "a"))]
    assert not consistent(th, 2)
    for method in ("search", "enumerate"):
        assert entails(th, pc("q", "b"), 2, method=method) is Verdict.ENTAILED


def test_constants_may_corefer():
    # distinct names may denote one individual unless the theory separates them
    assert entails([ForAll("x", px("p"))], pc("p", "b"), 1) is Verdict.ENTAILED
    assert entails([pc("p", "a")], pc("p", "b"), 3) is Verdict.UNDETERMINED
    assert entails([pc("p", "a")], pc("p", "b"), 1) is Verdict.ENTAILED


def test_domain_bounds_and_budget():
    for bad in (0, 7):
        with pytest.raises(ValueError):
            entails([pc("p", "a")], pc("p", "a"), bad)
    th = [ForAll("x", px(f"p{i}") >> px(f"p{i + 1}")) for i in range(8)] + [pc("p0", "a")]
    with pytest.raises(DomainTooLarge):
        entails(th, pc("p8", "a"), 3, method="enumerate", budget=1000)
    with pytest.raises(DomainTooLarge):
        entails(th, Exists("x", px("p8")) >> pc("p3", "b"), 3, method="search", budget=2)


def _random_formula(rng: random.Random, preds, consts):
    def lit(term):
        a = Atom(rng.choice(preds), (term,))
        return a if rng.random() < 0.6 else Not(a)

    c = Const(rng.choice(consts))
    kind = rng.randrange(7)
    if kind == 0:
        return lit(c)
    if kind == 1:
        return ForAll("x", Implies(lit(X), lit(X)))
    if kind == 2:
        return ForAll("x", Or(lit(X), lit(X)))
    if kind == 3:
        return Or(lit(c), lit(Const(rng.choice(consts))))
    if kind == 4:
        return Exists("x", And(lit(X), lit(X)))
    if kind == 5:
        return Not(ForAll("x", Or(lit(X), lit(X))))
    return Implies(lit(c), lit(c))


def test_routes_agree_with_truth_table():
    rng = random.Random(11)
    preds, consts = ["p", "q", "r"], ["a", "b"]
    seen = set()
    for _ in range(120):
        th = [_random_formula(rng, preds, consts) for _ in range(rng.randint(1, 4))]
        query = _random_formula(rng, preds, consts)
        n = rng.randint(1, 3)
        want = truth_table(th, query, n)
        assert str(entails(th, query, n, method="search")) == want
        assert str(entails(th, query, n, method="enumerate")) == want
        seen.add(want)
    assert seen == {"Entailed", "NotEntailed", "Undetermined"}


def test_entailment_is_monotone():
    rng = random.Random(5)
    preds, consts = ["p", "q", "r", "s"], ["a", "b"]
    decided = 0
    for _ in range(100):
        th = [_random_formula(rng, preds, consts) for _ in range(rng.randint(1, 4))]
        query = _random_formula(rng, preds, consts)
        before = entails(th, query, 2)
        after = entails([*th, _random_formula(rng, preds, consts)], query, 2)
        if before is not Verdict.UNDETERMINED:
            decided += 1
            assert after is before or after is Verdict.ENTAILED  # only inconsistency may add Entailed
        if before is Verdict.ENTAILED:
            assert after is Verdict.ENTAILED
    assert decided > 10


def test_entails_is_deterministic():
    th = [ForAll("x", px("p") | px("q")), Not(pc("p", "a"))]
    assert [entails(th, pc("q", "a"), d) for d in range(1, 5)] == [Verdict.ENTAILED] * 4


# ---------------------------------------------------------------------------
# derivation depth


def harry_world():
    return [
        pc("strong", "Harry"),
        ForAll("x", px("strong") >> px("smart")),
        ForAll("x", px("smart") >> px("quiet")),
    ]


def test_forward_chain_examples():
    depths = forward_chain(harry_world())
    assert depths[pc("quiet", "Harry")] == 2
    assert depths[pc("smart", "Harry")] == 1
    assert forward_chain([pc("p", "a")]) == {pc("p", "a"): 0}


def test_forward_chain_rejects_non_horn():
    with pytest.raises(FragmentViolation):
        forward_chain([ForAll("x", px("p") | px("q"))])
    with pytest.raises(FragmentViolation):
        forward_chain([ForAll("x", Not(px("p")) >> px("q"))])


def test_proof_depth_examples():
    assert proof_depth([ForAll("x", px("p") >> px("q")), pc("p", "a")], pc("q", "a")) == 1
    assert proof_depth(harry_world(), pc("quiet", "Harry")) == 2
    # the negated statement is measured through the entailed polarity
    assert proof_depth(harry_world(), Not(pc("quiet", "Harry"))) == 2
    with pytest.raises(NotDerivable):
        proof_depth(harry_world(), pc("tall", "Harry"))


def test_proof_depth_non_horn_routes():
    # modus tollens then disjunctive syllogism: two chained rules
    th = [ForAll("x", px("p") >> px("q")), Not(pc("q", "a")), ForAll("x", px("p") | px("r"))]
    assert proof_depth(th, pc("r", "a")) == 2
    trace = rule_search(th, [pc("r", "a")])
    assert trace.depth == 2
    assert trace.conclusion == pc("r", "a")
    n_ax = len(trace.axioms)
    for k, (_, prem, _) in enumerate(trace.steps):
        assert all(i < n_ax + k for i in prem)


def _random_horn(rng: random.Random, n_rules: int):
    preds = [f"p{i}" for i in range(6)]
    names = ["a", "b"]
    facts = sorted({(rng.choice(preds), rng.choice(names)) for _ in range(rng.randint(1, 3))})
    rules = []
    for _ in range(n_rules):
        body = rng.sample(preds, rng.randint(1, 2))
        head = rng.choice([p for p in preds if p not in body])
        rules.append((body, (head, True)))
    theory = [pc(p, c) for p, c in facts]
    for body, (head, _) in rules:
        ante = px(body[0]) if len(body) == 1 else And(px(body[0]), px(body[1]))
        theory.append(ForAll("x", Implies(ante, px(head))))
    return theory, facts, rules, names, preds


def test_forward_chain_agrees_with_entails():
    rng = random.Random(3)
    for _ in range(200):
        theory, _, _, names, preds = _random_horn(rng, rng.randint(1, 5))
        derived = forward_chain(theory)
        for p in preds:
            for c in names:
                v = entails(theory, pc(p, c), 3)
                # a positive Horn theory entails exactly its derivable atoms
                assert (v is Verdict.ENTAILED) == (pc(p, c) in derived), (theory, p, c)


def test_forward_chain_depths_are_minimal():
    rng = random.Random(8)
    for _ in range(150):
        theory, facts, rules, names, _ = _random_horn(rng, rng.randint(1, 8))
        ref = horn_levels(facts, rules, names)
        got = forward_chain(theory)
        assert {(f.pred, f.args[0].name, True): d for f, d in got.items()} == ref
