"""Independent reference implementations used as test oracles.

Nothing here calls into the package's numerical or logical code; only the
plain data classes (formulas, specs) are shared.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from qkprobe.logic.formula import And, Atom, ForAll, Implies, Not, Or

# ---------------------------------------------------------------------------
# truth-table entailment


def _preds_consts(fs):
    preds, consts = set(), set()

    def walk(f, bound):
        if isinstance(f, Atom):
            preds.add(f.pred)
            t = f.args[0]
            if t.name not in bound:
                consts.add(t.name)
        elif isinstance(f, Not):
            walk(f.body, bound)
        elif isinstance(f, (And, Or, Implies)):
            walk(f.left, bound)
            walk(f.right, bound)
        else:
            walk(f.body, bound | {f.var})

    for f in fs:
        walk(f, frozenset())
    return sorted(preds), sorted(consts)


def _eval_vec(f, cols, cmap, n, env):
    """Boolean vector over all assignments (rows of ``cols``)."""
    if isinstance(f, Atom):
        name = f.args[0].name
        elem = env[name] if name in env else cmap[name]
        return cols[(f.pred, elem)]
    if isinstance(f, Not):
        return ~_eval_vec(f.body, cols, cmap, n, env)
    if isinstance(f, And):
        return _eval_vec(f.left, cols, cmap, n, env) & _eval_vec(f.right, cols, cmap, n, env)
    if isinstance(f, Or):
        return _eval_vec(f.left, cols, cmap, n, env) | _eval_vec(f.right, cols, cmap, n, env)
    if isinstance(f, Implies):
        return ~_eval_vec(f.left, cols, cmap, n, env) | _eval_vec(f.right, cols, cmap, n, env)
    parts = [_eval_vec(f.body, cols, cmap, n, {**env, f.var: e}) for e in range(n)]
    if isinstance(f, ForAll):
        return np.logical_and.reduce(parts)
    return np.logical_or.reduce(parts)


def truth_table(theory, query, n: int) -> str:
    """'Entailed' / 'NotEntailed' / 'Undetermined' by brute force over every
    interpretation: each constant mapped to any element, each ground atom any value."""
    preds, consts = _preds_consts([*theory, query])
    keys = [(p, e) for p in preds for e in range(n)]
    rows = np.arange(2 ** len(keys), dtype=np.int64)
    cols = {k: ((rows >> i) & 1).astype(bool) for i, k in enumerate(keys)}
    pos = neg = False
    for image in itertools.product(range(n), repeat=len(consts)):
        cmap = dict(zip(consts, image))
        ok = np.ones(len(rows), dtype=bool)
        for f in theory:
            ok &= _eval_vec(f, cols, cmap, n, {})
        q = _eval_vec(query, cols, cmap, n, {})
        pos |= bool((ok & q).any())
        neg |= bool((ok & ~q).any())
    if pos and not neg:
        return "Entailed"
    if neg and not pos:
        return "NotEntailed"
    if not pos and not neg:
        return "Entailed"  # inconsistent theory entails everything
    return "Undetermined"


# ---------------------------------------------------------------------------
# level-by-level Horn derivation


def horn_levels(facts, rules, names):
    """Minimal derivation height by rounds: round k adds everything whose body
    was fully available after round k-1.  ``rules`` are (body preds, head literal)
    pairs over one variable; ``head`` is (pred, positive)."""
    known = {(p, c, True): 0 for p, c in facts}
    level = 0
    while True:
        level += 1
        fresh = {}
        for body, (hp, hpos) in rules:
            for c in names:
                if all((b, c, True) in known for b in body) and (hp, c, hpos) not in known:
                    fresh[(hp, c, hpos)] = level
        if not fresh:
            return known
        known.update(fresh)


# ---------------------------------------------------------------------------
# transformer forward pass in float64 with explicit loops


def _norm64(x, w, b, kind, eps):
    if kind == "layernorm":
        mu = sum(x) / len(x)
        var = sum((v - mu) ** 2 for v in x) / len(x)
        return np.array([(x[i] - mu) / math.sqrt(var + eps) * w[i] + b[i] for i in range(len(x))])
    ms = sum(v * v for v in x) / len(x)
    return np.array([x[i] / math.sqrt(ms + eps) * w[i] for i in range(len(x))])


def _rotate(vec, pos, theta):
    """Pair coordinate i with i + d/2 and rotate each pair by pos * theta^(-2i/d)."""
    d = len(vec)
    half = d // 2
    out = np.array(vec, dtype=np.float64)
    for i in range(half):
        ang = pos * theta ** (-2.0 * i / d)
        c, s = math.cos(ang), math.sin(ang)
        a, b = vec[i], vec[i + half]
        out[i] = a * c - b * s
        out[i + half] = a * s + b * c
    return out


def _gelu(v):
    return 0.5 * v * (1.0 + math.tanh(math.sqrt(2.0 / math.pi) * (v + 0.044715 * v**3)))


def naive_forward(spec, weights, ids):
    """Returns logits (T, V) and per-layer q/k before and after rotation as
    nested lists q[l][t][h] (query heads) and k[l][t][g] (kv heads)."""
    W = {k: np.asarray(v, dtype=np.float64) for k, v in weights.items()}
    T, H, KV, hd = len(ids), spec.n_heads, spec.n_kv_heads, spec.head_dim
    group = H // KV
    ln = spec.norm == "layernorm"
    x = [W["embed"][i].copy() for i in ids]
    out = {"q_pre": [], "k_pre": [], "q_post": [], "k_post": []}
    for l in range(spec.n_layers):
        p = f"layers.{l}."
        zero = np.zeros(spec.d_model)
        hs = [_norm64(x[t], W[p + "attn_norm.weight"], W[p + "attn_norm.bias"] if ln else zero, spec.norm, spec.norm_eps)
              for t in range(T)]
        wq, wk, wv, wo = W[p + "wq"], W[p + "wk"], W[p + "wv"], W[p + "wo"]
        q = [[np.array([sum(wq[h * hd + j, c] * hs[t][c] for c in range(spec.d_model)) for j in range(hd)])
              for h in range(H)] for t in range(T)]
        k = [[np.array([sum(wk[g * hd + j, c] * hs[t][c] for c in range(spec.d_model)) for j in range(hd)])
              for g in range(KV)] for t in range(T)]
        v = [[wv[g * hd:(g + 1) * hd] @ hs[t] for g in range(KV)] for t in range(T)]
        out["q_pre"].append(q)
        out["k_pre"].append(k)
        if spec.positional == "rope":
            q = [[_rotate(q[t][h], t, spec.rope_theta) for h in range(H)] for t in range(T)]
            k = [[_rotate(k[t][g], t, spec.rope_theta) for g in range(KV)] for t in range(T)]
        out["q_post"].append(q)
        out["k_post"].append(k)
        new_x = []
        for t in range(T):
            heads_out = []
            for h in range(H):
                g = h // group
                scores = [float(np.dot(q[t][h], k[u][g])) / math.sqrt(hd) for u in range(t + 1)]
                m = max(scores)
                ex = [math.exp(s - m) for s in scores]
                tot = sum(ex)
                heads_out.append(sum((ex[u] / tot) * v[u][g] for u in range(t + 1)))
            concat = np.concatenate(heads_out)
            new_x.append(x[t] + wo @ concat)
        x = new_x
        for t in range(T):
            h2 = _norm64(x[t], W[p + "ffn_norm.weight"], W[p + "ffn_norm.bias"] if ln else zero, spec.norm, spec.norm_eps)
            a = W[p + "w1"] @ h2
            if spec.ffn == "gated":
                b = W[p + "w3"] @ h2
                inner = np.array([a[i] / (1.0 + math.exp(-a[i])) * b[i] for i in range(len(a))])
            else:
                inner = np.array([_gelu(a[i]) for i in range(len(a))])
            x[t] = x[t] + W[p + "w2"] @ inner
    zero = np.zeros(spec.d_model)
    fin = [_norm64(x[t], W["final_norm.weight"], W["final_norm.bias"] if ln else zero, spec.norm, spec.norm_eps)
           for t in range(T)]
    unembed = W["embed"] if spec.tied_embeddings else W["lm_head"]
    out["logits"] = np.array([unembed @ fin[t] for t in range(T)])
    return out


# ---------------------------------------------------------------------------
# propositional grounding checked with sympy's SAT solver


def _ground(f, dom, env, syms):
    import sympy
    from sympy.logic import boolalg as B

    if isinstance(f, Atom):
        name = f.args[0].name
        key = f"{f.pred}__{env.get(name, name)}"
        if key not in syms:
            syms[key] = sympy.Symbol(key)
        return syms[key]
    if isinstance(f, Not):
        return B.Not(_ground(f.body, dom, env, syms))
    if isinstance(f, And):
        return B.And(_ground(f.left, dom, env, syms), _ground(f.right, dom, env, syms))
    if isinstance(f, Or):
        return B.Or(_ground(f.left, dom, env, syms), _ground(f.right, dom, env, syms))
    if isinstance(f, Implies):
        return B.Implies(_ground(f.left, dom, env, syms), _ground(f.right, dom, env, syms))
    parts = [_ground(f.body, dom, {**env, f.var: e}, syms) for e in dom]
    return B.And(*parts) if isinstance(f, ForAll) else B.Or(*parts)


def sat_verdict(theory, query, fresh: int = 2) -> str:
    """Ground over the named individuals (all distinct) plus ``fresh`` anonymous
    ones and ask sympy's SAT solver which polarity of ``query`` is forced."""
    from sympy.logic import boolalg as B
    from sympy.logic.inference import satisfiable

    _, consts = _preds_consts([*theory, query])
    dom = consts + [f"_u{i}" for i in range(fresh)]
    syms: dict = {}
    th = B.And(*[_ground(f, dom, {}, syms) for f in theory])
    q = _ground(query, dom, {}, syms)
    if satisfiable(th) is False:
        return "Inconsistent"
    can_false = satisfiable(B.And(th, B.Not(q))) is not False
    can_true = satisfiable(B.And(th, q)) is not False
    if not can_false:
        return "Entailed"
    if not can_true:
        return "NotEntailed"
    return "Undetermined"


def horn_depth(theory, literal):
    """Depth of ``literal`` via horn_levels, or None when the theory is not Horn
    or the literal is not derived."""
    if not (isinstance(literal, Atom) or (isinstance(literal, Not) and isinstance(literal.body, Atom))):
        return None
    facts, negs, rules = [], [], []
    names = set()
    for f in theory:
        if isinstance(f, Atom):
            facts.append((f.pred, f.args[0].name))
            names.add(f.args[0].name)
        elif isinstance(f, Not) and isinstance(f.body, Atom):
            negs.append((f.body.pred, f.body.args[0].name))
            names.add(f.body.args[0].name)
        elif isinstance(f, ForAll) and isinstance(f.body, Implies):
            body, head = f.body.left, f.body.right
            preds = []
            stack = [body]
            while stack:
                g = stack.pop()
                if isinstance(g, And):
                    stack += [g.left, g.right]
                elif isinstance(g, Atom):
                    preds.append(g.pred)
                else:
                    return None
            if isinstance(head, Atom):
                rules.append((preds, (head.pred, True)))
            elif isinstance(head, Not) and isinstance(head.body, Atom):
                rules.append((preds, (head.body.pred, False)))
            else:
                return None
        else:
            return None
    known = horn_levels(facts, rules, sorted(names))
    for p, c in negs:
        known.setdefault((p, c, False), 0)
    if isinstance(literal, Atom):
        key = (literal.pred, literal.args[0].name, True)
    else:
        key = (literal.body.pred, literal.body.args[0].name, False)
    return known.get(key)
