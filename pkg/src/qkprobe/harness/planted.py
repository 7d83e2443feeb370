"""A toy model in which one chosen head answers every question by construction.

Six residual channels are reserved: ``opt+``/``opt-`` carry which option a
token names, ``gold+``/``gold-`` carry the answer on the statement marker token
(``<eol:0>`` or ``<eol:1>``), and ``prior+``/``prior-`` hold a constant on every
token.  Values come in +/- pairs, so LayerNorm's mean subtraction cancels and
both norms only rescale them by a positive factor.

Nothing writes into the reserved channels after the embedding (their rows of
every W_O and FFN output are zero), and nothing reads them except the planted
head: its query uses only coordinate ``j`` = opt+ - opt-, and the key of its
kv group uses coordinate ``j`` = gold+ - gold-.  For pre-positional vectors

    s0 - s1 = (q_a0[j] - q_a1[j]) * k_s[j]

with q_a0[j] > 0 > q_a1[j], and k_s[j] has the sign of the gold answer, so the
head decides correctly on every sample.  The option words precede the marker,
so every later query of the planted head is zero, and its group mates never
read the gold coordinate or its rope partner; the output logits do not depend
on the answer beyond float rounding.

With ``output_prior=True`` (the default) the option words' output rows read
only the constant prior pair, so the baseline picks the same seeded option for
every prompt.  A random readout would also be blind to the marker, yet its
decisions can still track surface features that correlate with the answer
(such as how many negations a prompt contains), which moves it off chance.
"""
from __future__ import annotations

import numpy as np

from qkprobe.errors import SpecTooLarge
from qkprobe.probe import HeadId
from qkprobe.runtime.forward import Model, random_model
from qkprobe.runtime.spec import ModelSpec
from qkprobe.runtime.tokenizer import EOL, EOL_MARKERS

MAX_LAYERS = 4
MAX_HEADS = 8
A0_WORDS = ("true", "yes")
A1_WORDS = ("false", "no")
N_RESERVED = 6
PLANT_COORD = 0


def reserved_channels(spec: ModelSpec) -> dict[str, int]:
    d = spec.d_model
    return {"opt+": d - 6, "opt-": d - 5, "gold+": d - 4, "gold-": d - 3, "prior+": d - 2, "prior-": d - 1}


def build_planted_model(
    spec: ModelSpec,
    planted: HeadId | tuple[int, int],
    seed: int = 0,
    vocab=None,
    *,
    strength: float = 1.0,
    output_prior: bool = True,
) -> Model:
    """Seeded random model with ``planted`` wired to the gold marker channel."""
    from qkprobe.runtime.prompts import default_vocab

    if spec.n_layers > MAX_LAYERS or spec.n_heads > MAX_HEADS:
        raise SpecTooLarge(f"planted models are limited to {MAX_LAYERS} layers and {MAX_HEADS} heads")
    layer, head = planted
    if not (0 <= layer < spec.n_layers and 0 <= head < spec.n_heads):
        raise ValueError(f"planted head {tuple(planted)} outside the model")
    if spec.tied_embeddings:
        raise ValueError("planted models need an untied output projection")
    if spec.d_model <= N_RESERVED:
        raise ValueError("d_model too small for the reserved channels")
    vocab = list(vocab) if vocab is not None else default_vocab()
    if len(vocab) != spec.vocab_size:
        raise ValueError(f"vocabulary of {len(vocab)} tokens, spec expects {spec.vocab_size}")

    model = random_model(spec, vocab, seed)
    W = {k: v.copy() for k, v in model.weights.items()}
    ch = reserved_channels(spec)
    res = list(ch.values())
    index = {t: i for i, t in enumerate(vocab)}
    hd = spec.head_dim

    emb = W["embed"]
    emb[:, res] = 0.0
    emb[:, ch["prior+"]], emb[:, ch["prior-"]] = strength, -strength
    for words, sign in ((A0_WORDS, 1.0), (A1_WORDS, -1.0)):
        for w in words:
            if w in index:
                emb[index[w], ch["opt+"]] = sign * strength
                emb[index[w], ch["opt-"]] = -sign * strength
    # markers look exactly like a plain end of line apart from the gold pair
    for gold, marker in enumerate(EOL_MARKERS):
        if marker in index:
            emb[index[marker]] = emb[index[EOL]]
            sign = 1.0 if gold == 0 else -1.0
            emb[index[marker], ch["gold+"]] = sign * strength
            emb[index[marker], ch["gold-"]] = -sign * strength
    W["lm_head"][:, res] = 0.0
    if output_prior:
        favoured = int(np.random.default_rng(seed).integers(2))
        for words, which in ((A0_WORDS, 0), (A1_WORDS, 1)):
            sign = 1.0 if which == favoured else -1.0
            for w in words:
                if w in index:
                    W["lm_head"][index[w]] = 0.0
                    W["lm_head"][index[w], ch["prior+"]] = sign
                    W["lm_head"][index[w], ch["prior-"]] = -sign
    for name in ("final_norm.weight",):
        W[name][res] = 1.0
    if "final_norm.bias" in W:
        W["final_norm.bias"][res] = 0.0

    group = spec.group_size
    kv = spec.kv_head(head)
    for l in range(spec.n_layers):
        p = f"layers.{l}."
        for n in ("attn_norm", "ffn_norm"):
            W[f"{p}{n}.weight"][res] = 1.0
            if f"{p}{n}.bias" in W:
                W[f"{p}{n}.bias"][res] = 0.0
        for name in ("wq", "wk", "wv", "w1", "w3"):
            if p + name in W:
                W[p + name][:, res] = 0.0
        W[p + "wo"][res, :] = 0.0
        W[p + "w2"][res, :] = 0.0
        if l == layer:
            wq, wk = W[p + "wq"], W[p + "wk"]
            wq[head * hd:(head + 1) * hd, :] = 0.0
            qrow = head * hd + PLANT_COORD
            wq[qrow, ch["opt+"]], wq[qrow, ch["opt-"]] = 1.0, -1.0
            krow = kv * hd + PLANT_COORD
            wk[krow, :] = 0.0
            wk[krow, ch["gold+"]], wk[krow, ch["gold-"]] = 1.0, -1.0
            # group mates share this key; keep them blind to it, including the
            # rotate-half partner that rope mixes the gold coordinate into
            blind = [PLANT_COORD] + ([PLANT_COORD + hd // 2] if spec.positional == "rope" else [])
            for mate in range(kv * group, (kv + 1) * group):
                if mate != head:
                    for c in blind:
                        wq[mate * hd + c, :] = 0.0
    return Model(spec, vocab, W)
