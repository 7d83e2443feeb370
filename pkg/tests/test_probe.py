from __future__ import annotations

import math

import numpy as np
import pytest

from qkprobe.datagen import GenConfig, generate
from qkprobe.errors import HeadOutOfRange, IncompleteCaptures, MissingLogits
from qkprobe.probe import (
    A0,
    A1,
    HeadId,
    Orientation,
    decide,
    decide_baseline,
    decide_qk,
    qk_score,
    score_table,
)
from qkprobe.runtime import QKCapture, forward_capture, random_model, read_capture, render_prompt, write_capture


def cap_from(q0, q1, k, logits=(0.0, 0.0), sid="s", L=1, H=1):
    """Capture whose every head carries the same vectors."""
    q = np.zeros((L, H, 2, len(k)), dtype=np.float32)
    q[..., 0, :], q[..., 1, :] = q0, q1
    kk = np.broadcast_to(np.asarray(k, dtype=np.float32), (L, H, len(k))).copy()
    return QKCapture(sid, q, kk, q.copy(), kk.copy(), np.asarray(logits, dtype=np.float32))


def test_qk_score_examples():
    c = cap_from([1, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0])
    assert qk_score(c, HeadId(0, 0), A0) == 1.0
    assert qk_score(c, HeadId(0, 0), A1) == 0.0
    c = cap_from([1, 2, 3], [0, 0, 0], [4, 5, 6])
    assert qk_score(c, HeadId(0, 0), A0) == 32.0
    # zero query scores zero against any key
    c = cap_from([0, 0, 0], [0, 0, 0], [7.5, -3.0, 1e6])
    assert qk_score(c, HeadId(0, 0), A0, "post_positional") == 0.0


def test_head_out_of_range():
    c = cap_from([1, 0], [0, 1], [1, 1], L=2, H=3)
    for head in [(2, 0), (0, 3), (-1, 0)]:
        with pytest.raises(HeadOutOfRange):
            qk_score(c, HeadId(*head), A0)
        with pytest.raises(IndexError):
            decide_qk(c, HeadId(*head))
    assert qk_score(c, HeadId(1, 2), A1) == 1.0


def test_decide_examples():
    assert decide(2.5, 1.0) == A0
    assert decide(0.7, 0.7) == A0
    assert decide(2.5, 1.0, Orientation.REVERSED) == A1
    assert decide(1.0, 2.5, "reversed") == A0
    c = cap_from([2.5, 0], [1.0, 0], [1, 0])
    assert decide_qk(c, HeadId(0, 0)) == A0
    assert decide_qk(c, HeadId(0, 0), Orientation.REVERSED) == A1


def test_decide_baseline():
    assert decide_baseline(cap_from([0], [0], [0], logits=(2.0, 1.0))) == A0
    assert decide_baseline(cap_from([0], [0], [0], logits=(1.0, 1.0))) == A0
    assert decide_baseline(cap_from([0], [0], [0], logits=(1.0, 2.0))) == A1
    rng = np.random.default_rng(0)
    for _ in range(200):
        l0, l1, shift = rng.normal(size=3) * 10
        base = decide_baseline(cap_from([0], [0], [0], logits=(l0, l1)))
        assert decide_baseline(cap_from([0], [0], [0], logits=(l0 + shift, l1 + shift))) == base
        p0 = 1.0 / (1.0 + math.exp(float(np.float32(l1)) - float(np.float32(l0))))
        assert base == (A0 if p0 >= 0.5 else A1)


def test_missing_logits():
    c = cap_from([0], [0], [0])
    c.option_logits = None
    with pytest.raises(MissingLogits):
        decide_baseline(c)
    c.option_logits = np.array([np.nan, 1.0], dtype=np.float32)
    with pytest.raises(MissingLogits):
        decide_baseline(c)


def test_decision_scale_invariance():
    rng = np.random.default_rng(1)
    for _ in range(200):
        q0, q1, k = rng.normal(size=(3, 6))
        c = cap_from(q0, q1, k)
        d = decide_qk(c, HeadId(0, 0))
        c2 = cap_from(q0, q1, k * rng.uniform(0.01, 100))
        assert decide_qk(c2, HeadId(0, 0)) == d


@pytest.fixture(scope="module")
def real_caps(vocab, small_spec):
    split = generate(GenConfig("pronto", "mp_only", (1, 2), (0, 1), 4, 6, seed=6))
    model = random_model(small_spec, vocab, seed=2)
    caps = []
    for s in split.samples:
        text, spans = render_prompt(s)
        caps.append(forward_capture(model, model.tokenizer.tokenize(text, spans, sample_id=s.id), attention_diagnostic=True))
    return split, model, caps


def test_score_table_grid(real_caps):
    split, model, caps = real_caps
    gold = {s.id: s.gold for s in split.samples}
    table = score_table(caps, gold)
    rows = list(table.records())
    assert len(caps) == 10 and len(rows) == 80
    by_id = {c.sample_id: c for c in caps}
    for sid, l, h, s0, s1, g, dec, base in rows:
        c = by_id[sid]
        # recompute each score with plain Python arithmetic
        want0 = sum(float(a) * float(b) for a, b in zip(c.q_pre[l, h, 0], c.k_pre[l, h]))
        want1 = sum(float(a) * float(b) for a, b in zip(c.q_pre[l, h, 1], c.k_pre[l, h]))
        assert s0 == pytest.approx(want0, rel=1e-12, abs=1e-12)
        assert s1 == pytest.approx(want1, rel=1e-12, abs=1e-12)
        assert g == gold[sid]
        assert dec == decide(s0, s1)
        assert base == decide_baseline(c)


def test_score_table_order_and_reread(tmp_path, real_caps):
    split, model, caps = real_caps
    gold = {s.id: s.gold for s in split.samples}
    table = score_table(caps, gold)
    assert table.sample_ids == sorted(gold)
    assert score_table(caps[::-1], gold).to_csv() == table.to_csv()
    path = write_capture(caps, tmp_path / "c.qkcap", model.spec)
    back, _ = read_capture(path)
    assert score_table(back, gold).to_csv() == table.to_csv()
    header = table.to_csv().splitlines()[0].split(",")
    assert header == ["sample_id", "layer", "head", "s0", "s1", "gold", "qk_decision", "baseline_decision",
                      "attn_a0", "attn_a1"]
    post = score_table(caps, gold, "post")
    assert post.variant == "post_positional"
    assert not np.array_equal(post.s0, table.s0)
    sub = table.subset(table.sample_ids[:3])
    assert len(sub) == 3 and np.array_equal(sub.s0, table.s0[:3])


def test_variants_agree_without_rope(vocab):
    from qkprobe.runtime import ModelSpec

    spec = ModelSpec(n_layers=2, n_heads=2, head_dim=4, vocab_size=len(vocab), positional="none")
    model = random_model(spec, vocab, seed=0)
    split = generate(GenConfig("pronto", "mp_only", (1, 1), (0, 0), 2, 2, seed=0))
    caps = []
    for s in split.samples:
        text, spans = render_prompt(s)
        caps.append(forward_capture(model, model.tokenizer.tokenize(text, spans, sample_id=s.id)))
    gold = {s.id: s.gold for s in split.samples}
    a, b = score_table(caps, gold, "pre"), score_table(caps, gold, "post")
    assert np.array_equal(a.s0, b.s0) and np.array_equal(a.s1, b.s1)


def test_score_table_errors(real_caps):
    split, model, caps = real_caps
    gold = {s.id: s.gold for s in split.samples}
    with pytest.raises(IncompleteCaptures):
        score_table(caps[1:], gold, ids=sorted(gold))
    with pytest.raises(IncompleteCaptures):
        score_table([*caps, caps[0]], gold)
    with pytest.raises(IncompleteCaptures):
        score_table(caps, {k: v for k, v in list(gold.items())[1:]})
    with pytest.raises(IncompleteCaptures):
        score_table([], {})
    odd = cap_from([1.0] * 8, [0.0] * 8, [1.0] * 8, sid="odd", L=1, H=4)
    with pytest.raises(IncompleteCaptures):
        score_table([*caps, odd], {**gold, "odd": 0})
    with pytest.raises(ValueError):
        score_table(caps, gold, "middle")
