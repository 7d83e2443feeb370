"""Decoder-only transformer forward pass with query/key capture.

All arithmetic is float32.  Weight matrices follow the (out_features,
in_features) convention, so a projection is ``h @ W.T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from qkprobe.errors import SequenceTooLong
from qkprobe.runtime.capture import QKCapture
from qkprobe.runtime.qkpm import load_weights, save_model
from qkprobe.runtime.spec import ModelSpec
from qkprobe.runtime.tokenizer import PromptLayout, Tokenizer

F32 = np.float32


@dataclass
class Model:
    spec: ModelSpec
    vocab: list
    weights: dict = field(repr=False)

    def __post_init__(self):
        self.weights = {k: np.asarray(v, dtype=F32) for k, v in self.weights.items()}
        self.tokenizer = Tokenizer(self.vocab)

    @property
    def unembed(self) -> np.ndarray:
        return self.weights["embed"] if self.spec.tied_embeddings else self.weights["lm_head"]

    def save(self, path: str | Path) -> Path:
        return save_model(self, path)


def load_model(path: str | Path) -> Model:
    spec, vocab, weights = load_weights(path)
    return Model(spec, vocab, weights)


def random_model(spec: ModelSpec, vocab: Sequence[str], seed: int = 0, scale: float = 0.2) -> Model:
    """Gaussian weights with unit-ish norm gains; a deterministic function of ``seed``."""
    rng = np.random.default_rng(seed)
    weights = {}
    for name, shape in spec.tensor_shapes().items():
        if name.endswith("norm.weight"):
            weights[name] = (1.0 + 0.1 * rng.standard_normal(shape)).astype(F32)
        elif name.endswith("norm.bias"):
            weights[name] = (0.1 * rng.standard_normal(shape)).astype(F32)
        else:
            fan_in = shape[-1] if name != "embed" else 1
            std = scale if name == "embed" else scale / np.sqrt(fan_in) * 4
            weights[name] = (std * rng.standard_normal(shape)).astype(F32)
    return Model(spec, list(vocab), weights)


# ---------------------------------------------------------------------------
# building blocks

def norm(x: np.ndarray, w: np.ndarray, b: np.ndarray | None, kind: str, eps: float) -> np.ndarray:
    if kind == "layernorm":
        mu = x.mean(-1, keepdims=True)
        var = ((x - mu) ** 2).mean(-1, keepdims=True)
        return ((x - mu) / np.sqrt(var + F32(eps)) * w + b).astype(F32)
    ms = (x * x).mean(-1, keepdims=True)
    return (x / np.sqrt(ms + F32(eps)) * w).astype(F32)


def gelu(x: np.ndarray) -> np.ndarray:
    c = F32(np.sqrt(2.0 / np.pi))
    return (F32(0.5) * x * (F32(1.0) + np.tanh(c * (x + F32(0.044715) * x**3)))).astype(F32)


def silu(x: np.ndarray) -> np.ndarray:
    return (x / (F32(1.0) + np.exp(-x))).astype(F32)


def rope_tables(positions: np.ndarray, head_dim: int, theta: float) -> tuple[np.ndarray, np.ndarray]:
    half = head_dim // 2
    inv_freq = theta ** (-np.arange(half, dtype=np.float64) * 2.0 / head_dim)
    ang = np.asarray(positions, dtype=np.float64)[..., None] * inv_freq
    ang = np.concatenate([ang, ang], axis=-1)
    return np.cos(ang), np.sin(ang)


def rotate_half(x: np.ndarray) -> np.ndarray:
    half = x.shape[-1] // 2
    return np.concatenate([-x[..., half:], x[..., :half]], axis=-1)


def apply_rope(x: np.ndarray, positions, head_dim: int | None = None, theta: float = 10000.0) -> np.ndarray:
    """Rotate ``x`` (..., T, [heads,] head_dim) by its positions using the rotate-half pairing.

    ``positions`` broadcasts against the leading axes; for a (T, n, d) block
    pass a length-T vector and it is expanded over heads.  float64 input stays
    float64; anything else is computed in float32.
    """
    x = np.asarray(x)
    dt = np.float64 if x.dtype == np.float64 else F32
    x = x.astype(dt, copy=False)
    d = head_dim or x.shape[-1]
    cos, sin = (t.astype(dt) for t in rope_tables(np.asarray(positions), d, theta))
    if x.ndim == 3 and cos.ndim == 2:
        cos, sin = cos[:, None, :], sin[:, None, :]
    return (x * cos + rotate_half(x) * sin).astype(dt)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    return (e / e.sum(axis=axis, keepdims=True)).astype(F32)


# ---------------------------------------------------------------------------
# forward pass

@dataclass
class ForwardTrace:
    logits: np.ndarray  # (T, vocab)
    q_pre: list  # per layer (T, H, hd)
    k_pre: list  # per layer (T, KV, hd)
    q_post: list
    k_post: list
    attn: list  # per layer (H, T, T)


def run(model: Model, token_ids: Sequence[int]) -> ForwardTrace:
    spec, W = model.spec, model.weights
    ids = np.asarray(token_ids, dtype=np.int64)
    T = len(ids)
    if T > spec.max_seq_len:
        raise SequenceTooLong(f"sequence of {T} tokens exceeds the limit of {spec.max_seq_len}")
    H, KV, hd = spec.n_heads, spec.n_kv_heads, spec.head_dim
    ln = spec.norm == "layernorm"
    x = W["embed"][ids].astype(F32)
    mask = np.triu(np.ones((T, T), dtype=bool), k=1)
    scale = F32(1.0 / np.sqrt(hd))
    positions = np.arange(T)
    trace = ForwardTrace(None, [], [], [], [], [])
    for l in range(spec.n_layers):
        p = f"layers.{l}."
        h = norm(x, W[p + "attn_norm.weight"], W.get(p + "attn_norm.bias") if ln else None, spec.norm, spec.norm_eps)
        q = (h @ W[p + "wq"].T).reshape(T, H, hd)
        k = (h @ W[p + "wk"].T).reshape(T, KV, hd)
        v = (h @ W[p + "wv"].T).reshape(T, KV, hd)
        trace.q_pre.append(q)
        trace.k_pre.append(k)
        if spec.positional == "rope":
            q = apply_rope(q, positions, hd, spec.rope_theta)
            k = apply_rope(k, positions, hd, spec.rope_theta)
        trace.q_post.append(q)
        trace.k_post.append(k)
        group = spec.group_size
        k_full = np.repeat(k, group, axis=1)  # (T, H, hd)
        v_full = np.repeat(v, group, axis=1)
        scores = np.einsum("qhd,khd->hqk", q, k_full).astype(F32) * scale
        scores = np.where(mask[None], -np.inf, scores)
        attn = softmax(scores, -1)
        trace.attn.append(attn)
        out = np.einsum("hqk,khd->qhd", attn, v_full).reshape(T, H * hd).astype(F32)
        x = (x + out @ W[p + "wo"].T).astype(F32)
        h = norm(x, W[p + "ffn_norm.weight"], W.get(p + "ffn_norm.bias") if ln else None, spec.norm, spec.norm_eps)
        if spec.ffn == "gated":
            inner = silu(h @ W[p + "w1"].T) * (h @ W[p + "w3"].T)
        else:
            inner = gelu(h @ W[p + "w1"].T)
        x = (x + inner.astype(F32) @ W[p + "w2"].T).astype(F32)
    x = norm(x, W["final_norm.weight"], W.get("final_norm.bias") if ln else None, spec.norm, spec.norm_eps)
    trace.logits = (x @ model.unembed.T).astype(F32)
    return trace


def forward_capture(model: Model, layout: PromptLayout, *, attention_diagnostic: bool = False) -> QKCapture:
    """One forward pass; q at both option anchors and k at the statement anchor for every head."""
    spec = model.spec
    tr = run(model, layout.token_ids)
    L, H, hd = spec.n_layers, spec.n_heads, spec.head_dim
    kv_of = np.array([spec.kv_head(h) for h in range(H)])
    anchors = [layout.pos_a0, layout.pos_a1]

    def take_q(qs):
        return np.stack([q[anchors].transpose(1, 0, 2) for q in qs]).astype(F32)  # (L, H, 2, hd)

    def take_k(ks):
        return np.stack([k[layout.pos_s][kv_of] for k in ks]).astype(F32)  # (L, H, hd)

    q_post, k_post = take_q(tr.q_post), take_k(tr.k_post)
    option_ids = np.array([layout.token_ids[layout.pos_a0], layout.token_ids[layout.pos_a1]], dtype=np.int64)
    final = tr.logits[layout.pos_final]
    diag = None
    if attention_diagnostic:
        diag = np.zeros((L, H, 2), dtype=F32)
        scale = F32(1.0 / np.sqrt(hd))
        for l in range(L):
            k_all = tr.k_post[l][:, kv_of]  # (T, H, hd)
            for i, pos in enumerate(anchors):
                row = np.einsum("hd,khd->hk", tr.q_post[l][pos], k_all) * scale
                diag[l, :, i] = softmax(row, -1)[:, layout.pos_s]
    return QKCapture(
        sample_id=layout.sample_id,
        q_pre=take_q(tr.q_pre),
        k_pre=take_k(tr.k_pre),
        q_post=q_post,
        k_post=k_post,
        option_logits=final[option_ids].astype(F32),
        option_ids=tuple(int(i) for i in option_ids),
        positions=(layout.pos_a0, layout.pos_a1, layout.pos_s, layout.pos_final),
        logits_final=final,
        attn_diag=diag,
    )
