"""Captured query/key vectors and their binary file format.

File layout (all integers and floats little-endian)::

    b"QKCAPTUR"  u32 version  u32 header_len  header (UTF-8 JSON)
    then `count` sample blocks:
      u16 id_len, id bytes (UTF-8)
      i32 pos_a0, pos_a1, pos_s, pos_final
      i32 option token id x2
      for each stored variant: f32 q[L,H,2,hd], f32 k[L,H,hd]
      f32 option_logits[2]
      f32 attn_diag[L,H,2]              (only when header flag set)

The header holds the model spec, its digest, the stored variants, the
diagnostic flag and the sample count.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from qkprobe.errors import FormatError, VersionMismatch
from qkprobe.runtime.spec import ModelSpec

MAGIC = b"QKCAPTUR"
CAPTURE_VERSION = 1
VARIANTS = ("pre_positional", "post_positional")
_F32 = np.dtype("<f4")


@dataclass
class QKCapture:
    sample_id: str
    q_pre: np.ndarray | None  # (L, H, 2, hd): queries at the two option anchors
    k_pre: np.ndarray | None  # (L, H, hd): key at the statement anchor, group kv head
    q_post: np.ndarray | None
    k_post: np.ndarray | None
    option_logits: np.ndarray | None  # (2,)
    option_ids: tuple = ()
    positions: tuple = ()  # (pos_a0, pos_a1, pos_s, pos_final)
    logits_final: np.ndarray | None = field(default=None, repr=False)
    attn_diag: np.ndarray | None = None  # (L, H, 2)

    def vectors(self, variant: str = "pre_positional") -> tuple[np.ndarray, np.ndarray]:
        if variant in ("pre", "pre_positional"):
            q, k = self.q_pre, self.k_pre
        elif variant in ("post", "post_positional"):
            q, k = self.q_post, self.k_post
        else:
            raise ValueError(f"unknown variant {variant!r}")
        if q is None or k is None:
            raise FormatError(f"capture {self.sample_id!r} holds no {variant} vectors")
        return q, k

    @property
    def shape(self) -> tuple[int, int, int]:
        q = self.q_pre if self.q_pre is not None else self.q_post
        L, H, _, hd = q.shape
        return L, H, hd

    def stored_variants(self) -> tuple[str, ...]:
        return tuple(v for v, q in zip(VARIANTS, (self.q_pre, self.q_post)) if q is not None)


def normalize_variant(variant: str) -> str:
    v = {"pre": "pre_positional", "post": "post_positional"}.get(variant, variant)
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    return v


def write_capture(captures: Sequence[QKCapture], path: str | Path, spec: ModelSpec,
                  variants: Iterable[str] = VARIANTS) -> Path:
    path = Path(path)
    variants = tuple(normalize_variant(v) for v in variants)
    L, H, hd = spec.n_layers, spec.n_heads, spec.head_dim
    diag = bool(captures) and all(c.attn_diag is not None for c in captures)
    header = {
        "spec": spec.to_dict(),
        "spec_digest": spec.digest(),
        "variants": list(variants),
        "attn_diag": diag,
        "count": len(captures),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    out = [MAGIC, struct.pack("<II", CAPTURE_VERSION, len(hbytes)), hbytes]
    for c in captures:
        if c.shape != (L, H, hd):
            raise FormatError(f"capture {c.sample_id!r} has shape {c.shape}, spec says {(L, H, hd)}")
        sid = c.sample_id.encode("utf-8")
        out.append(struct.pack("<H", len(sid)) + sid)
        out.append(struct.pack("<4i", *c.positions))
        out.append(struct.pack("<2i", *c.option_ids))
        for v in variants:
            q, k = c.vectors(v)
            out.append(np.ascontiguousarray(q, dtype=_F32).tobytes())
            out.append(np.ascontiguousarray(k, dtype=_F32).tobytes())
        if c.option_logits is None:
            raise FormatError(f"capture {c.sample_id!r} lacks option logits")
        out.append(np.asarray(c.option_logits, dtype=_F32).tobytes())
        if diag:
            out.append(np.ascontiguousarray(c.attn_diag, dtype=_F32).tobytes())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(out))
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: truncated at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def floats(self, shape: tuple[int, ...]) -> np.ndarray:
        n = int(np.prod(shape))
        return np.frombuffer(self.take(n * 4), dtype=_F32).reshape(shape).copy()


def read_capture_header(path: str | Path) -> tuple[dict, ModelSpec]:
    caps, header, spec = _read(Path(path), header_only=True)
    return header, spec


def read_capture(path: str | Path, spec: ModelSpec | None = None) -> tuple[list[QKCapture], ModelSpec]:
    """Read a capture file; when ``spec`` is given its shape must match the file's."""
    caps, header, file_spec = _read(Path(path))
    if spec is not None:
        if (spec.n_layers, spec.n_heads, spec.head_dim) != (file_spec.n_layers, file_spec.n_heads, file_spec.head_dim):
            raise FormatError(
                f"{path}: capture shape (L={file_spec.n_layers}, H={file_spec.n_heads}, hd={file_spec.head_dim}) "
                f"does not match the model (L={spec.n_layers}, H={spec.n_heads}, hd={spec.head_dim})"
            )
    return caps, file_spec


def _read(path: Path, header_only: bool = False):
    r = _Reader(path.read_bytes(), path)
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError(f"{path}: not a capture file")
    version, hlen = struct.unpack("<II", r.take(8))
    if version != CAPTURE_VERSION:
        raise VersionMismatch(f"{path}: capture version {version}, expected {CAPTURE_VERSION}")
    try:
        header = json.loads(r.take(hlen).decode("utf-8"))
        spec = ModelSpec.from_dict(header["spec"])
        variants = [normalize_variant(v) for v in header["variants"]]
        count, diag = int(header["count"]), bool(header["attn_diag"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: bad header: {exc}") from exc
    if header.get("spec_digest") not in (None, spec.digest()):
        raise FormatError(f"{path}: header digest does not match its spec")
    if header_only:
        return [], header, spec
    L, H, hd = spec.n_layers, spec.n_heads, spec.head_dim
    caps = []
    for _ in range(count):
        (n,) = struct.unpack("<H", r.take(2))
        sid = r.take(n).decode("utf-8")
        positions = struct.unpack("<4i", r.take(16))
        option_ids = struct.unpack("<2i", r.take(8))
        vecs = {}
        for v in variants:
            vecs[v] = (r.floats((L, H, 2, hd)), r.floats((L, H, hd)))
        logits = r.floats((2,))
        attn = r.floats((L, H, 2)) if diag else None
        pre = vecs.get("pre_positional", (None, None))
        post = vecs.get("post_positional", (None, None))
        caps.append(QKCapture(sid, pre[0], pre[1], post[0], post[1], logits, option_ids, positions, None, attn))
    if r.pos != len(r.data):
        raise FormatError(f"{path}: {len(r.data) - r.pos} trailing bytes")
    return caps, header, spec
