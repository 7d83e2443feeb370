"""QKPM weight files: a JSON manifest next to one raw float32 blob.

Layout of a model directory::

    manifest.json   {"format": "qkpm", "version": 1, "spec": {...}, "vocab": [...],
                     "tensors": [{"name", "shape", "offset", "nbytes"}, ...],
                     "sha256": <hex digest of weights.bin>}
    weights.bin     tensors back to back, little-endian float32, C order
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from qkprobe.errors import ChecksumMismatch, FormatError, ShapeMismatch
from qkprobe.runtime.spec import ModelSpec

QKPM_FORMAT = "qkpm"
QKPM_VERSION = 1
MANIFEST = "manifest.json"
BLOB = "weights.bin"
_DTYPE = np.dtype("<f4")


def save_model(model, path: str | Path) -> Path:
    """Write ``model`` (anything with .spec, .vocab, .weights) as a QKPM directory."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries, chunks, offset = [], [], 0
    for name in sorted(model.weights):
        arr = np.ascontiguousarray(model.weights[name], dtype=_DTYPE)
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    blob = b"".join(chunks)
    (path / BLOB).write_bytes(blob)
    manifest = {
        "format": QKPM_FORMAT,
        "version": QKPM_VERSION,
        "spec": model.spec.to_dict(),
        "vocab": list(model.vocab),
        "tensors": entries,
        "sha256": hashlib.sha256(blob).hexdigest(),
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    try:
        manifest = json.loads((path / MANIFEST).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise FormatError(f"{path}: no {MANIFEST}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path / MANIFEST}: {exc}") from exc
    if manifest.get("format") != QKPM_FORMAT:
        raise FormatError(f"{path}: format {manifest.get('format')!r} is not {QKPM_FORMAT!r}")
    if manifest.get("version") != QKPM_VERSION:
        raise FormatError(f"{path}: unsupported version {manifest.get('version')!r}")
    for key in ("spec", "vocab", "tensors", "sha256"):
        if key not in manifest:
            raise FormatError(f"{path}: manifest lacks {key!r}")
    return manifest


def load_weights(path: str | Path) -> tuple[ModelSpec, list[str], dict[str, np.ndarray]]:
    path = Path(path)
    manifest = read_manifest(path)
    try:
        spec = ModelSpec.from_dict(manifest["spec"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad spec: {exc}") from exc
    blob = (path / BLOB).read_bytes() if (path / BLOB).exists() else b""
    if hashlib.sha256(blob).hexdigest() != manifest["sha256"]:
        raise ChecksumMismatch(f"{path / BLOB}: content hash differs from manifest")
    vocab = list(manifest["vocab"])
    if len(vocab) != spec.vocab_size:
        raise ShapeMismatch(f"vocabulary has {len(vocab)} entries, spec says {spec.vocab_size}")
    expected = spec.tensor_shapes()
    weights: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        start, n = entry["offset"], entry["nbytes"]
        if name not in expected:
            raise FormatError(f"unexpected tensor {name!r}")
        if shape != expected[name]:
            raise ShapeMismatch(f"{name}: stored shape {shape}, spec implies {expected[name]}")
        if n != int(np.prod(shape)) * _DTYPE.itemsize or start + n > len(blob):
            raise FormatError(f"{name}: byte range [{start}, {start + n}) inconsistent with shape/blob")
        weights[name] = np.frombuffer(blob, dtype=_DTYPE, count=int(np.prod(shape)), offset=start).reshape(shape)
    missing = sorted(set(expected) - set(weights))
    if missing:
        raise FormatError(f"missing tensors: {missing}")
    return spec, vocab, weights
