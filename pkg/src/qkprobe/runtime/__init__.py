"""Numpy transformer runtime: weights, tokenizer, prompts, instrumented forward pass."""
from __future__ import annotations

from qkprobe.runtime.capture import QKCapture, read_capture, write_capture
from qkprobe.runtime.forward import Model, apply_rope, forward_capture, load_model, random_model, run
from qkprobe.runtime.prompts import TEMPLATES, default_vocab, render_prompt
from qkprobe.runtime.spec import ModelSpec
from qkprobe.runtime.tokenizer import PromptLayout, Tokenizer

__all__ = [
    "Model", "ModelSpec", "PromptLayout", "QKCapture", "TEMPLATES", "Tokenizer", "apply_rope",
    "default_vocab", "forward_capture", "load_model", "random_model", "read_capture", "render_prompt",
    "run", "write_capture",
]
