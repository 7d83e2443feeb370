"""Model architecture description and tensor shape table."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class ModelSpec:
    n_layers: int
    n_heads: int
    head_dim: int
    vocab_size: int
    n_kv_heads: int | None = None
    d_model: int | None = None
    norm: str = "layernorm"  # layernorm | rmsnorm
    positional: str = "rope"  # rope | none
    rope_theta: float = 10000.0
    tied_embeddings: bool = False
    ffn: str = "gelu"  # gelu | gated
    d_ff: int | None = None
    max_seq_len: int = 512
    norm_eps: float = 1e-5

    def __post_init__(self):
        if self.n_kv_heads is None:
            object.__setattr__(self, "n_kv_heads", self.n_heads)
        if self.d_model is None:
            object.__setattr__(self, "d_model", self.n_heads * self.head_dim)
        if self.d_ff is None:
            object.__setattr__(self, "d_ff", 4 * self.d_model)
        if self.d_model != self.n_heads * self.head_dim:
            raise ValueError(f"d_model {self.d_model} != n_heads*head_dim {self.n_heads * self.head_dim}")
        if self.n_heads % self.n_kv_heads:
            raise ValueError(f"n_heads {self.n_heads} not divisible by n_kv_heads {self.n_kv_heads}")
        if self.norm not in ("layernorm", "rmsnorm"):
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.positional not in ("rope", "none"):
            raise ValueError(f"unknown positional scheme {self.positional!r}")
        if self.ffn not in ("gelu", "gated"):
            raise ValueError(f"unknown ffn {self.ffn!r}")
        if self.positional == "rope" and self.head_dim % 2:
            raise ValueError("rope needs an even head_dim")
        for name in ("n_layers", "n_heads", "head_dim", "vocab_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def group_size(self) -> int:
        """Query heads per key/value head."""
        return self.n_heads // self.n_kv_heads

    def kv_head(self, head: int) -> int:
        return head // self.group_size

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelSpec":
        fields = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in fields})

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        """Expected name -> shape for every weight tensor (output dimension first)."""
        d, hd = self.d_model, self.head_dim
        shapes: dict[str, tuple[int, ...]] = {"embed": (self.vocab_size, d)}
        norms = ("weight", "bias") if self.norm == "layernorm" else ("weight",)
        for l in range(self.n_layers):
            p = f"layers.{l}."
            for n in ("attn_norm", "ffn_norm"):
                for part in norms:
                    shapes[f"{p}{n}.{part}"] = (d,)
            shapes[p + "wq"] = (self.n_heads * hd, d)
            shapes[p + "wk"] = (self.n_kv_heads * hd, d)
            shapes[p + "wv"] = (self.n_kv_heads * hd, d)
            shapes[p + "wo"] = (d, self.n_heads * hd)
            shapes[p + "w1"] = (self.d_ff, d)
            if self.ffn == "gated":
                shapes[p + "w3"] = (self.d_ff, d)
            shapes[p + "w2"] = (d, self.d_ff)
        for part in norms:
            shapes[f"final_norm.{part}"] = (d,)
        if not self.tied_embeddings:
            shapes["lm_head"] = (self.vocab_size, d)
        return shapes
