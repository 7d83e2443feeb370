"""QK-score probing toolkit for logical-inference validity in decoder-only transformers."""

__version__ = "0.1.0"
