from __future__ import annotations

import numpy as np
import pytest

from qkprobe.runtime.prompts import default_vocab
from qkprobe.runtime.spec import ModelSpec

# acceptance outcomes, printed once at the end of the session
ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Call ``verdict(label, fn)``: runs ``fn``, records one PASS/FAIL line, re-raises failures."""

    def run(label, fn):
        try:
            detail = fn()
        except BaseException as exc:
            line = f"FAIL  {label}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            ACCEPTANCE.append(line)
            print(line)
            raise
        line = f"PASS  {label}" + (f" ({detail})" if detail else "")
        ACCEPTANCE.append(line)
        print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def vocab():
    return default_vocab()


@pytest.fixture(scope="session")
def small_spec(vocab):
    return ModelSpec(n_layers=2, n_heads=4, head_dim=8, vocab_size=len(vocab), n_kv_heads=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
