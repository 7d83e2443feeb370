"""Word/punctuation tokenizer with a dedicated end-of-line token."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from qkprobe.errors import SpanResolutionError

PAD, UNK, BOS, EOL = "<pad>", "<unk>", "<bos>", "<eol>"
EOL_MARKERS = ("<eol:0>", "<eol:1>")
SPECIALS = (PAD, UNK, BOS, EOL, *EOL_MARKERS)

TOKEN_RE = re.compile(r"<[a-z0-9:_]+>|\n|\w+|[^\w\s]")


@dataclass(frozen=True)
class PromptLayout:
    token_ids: tuple
    pos_a0: int
    pos_a1: int
    pos_s: int
    pos_final: int
    template_id: str
    sample_id: str = ""
    pos_statement_end: int = -1  # last token of the statement text, just before pos_s

    def __post_init__(self):
        n = len(self.token_ids)
        if self.pos_a0 == self.pos_a1:
            raise SpanResolutionError("option anchors coincide")
        for name in ("pos_a0", "pos_a1", "pos_s", "pos_final"):
            if not 0 <= getattr(self, name) < n:
                raise SpanResolutionError(f"{name}={getattr(self, name)} outside sequence of length {n}")

    @property
    def length(self) -> int:
        return len(self.token_ids)


class Tokenizer:
    def __init__(self, vocab: Sequence[str]):
        self.vocab = list(vocab)
        self.index = {t: i for i, t in enumerate(self.vocab)}
        for sp in (UNK, BOS, EOL):
            if sp not in self.index:
                raise ValueError(f"vocabulary lacks special token {sp!r}")
        self.unk_id = self.index[UNK]

    def pieces(self, text: str) -> list[tuple[str, int, int]]:
        """(token string, char start, char end) for every token in ``text``."""
        out = []
        for m in TOKEN_RE.finditer(text):
            tok = EOL if m.group() == "\n" else m.group()
            out.append((tok, m.start(), m.end()))
        return out

    def encode(self, text: str, bos: bool = True) -> list[int]:
        ids = [self.index.get(t, self.unk_id) for t, _, _ in self.pieces(text)]
        return [self.index[BOS], *ids] if bos else ids

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.vocab[i] for i in ids]

    def tokenize(self, text: str, spans: Mapping[str, tuple[int, int]], template_id: str = "", sample_id: str = "") -> PromptLayout:
        """Tokenize and resolve character spans ``a0``, ``a1``, ``s`` (and optional ``statement``)."""
        pieces = self.pieces(text)
        ids = [self.index[BOS]] + [self.index.get(t, self.unk_id) for t, _, _ in pieces]
        starts = {s: i + 1 for i, (_, s, _) in enumerate(pieces)}
        ends = {e: i + 1 for i, (_, _, e) in enumerate(pieces)}

        def first_token(name: str) -> int:
            start, end = spans[name]
            if start not in starts:
                raise SpanResolutionError(f"span {name!r} start {start} is not a token boundary")
            if end not in ends:
                raise SpanResolutionError(f"span {name!r} end {end} is not a token boundary")
            return starts[start]

        pos_s = first_token("s")
        if ends[spans["s"][1]] != pos_s:
            raise SpanResolutionError("statement end-of-line span must cover exactly one token")
        stmt_end = -1
        if "statement" in spans:
            first_token("statement")
            stmt_end = ends[spans["statement"][1]]
        return PromptLayout(
            token_ids=tuple(ids),
            pos_a0=first_token("a0"),
            pos_a1=first_token("a1"),
            pos_s=pos_s,
            pos_final=len(ids) - 1,
            template_id=template_id,
            sample_id=sample_id,
            pos_statement_end=stmt_end,
        )


def build_vocab(texts: Iterable[str], extra: Iterable[str] = ()) -> list[str]:
    """Specials first, then every token seen in ``texts`` or ``extra``, sorted."""
    seen: set[str] = set(extra)
    tok = re.compile(TOKEN_RE.pattern)
    for text in texts:
        for m in tok.finditer(text):
            if m.group() != "\n":
                seen.add(m.group())
    return [*SPECIALS, *sorted(seen - set(SPECIALS))]
