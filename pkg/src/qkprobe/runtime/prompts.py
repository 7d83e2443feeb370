"""Zero-shot prompt templates with span annotations for the probe anchors.

Prompts are assembled from labelled segments, so every anchor span comes from
construction rather than from searching the rendered text.
"""
from __future__ import annotations

from dataclasses import dataclass

from qkprobe.datagen import lexicon
from qkprobe.datagen.sample import LogicSample
from qkprobe.errors import TemplateMissing
from qkprobe.runtime.tokenizer import EOL_MARKERS, build_vocab

Spans = dict[str, tuple[int, int]]


@dataclass(frozen=True)
class Template:
    id: str
    families: tuple
    # segments before the options; option words are inserted at the labels
    instruction: tuple  # of str | ("a0",) | ("a1",)
    context_label: str
    statement_label: str
    answer_tail: str = "Answer:"


TEMPLATES: dict[str, Template] = {
    "tf": Template(
        id="tf",
        families=("pronto", "pararule"),
        instruction=("Use provided context and answer whether the statement is ", ("a0",), " or ", ("a1",), ".\n"),
        context_label="Context: ",
        statement_label="Statement: ",
    ),
    "yn": Template(
        id="yn",
        families=("mle",),
        instruction=(
            "Use provided Context to answer the Question.\nPrint '", ("a0",), "' or '", ("a1",), "' only.\n"
        ),
        context_label="Context: ",
        statement_label="Question: ",
    ),
}

DEFAULT_TEMPLATE = {"pronto": "tf", "pararule": "tf", "mle": "yn"}


def render_prompt(sample: LogicSample, template_id: str | None = None, *, marker: bool = False) -> tuple[str, Spans]:
    """Render a prompt and the character spans of its anchors.

    Spans: ``a0``/``a1`` cover the instruction-line option words, ``s`` the
    end-of-line symbol closing the statement, ``statement`` the statement
    text.  With ``marker=True`` the statement's end of line is written as the
    gold-carrying marker token instead of a newline.
    """
    template_id = template_id or DEFAULT_TEMPLATE.get(sample.family)
    tpl = TEMPLATES.get(template_id or "")
    if tpl is None or sample.family not in tpl.families:
        raise TemplateMissing(f"no template {template_id!r} for family {sample.family!r}")
    parts: list[str] = []
    spans: Spans = {}
    cursor = 0

    def put(text: str, label: str | None = None) -> None:
        nonlocal cursor
        if label:
            spans[label] = (cursor, cursor + len(text))
        parts.append(text)
        cursor += len(text)

    for seg in tpl.instruction:
        if isinstance(seg, tuple):
            put(sample.options[0 if seg[0] == "a0" else 1], seg[0])
        else:
            put(seg)
    put(tpl.context_label)
    put(" ".join(p.text for p in sample.context))
    put("\n")
    put(tpl.statement_label)
    put(sample.statement.text, "statement")
    put(EOL_MARKERS[sample.gold] if marker else "\n", "s")
    put(tpl.answer_tail)
    return "".join(parts), spans


_FUNCTION_WORDS = """
a an and are all any anyone both cooks do does either every each everyone everything
false if is it no not one of or people person provided question someone statement that the then
they true whenever who yes case only print answer use context to whether
""".split()


def default_vocab() -> list[str]:
    """Closed vocabulary covering every template and generator lexicon."""
    words: set[str] = set(_FUNCTION_WORDS)
    for tpl in TEMPLATES.values():
        words.update(s for s in tpl.instruction if isinstance(s, str))
        words.update([tpl.context_label, tpl.statement_label, tpl.answer_tail])
    for w in lexicon.pseudowords():
        words.update([w, lexicon.plural(w)])
    words.update(lexicon.PRONTO_ATTRIBUTES + lexicon.PRONTO_NAMES)
    words.update(lexicon.PARARULE_ATTRIBUTES + lexicon.PARARULE_NAMES + lexicon.MLE_NAMES)
    for base, third in lexicon.MLE_ACTIVITIES:
        words.update([base, third])
    words.update(["true", "false", "yes", "no", ".", ",", "?", "'", ":"])
    texts = sorted(words)
    return build_vocab([*texts, *(t[:1].upper() + t[1:] for t in texts)])
