"""Render an EvalReport as CSV, markdown tables and SVG heatmaps.

Every renderer is a pure function of the report, so equal reports give equal
bytes.
"""
from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Iterable

from qkprobe.errors import UnsupportedFormat
from qkprobe.harness.experiment import BASELINE, EvalReport

FORMATS = ("csv", "markdown", "svg-heatmap")
CELL_PX = 28
MARGIN = 40
_FIXED_HEAD = re.compile(r"QK \(\d+, \d+\)")


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def to_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setup", "source", "layer", "head", "orientation", "accuracy", "correct", "total"])
    for src in report.sources:
        for setup in report.setups:
            c = report.cells.get((setup, src))
            if c is None:
                continue
            layer, head = c.head if c.head is not None else ("", "")
            w.writerow([setup, src, layer, head, c.orientation if c.head else "", repr(c.accuracy), c.correct, c.total])
    return buf.getvalue()


def to_markdown(report: EvalReport, title: str | None = None) -> str:
    """Sources as rows, setups as columns.

    The best value of each column is bold; other QK entries that beat the
    column's baseline are underlined.
    """
    title = title or str(report.meta.get("model", "model"))
    lines = [f"### {title}", ""]
    lines.append("| Source | " + " | ".join(report.setups) + " |")
    lines.append("|---|" + "---:|" * len(report.setups))
    best = {}
    for setup in report.setups:
        vals = [report.cells[(setup, s)].accuracy for s in report.sources if (setup, s) in report.cells]
        best[setup] = max(vals)
    for src in report.sources:
        row = [src]
        for setup in report.setups:
            c = report.cells.get((setup, src))
            if c is None:
                row.append("")
                continue
            text = _fmt(c.accuracy)
            base = report.cells.get((setup, BASELINE))
            if _fmt(c.accuracy) == _fmt(best[setup]):
                text = f"**{text}**"
            elif src != BASELINE and base is not None and c.accuracy > base.accuracy:
                text = f"<u>{text}</u>"
            row.append(text)
        lines.append("| " + " | ".join(row) + " |")
    # rows whose label does not name a fixed head list the head used per setup
    varying = [s for s in report.sources if s != BASELINE and not _FIXED_HEAD.fullmatch(s)]
    for src in varying:
        heads = []
        for setup in report.setups:
            c = report.cells.get((setup, src))
            if c is not None and c.head is not None:
                heads.append(f"{setup}: ({c.head[0]}, {c.head[1]})")
        if heads:
            lines.extend(["", f"Heads for {src}: " + "; ".join(heads)])
    sizes = report.meta.get("eval_sizes")
    if sizes:
        lines.extend(["", "Evaluation samples: " + "; ".join(f"{k}: {sizes[k]}" for k in report.setups if k in sizes)])
    return "\n".join(lines) + "\n"


def _color(acc: float) -> str:
    """White at 0.5, blue toward 1, red toward 0."""
    t = max(-1.0, min(1.0, (acc - 0.5) * 2))
    if t >= 0:
        r, g, b = 255 - 200 * t, 255 - 150 * t, 255
    else:
        r, g, b = 255, 255 + 180 * t, 255 + 180 * t
    return f"#{round(r):02x}{round(g):02x}{round(b):02x}"


def to_svg(report: EvalReport, setup: str) -> str:
    """Layers down, heads across; one rect per head coloured by calibration accuracy."""
    grid = report.calibration[setup]["grid"]
    L, H = report.n_layers, report.n_heads
    width, height = MARGIN + H * CELL_PX + 10, MARGIN + L * CELL_PX + 10
    best = tuple(report.calibration[setup].get("best_head", ()))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="9">',
        f"<title>calibration accuracy: {_xml(setup)}</title>",
        f'<text x="{MARGIN}" y="12">head</text>',
        f'<text x="2" y="{MARGIN - 4}">layer</text>',
    ]
    for h in range(H):
        out.append(f'<text x="{MARGIN + h * CELL_PX + 9}" y="{MARGIN - 4}">{h}</text>')
    for l in range(L):
        y = MARGIN + l * CELL_PX
        out.append(f'<text x="12" y="{y + 17}">{l}</text>')
        for h in range(H):
            acc = grid[l][h]
            x = MARGIN + h * CELL_PX
            stroke = ' stroke="#000" stroke-width="2"' if (l, h) == best else ' stroke="#999" stroke-width="0.5"'
            out.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{CELL_PX}" height="{CELL_PX}" '
                f'fill="{_color(acc)}"{stroke}><title>({l}, {h}) {_fmt(acc)}</title></rect>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def emit_report(report: EvalReport, formats: Iterable[str], out_dir: str | Path) -> list[Path]:
    formats = list(dict.fromkeys(formats))
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise UnsupportedFormat(f"unsupported report formats {bad}; choose from {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        p = out / "report.csv"
        p.write_text(to_csv(report), encoding="utf-8")
        written.append(p)
    if "markdown" in formats:
        p = out / "report.md"
        p.write_text(to_markdown(report), encoding="utf-8")
        written.append(p)
    if "svg-heatmap" in formats:
        for setup in report.setups:
            if setup in report.calibration:
                p = out / f"heatmap-{_slug(setup)}.svg"
                p.write_text(to_svg(report, setup), encoding="utf-8")
                written.append(p)
    return written
