"""Minimal self-contained SVG line charts for run metrics."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .errors import InvalidInput

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
METRICS = (("test_acc", "test accuracy"), ("train_loss", "training loss"),
           ("eps_bound", "epsilon (uniform bound)"))

WIDTH, PANEL_H = 720, 260
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 40


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(k * mag for k in (1, 2, 2.5, 5, 10) if k * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks, v = [], start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _panel(title: str, series: Mapping[str, Sequence[tuple[float, float]]], y0: int) -> list[str]:
    pts = [(x, y) for s in series.values() for x, y in s]
    out = [f'<g transform="translate(0,{y0})">',
           f'<text x="{LEFT}" y="18" font-size="14" font-weight="bold">{escape(title)}</text>']
    if not pts:
        out.append(f'<text x="{LEFT}" y="{PANEL_H // 2}" font-size="12">no finite values</text></g>')
        return out
    xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
    ymin, ymax = min(p[1] for p in pts), max(p[1] for p in pts)
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        pad = abs(ymin) * 0.05 or 0.5
        ymin, ymax = ymin - pad, ymax + pad
    pw, ph = WIDTH - LEFT - RIGHT, PANEL_H - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - xmin) / (xmax - xmin) * pw

    def sy(y):
        return TOP + ph - (y - ymin) / (ymax - ymin) * ph

    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    for t in _nice_ticks(ymin, ymax):
        yy = sy(t)
        out.append(f'<line x1="{LEFT - 4}" y1="{yy:.2f}" x2="{LEFT + pw}" y2="{yy:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{yy + 4:.2f}" font-size="10" text-anchor="end">{_fmt(t)}</text>')
    for t in _nice_ticks(xmin, xmax):
        xx = sx(t)
        out.append(f'<line x1="{xx:.2f}" y1="{TOP + ph}" x2="{xx:.2f}" y2="{TOP + ph + 4}" stroke="#444"/>')
        out.append(f'<text x="{xx:.2f}" y="{TOP + ph + 16}" font-size="10" text-anchor="middle">{_fmt(t)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{PANEL_H - 6}" font-size="11" '
               f'text-anchor="middle">iteration</text>')
    for k, (label, s) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        if s:
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = TOP + 14 * k + 8
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 28}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 32}" y="{ly + 4}" font-size="10">{escape(label)}</text>')
    out.append("</g>")
    return out


def render_svg(series: Mapping[str, Sequence]) -> str:
    """SVG text with one panel per metric; ``series`` maps label -> RoundMetrics list."""
    if not series or any(len(v) == 0 for v in series.values()):
        raise InvalidInput("need at least one nonempty series")
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
             f'height="{PANEL_H * len(METRICS)}" font-family="sans-serif">',
             f'<rect width="100%" height="100%" fill="white"/>']
    for k, (attr, title) in enumerate(METRICS):
        panel = {}
        for label, rows in series.items():
            panel[label] = [(float(r.iteration), float(getattr(r, attr))) for r in rows
                            if math.isfinite(getattr(r, attr))]
        parts.extend(_panel(title, panel, k * PANEL_H))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(series: Mapping[str, Sequence], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(render_svg(series), encoding="utf-8", newline="\n")
    return path
