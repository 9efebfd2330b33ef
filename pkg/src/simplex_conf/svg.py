"""Minimal deterministic SVG line charts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 170, 50, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    dashed: bool = False


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 12))
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(series: Sequence[Series], *, title: str = "", xlabel: str = "", ylabel: str = "",
               logx: bool = False, hline: float | None = None) -> str:
    """Return the chart as a string; identical input gives identical output."""
    if not series:
        raise ValueError("at least one series is required")
    if any(len(s.x) == 0 or len(s.x) != len(s.y) for s in series):
        raise ValueError("every series needs matching, nonempty x and y")
    xs = [float(v) for s in series for v in s.x]
    ys = [float(v) for s in series for v in s.y]
    if hline is not None:
        ys.append(hline)
    if logx and min(xs) <= 0:
        raise ValueError("log-scaled x needs positive values")
    tx = (lambda v: math.log10(v)) if logx else float

    if logx:
        xticks = sorted(set(xs))
        x_lo, x_hi = tx(min(xs)), tx(max(xs))
        pad = 0.05 * (x_hi - x_lo or 1.0)
        x_lo, x_hi = x_lo - pad, x_hi + pad
    else:
        xticks = _nice_ticks(min(xs), max(xs))
        x_lo, x_hi = xticks[0], xticks[-1]
    yticks = _nice_ticks(min(ys), max(ys))
    y_lo, y_hi = yticks[0], yticks[-1]

    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(v: float) -> float:
        return MARGIN_LEFT + (tx(v) - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="15">{escape(title)}</text>')
    x0, x1 = MARGIN_LEFT, MARGIN_LEFT + pw
    y0, y1 = MARGIN_TOP + ph, MARGIN_TOP
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for t in xticks:
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{y0}" x2="{X:.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{y0 + 20}" text-anchor="middle">{_fmt(t)}</text>')
    for t in yticks:
        Y = py(t)
        out.append(f'<line x1="{x0 - 5}" y1="{Y:.2f}" x2="{x0}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{x0}" y1="{Y:.2f}" x2="{x1}" y2="{Y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{x0 - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    if xlabel:
        out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = (y0 + y1) / 2
        out.append(f'<text x="20" y="{cy:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 20 {cy:.1f})">{escape(ylabel)}</text>')
    if hline is not None:
        Y = py(hline)
        out.append(f'<line x1="{x0}" y1="{Y:.2f}" x2="{x1}" y2="{Y:.2f}" stroke="gray" stroke-dasharray="2,3"/>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}" for a, b in zip(s.x, s.y))
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
        for a, b in zip(s.x, s.y):
            out.append(f'<circle cx="{px(float(a)):.2f}" cy="{py(float(b)):.2f}" r="3" fill="{color}"/>')
        ly = MARGIN_TOP + 10 + 20 * i
        lx = WIDTH - MARGIN_RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(series: Sequence[Series], path: str | Path, **kwargs) -> Path:
    path = Path(path)
    text = render_svg(series, **kwargs)
    path.write_text(text, encoding="utf-8")
    return path
