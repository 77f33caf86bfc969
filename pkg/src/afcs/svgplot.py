"""Minimal static SVG line charts (no plotting library needed)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence
from xml.sax.saxutils import escape

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 30, 50


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    dashed: bool = False
    markers: bool = False
    color_index: int = 0


@dataclass
class Chart:
    title: str
    xlabel: str
    ylabel: str
    log_y: bool = False
    series: List[Series] = field(default_factory=list)
    points: List[tuple] = field(default_factory=list)   # (x, y, color_index)

    def add(self, *args, **kwargs):
        self.series.append(Series(*args, **kwargs))


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    step = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(step))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= step), default=step)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(hi):
        out.append(v)
        v += step
    return out


def render(chart: Chart) -> str:
    def ty(v):
        return math.log10(v) if chart.log_y else v

    xs, ys = [], []
    for s in chart.series:
        for a, b in zip(s.x, s.y):
            if math.isfinite(a) and math.isfinite(b) and (b > 0 or not chart.log_y):
                xs.append(a)
                ys.append(ty(b))
    for a, b, _ in chart.points:
        if math.isfinite(a) and math.isfinite(b) and (b > 0 or not chart.log_y):
            xs.append(a)
            ys.append(ty(b))
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + ph - (ty(v) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2 - RIGHT / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(chart.title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.1f}" y1="{TOP + ph}" x2="{px(t):.1f}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{TOP + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        yy = TOP + ph - (t - y0) / (y1 - y0) * ph
        lab = f"1e{t:g}" if chart.log_y else f"{t:g}"
        out.append(f'<line x1="{LEFT - 4}" y1="{yy:.1f}" x2="{LEFT}" y2="{yy:.1f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{yy + 4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(chart.xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(chart.ylabel)}</text>')

    for i, s in enumerate(chart.series):
        color = _COLORS[s.color_index % len(_COLORS)]
        pts = [(px(a), py(b)) for a, b in zip(s.x, s.y)
               if math.isfinite(a) and math.isfinite(b) and (b > 0 or not chart.log_y)]
        if not pts:
            continue
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        path = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
        if s.markers:
            for a, b in pts:
                out.append(f'<polygon points="{a:.1f},{b - 5:.1f} {a - 4.5:.1f},{b + 3:.1f} {a + 4.5:.1f},{b + 3:.1f}" '
                           f'fill="none" stroke="{color}"/>')
        else:
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = TOP + 12 + 16 * i
        out.append(f'<line x1="{W - RIGHT + 10}" y1="{ly}" x2="{W - RIGHT + 30}" y2="{ly}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{W - RIGHT + 34}" y="{ly + 4}">{escape(s.label)}</text>')

    for a, b, ci in chart.points:
        if math.isfinite(a) and math.isfinite(b) and (b > 0 or not chart.log_y):
            out.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3.5" fill="{_COLORS[ci % len(_COLORS)]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save(chart: Chart, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(chart))
