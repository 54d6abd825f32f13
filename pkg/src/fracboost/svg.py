"""Minimal SVG chart writer: scatter with identity line, histograms, grouped bars."""
from __future__ import annotations

import math
from html import escape
from typing import Sequence

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 60
COLORS = ("#3b6ea5", "#d1603d", "#5a9e5a", "#8c6bb1")


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt_tick(v: float) -> str:
    if abs(v) >= 1e5 or (v != 0 and abs(v) < 1e-3):
        return f"{v:.2g}"
    return f"{v:g}"


class Canvas:
    def __init__(self, width: int = WIDTH, height: int = HEIGHT):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def rect(self, x, y, w, h, fill, title=None):
        body = f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"'
        if title is None:
            self.parts.append(body + "/>")
        else:
            self.parts.append(body + f"><title>{escape(title)}</title></rect>")

    def line(self, x1, y1, x2, y2, stroke="#333", width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                          f'stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def circle(self, cx, cy, r, fill):
        self.parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r}" fill="{fill}" '
                          f'fill-opacity="0.6"/>')

    def text(self, x, y, s, anchor="middle", size=12, rotate=None):
        tr = f' transform="rotate({rotate} {x:.2f} {y:.2f})"' if rotate is not None else ""
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
                          f'font-family="sans-serif" text-anchor="{anchor}"{tr}>{escape(s)}</text>')

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


class _Frame:
    """Maps data coordinates into the plot area."""

    def __init__(self, canvas, xlo, xhi, ylo, yhi):
        self.c = canvas
        self.x0, self.x1 = MARGIN_L, canvas.width - MARGIN_R
        self.y0, self.y1 = canvas.height - MARGIN_B, MARGIN_T
        if xhi <= xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi <= ylo:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi

    def px(self, x):
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def py(self, y):
        return self.y0 - (y - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def axes(self, title, xlabel, ylabel, xticks=True):
        c = self.c
        c.line(self.x0, self.y0, self.x1, self.y0)
        c.line(self.x0, self.y0, self.x0, self.y1)
        for t in nice_ticks(self.ylo, self.yhi):
            c.line(self.x0 - 4, self.py(t), self.x0, self.py(t))
            c.text(self.x0 - 7, self.py(t) + 4, _fmt_tick(t), anchor="end", size=10)
        if xticks:
            for t in nice_ticks(self.xlo, self.xhi):
                c.line(self.px(t), self.y0, self.px(t), self.y0 + 4)
                c.text(self.px(t), self.y0 + 16, _fmt_tick(t), size=10)
        c.text((self.x0 + self.x1) / 2, 22, title, size=14)
        c.text((self.x0 + self.x1) / 2, c.height - 14, xlabel)
        c.text(18, (self.y0 + self.y1) / 2, ylabel, rotate=-90)


def scatter_svg(actual: Sequence[float], predicted: Sequence[float],
                title: str = "Predicted vs actual") -> str:
    c = Canvas()
    lo = min(min(actual), min(predicted))
    hi = max(max(actual), max(predicted))
    pad = (hi - lo) * 0.05 or 0.5
    fr = _Frame(c, lo - pad, hi + pad, lo - pad, hi + pad)
    fr.axes(title, "actual", "predicted")
    c.line(fr.px(fr.xlo), fr.py(fr.xlo), fr.px(fr.xhi), fr.py(fr.xhi), stroke="#999", dash="4 3")
    for a, p in zip(actual, predicted):
        c.circle(fr.px(a), fr.py(p), 3, COLORS[0])
    return c.render()


def histogram_svg(edges: Sequence[float], counts: Sequence[int], title: str) -> str:
    c = Canvas()
    top = max(counts) if len(counts) else 1
    fr = _Frame(c, edges[0], edges[-1], 0, top * 1.05)
    fr.axes(title, title, "count")
    for i, k in enumerate(counts):
        x0, x1 = fr.px(edges[i]), fr.px(edges[i + 1])
        y = fr.py(k)
        c.rect(x0, y, max(x1 - x0 - 1, 0.5), fr.y0 - y, COLORS[0],
               title=f"[{edges[i]:g}, {edges[i + 1]:g}]: {k}")
    return c.render()


def bar_svg(labels: Sequence[str], series: Sequence[Sequence[float]],
            names: Sequence[str], title: str, ylabel: str = "count") -> str:
    """Vertical bars; one group per label, one bar per series."""
    c = Canvas()
    top = max((v for s in series for v in s), default=1) or 1
    fr = _Frame(c, 0, max(len(labels), 1), 0, top * 1.05)
    fr.axes(title, "", ylabel, xticks=False)
    k = len(series)
    for i, lab in enumerate(labels):
        slot0 = fr.px(i + 0.1)
        slot_w = (fr.px(i + 0.9) - slot0) / k
        for j, s in enumerate(series):
            y = fr.py(s[i])
            c.rect(slot0 + j * slot_w, y, slot_w, fr.y0 - y, COLORS[j % len(COLORS)],
                   title=f"{lab} / {names[j]}: {s[i]:g}")
        c.text(fr.px(i + 0.5), fr.y0 + 16, lab, size=10)
    if k > 1:
        for j, nm in enumerate(names):
            x = fr.x1 - 110
            y = MARGIN_T + 14 * j
            c.rect(x, y - 9, 10, 10, COLORS[j % len(COLORS)])
            c.text(x + 14, y, nm, anchor="start", size=10)
    return c.render()
