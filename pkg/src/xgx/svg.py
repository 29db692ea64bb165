"""Minimal deterministic SVG charts (no timestamps, ids or float noise)."""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 440
MARGIN = {"left": 70, "right": 190, "top": 40, "bottom": 60}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        ]
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", extra=""):
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')

    def line(self, x1, y1, x2, y2, stroke="black", extra=""):
        self.add(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}"{extra}/>')

    def legend(self, labels: Sequence[str]):
        x = self.x1 + 16
        for i, label in enumerate(labels):
            y = self.y1 + 10 + 18 * i
            self.add(f'<rect x="{x}" y="{y - 9}" width="12" height="12" fill="{PALETTE[i % len(PALETTE)]}"/>')
            self.text(x + 18, y + 1, label, anchor="start")

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _y_axis(c: _Canvas, lo, hi, label):
    def sy(v):
        return c.y0 - (v - lo) / (hi - lo) * (c.y0 - c.y1)
    c.line(c.x0, c.y0, c.x0, c.y1)
    for t in _nice_ticks(lo, hi):
        c.line(c.x0 - 4, sy(t), c.x0, sy(t))
        c.text(c.x0 - 7, sy(t) + 4, f"{t:.3f}", anchor="end")
    c.text(18, (c.y0 + c.y1) / 2, label, extra=f' transform="rotate(-90 18 {_f((c.y0 + c.y1) / 2)})"')
    return sy


def line_chart(title: str, x_label: str, y_label: str,
               series: Sequence[Tuple[str, Sequence[float], Sequence[float]]],
               vline: Optional[float] = None) -> str:
    """Lines sharing an x axis; an optional dashed vertical reference line."""
    c = _Canvas(title)
    xs_all = [x for _, xs, _ in series for x in xs] or [0.0, 1.0]
    ys_all = [y for _, _, ys in series for y in ys] or [0.0, 1.0]
    xlo, xhi = min(xs_all), max(xs_all)
    if xhi <= xlo:
        xhi = xlo + 1.0
    ylo, yhi = 0.0, max(max(ys_all), 1e-9) * 1.05

    def sx(v):
        return c.x0 + (v - xlo) / (xhi - xlo) * (c.x1 - c.x0)

    sy = _y_axis(c, ylo, yhi, y_label)
    c.line(c.x0, c.y0, c.x1, c.y0)
    for t in _nice_ticks(xlo, xhi, 6):
        c.line(sx(t), c.y0, sx(t), c.y0 + 4)
        c.text(sx(t), c.y0 + 17, f"{t:.1f}")
    c.text((c.x0 + c.x1) / 2, HEIGHT - 15, x_label)
    for i, (_, xs, ys) in enumerate(series):
        pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, ys))
        c.add(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="2" points="{pts}"/>')
    if vline is not None and xlo <= vline <= xhi:
        c.line(sx(vline), c.y0, sx(vline), c.y1, stroke="#444444", extra=' stroke-dasharray="6,4"')
    c.legend([label for label, _, _ in series])
    return c.render()


def grouped_bar_chart(title: str, y_label: str, categories: Sequence[str],
                      series: Sequence[Tuple[str, Sequence[float]]]) -> str:
    """One cluster per category, one bar per series within each cluster."""
    c = _Canvas(title)
    vals = [v for _, vs in series for v in vs] or [1.0]
    sy = _y_axis(c, 0.0, max(max(vals), 1e-9) * 1.05, y_label)
    c.line(c.x0, c.y0, c.x1, c.y0)
    slot = (c.x1 - c.x0) / max(len(categories), 1)
    bar = slot * 0.8 / max(len(series), 1)
    for ci, cat in enumerate(categories):
        left = c.x0 + ci * slot + slot * 0.1
        for si, (_, vs) in enumerate(series):
            top = sy(vs[ci])
            c.add(f'<rect x="{_f(left + si * bar)}" y="{_f(top)}" width="{_f(bar)}" '
                  f'height="{_f(c.y0 - top)}" fill="{PALETTE[si % len(PALETTE)]}"/>')
        c.text(c.x0 + (ci + 0.5) * slot, c.y0 + 17, cat)
    c.legend([label for label, _ in series])
    return c.render()


def signed_bar_chart(title: str, labels: Sequence[str], values: Sequence[float], note: str) -> str:
    """Horizontal bars left/right of zero, drawn in the given order."""
    c = _Canvas(title)
    span = max([abs(v) for v in values] + [1e-9]) * 1.1
    mid = (c.x0 + 60 + c.x1) / 2
    half = (c.x1 - c.x0 - 60) / 2

    def sx(v):
        return mid + v / span * half

    rowh = (c.y0 - c.y1) / max(len(labels), 1)
    c.line(mid, c.y1, mid, c.y0, stroke="#444444")
    for i, (label, v) in enumerate(zip(labels, values)):
        y = c.y1 + i * rowh + rowh * 0.15
        x_left = min(sx(v), mid)
        color = "#2ca02c" if v >= 0 else "#d62728"
        c.add(f'<rect x="{_f(x_left)}" y="{_f(y)}" width="{_f(abs(sx(v) - mid))}" '
              f'height="{_f(rowh * 0.7)}" fill="{color}"/>')
        c.text(c.x0 + 50, y + rowh * 0.45, label, anchor="end")
        c.text(c.x1 + 10, y + rowh * 0.45, f"{v:+.4f}", anchor="start")
    c.text((c.x0 + c.x1) / 2, HEIGHT - 15, note)
    return c.render()
