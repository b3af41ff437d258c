"""Minimal deterministic SVG plots (lines, bars, scatter) for the report
writer.  No external plotting dependency; identical inputs produce
byte-identical files."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["line_plot", "bar_chart", "scatter_plot"]

W, H = 640, 420
MARGIN = dict(left=62, right=16, top=34, bottom=46)
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo, hi] if hi > lo else [lo - 1, lo + 1]
    span = hi - lo
    raw = span / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks or [lo, hi]


class _Canvas:
    def __init__(self, title, xlabel, ylabel, xlim, ylim):
        self.parts = []
        self.xlim = xlim
        self.ylim = ylim
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">')
        self.parts.append(f'<rect width="{W}" height="{H}" fill="white"/>')
        self.text(W / 2, 18, title, anchor="middle", size=14)
        self.text(W / 2, H - 8, xlabel, anchor="middle", size=12)
        self.parts.append(
            f'<text x="14" y="{H / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 14 {H / 2})" font-family="sans-serif">{ylabel}</text>')
        self._axes()

    def xmap(self, x):
        lo, hi = self.xlim
        frac = (x - lo) / (hi - lo) if hi > lo else 0.5
        return MARGIN["left"] + frac * (W - MARGIN["left"] - MARGIN["right"])

    def ymap(self, y):
        lo, hi = self.ylim
        frac = (y - lo) / (hi - lo) if hi > lo else 0.5
        return H - MARGIN["bottom"] - frac * (H - MARGIN["top"] - MARGIN["bottom"])

    def _axes(self):
        x0, y0 = MARGIN["left"], H - MARGIN["bottom"]
        x1, y1 = W - MARGIN["right"], MARGIN["top"]
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for t in _nice_ticks(*self.xlim):
            if self.xlim[0] <= t <= self.xlim[1]:
                px = self.xmap(t)
                self.parts.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" '
                                  f'y2="{y0 + 4}" stroke="black"/>')
                self.text(px, y0 + 16, _fmt(t), anchor="middle", size=10)
        for t in _nice_ticks(*self.ylim):
            if self.ylim[0] <= t <= self.ylim[1]:
                py = self.ymap(t)
                self.parts.append(f'<line x1="{x0 - 4}" y1="{_fmt(py)}" x2="{x0}" '
                                  f'y2="{_fmt(py)}" stroke="black"/>')
                self.text(x0 - 6, py + 3, _fmt(t), anchor="end", size=10)

    def text(self, x, y, s, anchor="start", size=11, fill="black"):
        self.parts.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
                          f'text-anchor="{anchor}" font-family="sans-serif" '
                          f'fill="{fill}">{_escape(s)}</text>')

    def polyline(self, xs, ys, color, dash=None):
        pts = " ".join(f"{_fmt(self.xmap(x))},{_fmt(self.ymap(y))}"
                       for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="1.5"{extra}/>')

    def circle(self, x, y, color, r=2.5):
        self.parts.append(f'<circle cx="{_fmt(self.xmap(x))}" cy="{_fmt(self.ymap(y))}" '
                          f'r="{r}" fill="{color}" fill-opacity="0.6"/>')

    def rect_data(self, x0, x1, y0, y1, color):
        px0, px1 = self.xmap(x0), self.xmap(x1)
        py0, py1 = self.ymap(y0), self.ymap(y1)
        self.parts.append(f'<rect x="{_fmt(min(px0, px1))}" y="{_fmt(min(py0, py1))}" '
                          f'width="{_fmt(abs(px1 - px0))}" height="{_fmt(abs(py1 - py0))}" '
                          f'fill="{color}" fill-opacity="0.85"/>')

    def legend(self, labels_colors):
        x = MARGIN["left"] + 10
        y = MARGIN["top"] + 6
        for i, (label, color) in enumerate(labels_colors):
            yy = y + 14 * i
            self.parts.append(f'<line x1="{x}" y1="{yy}" x2="{x + 18}" y2="{yy}" '
                              f'stroke="{color}" stroke-width="2"/>')
            self.text(x + 24, yy + 4, label, size=11)

    def save(self, path):
        self.parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(self.parts) + "\n")


def _escape(s):
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def _bounds(arrays, pad=0.05):
    lo = min(float(np.min(a)) for a in arrays if len(a))
    hi = max(float(np.max(a)) for a in arrays if len(a))
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


def line_plot(path, series, title="", xlabel="", ylabel=""):
    """series: ordered dict/list of (label, xs, ys)."""
    items = list(series.items()) if isinstance(series, dict) else list(series)
    xlim = _bounds([xs for _, xs, _ in items], pad=0.0)
    ylim = _bounds([ys for _, _, ys in items])
    canvas = _Canvas(title, xlabel, ylabel, xlim, ylim)
    legend = []
    for k, (label, xs, ys) in enumerate(items):
        color = PALETTE[k % len(PALETTE)]
        canvas.polyline(xs, ys, color, dash="6,3" if k else None)
        legend.append((label, color))
    canvas.legend(legend)
    canvas.save(path)


def bar_chart(path, group_labels, values, title="", xlabel="", ylabel=""):
    """values: ordered mapping label -> list of bar heights per group."""
    items = list(values.items())
    n_groups = len(group_labels)
    n_series = len(items)
    heights = [v for _, vals in items for v in vals if np.isfinite(v)]
    ylim = (min(0.0, min(heights, default=0.0)), max(heights, default=1.0) * 1.1)
    canvas = _Canvas(title, xlabel, ylabel, (0.0, float(n_groups)), ylim)
    width = 0.8 / n_series
    legend = []
    for k, (label, vals) in enumerate(items):
        color = PALETTE[k % len(PALETTE)]
        legend.append((label, color))
        for g, v in enumerate(vals):
            if not np.isfinite(v):
                continue
            x0 = g + 0.1 + k * width
            canvas.rect_data(x0, x0 + width, 0.0, v, color)
    for g, label in enumerate(group_labels):
        canvas.text(canvas.xmap(g + 0.5), H - MARGIN["bottom"] + 16, str(label),
                    anchor="middle", size=10)
    canvas.legend(legend)
    canvas.save(path)


def scatter_plot(path, series, title="", xlabel="", ylabel="", diagonal=True):
    """series: ordered dict/list of (label, xs, ys); optional y=x guide."""
    items = list(series.items()) if isinstance(series, dict) else list(series)
    all_vals = [np.concatenate([xs, ys]) for _, xs, ys in items]
    lim = _bounds(all_vals)
    canvas = _Canvas(title, xlabel, ylabel, lim, lim)
    legend = []
    if diagonal:
        canvas.polyline([lim[0], lim[1]], [lim[0], lim[1]], "#888888", dash="4,4")
    for k, (label, xs, ys) in enumerate(items):
        color = PALETTE[k % len(PALETTE)]
        legend.append((label, color))
        for x, y in zip(xs, ys):
            canvas.circle(x, y, color)
    canvas.legend(legend)
    canvas.save(path)
