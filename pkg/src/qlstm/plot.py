"""Minimal self-contained SVG line charts for loss and prediction CSVs."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .experiment import write_atomic

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e")

# columns drawn for the CSV layouts this package writes
KNOWN_LAYOUTS = {
    ("epoch", "train_loss", "grad_norm", "wall_ms"): ("epoch", ["train_loss"]),
    ("index", "true", "predicted"): ("index", ["true", "predicted"]),
}


class PlotError(ValueError):
    pass


def read_columns(path) -> tuple[str, dict[str, list[float]]]:
    """Return the x column name and numeric series from a headed CSV."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise PlotError(f"{path}: needs a header and at least one data row")
    header = tuple(h.strip() for h in rows[0])
    x_name, y_names = KNOWN_LAYOUTS.get(header, (header[0], list(header[1:])))
    cols: dict[str, list[float]] = {}
    for name in [x_name] + y_names:
        j = header.index(name)
        try:
            cols[name] = [float(r[j]) for r in rows[1:]]
        except (ValueError, IndexError):
            raise PlotError(f"{path}: non-numeric or missing value in column {name!r}") from None
    if not y_names:
        raise PlotError(f"{path}: no series to plot")
    return x_name, cols


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_chart(x: list[float], series: dict[str, list[float]], xlabel: str, ylabel: str, title: str = "") -> str:
    left, right, top, bottom = MARGIN["left"], MARGIN["right"], MARGIN["top"], MARGIN["bottom"]
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom
    x_lo, x_hi = min(x), max(x)
    ys = [v for s in series.values() for v in s]
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{left - 5}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    parts.append(
        f'<text x="{left + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for k, (name, ys_) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, ys_))
        parts.append(f'<polyline class="series" data-name="{escape(name)}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * k
        parts.append(f'<line x1="{left + pw - 110}" y1="{ly}" x2="{left + pw - 90}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw - 85}" y="{ly + 4}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_csv(path, out=None) -> Path:
    """Render a loss.csv / predictions.csv (or any headed numeric CSV) to SVG."""
    x_name, cols = read_columns(path)
    series = {k: v for k, v in cols.items() if k != x_name}
    ylabel = next(iter(series)) if len(series) == 1 else "value"
    out = Path(out) if out is not None else Path(path).with_suffix(".svg")
    write_atomic(out, line_chart(cols[x_name], series, x_name, ylabel, Path(path).name))
    return out
