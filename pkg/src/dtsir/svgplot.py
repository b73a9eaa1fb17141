"""Minimal hand-written SVG line charts for experiment CSVs.

Output is a pure function of the input rows: no timestamps, fixed number
formatting, groups drawn in sorted order.
"""

import csv
import math
from xml.sax.saxutils import escape

from .errors import InvalidArgumentError

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=120, top=30, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


class PlotDataError(InvalidArgumentError):
    code = "plot-data"
    exit_code = 2


def read_columns(path, x, y, group=None):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for col in (x, y) + ((group,) if group else ()):
            if col not in fields:
                raise InvalidArgumentError(f"column {col!r} not in {path} (have {fields})")
        series = {}
        for lineno, row in enumerate(reader, start=2):
            if row[y] in ("", None) or row[x] in ("", None):
                continue
            try:
                xv, yv = float(row[x]), float(row[y])
            except ValueError as exc:
                raise PlotDataError(f"{path}:{lineno}: {exc}") from None
            key = row[group] if group else y
            series.setdefault(key, []).append((xv, yv))
    if not series:
        raise PlotDataError(f"{path}: no data rows to plot")
    return series


def _mean_by_x(points):
    acc = {}
    for xv, yv in points:
        s = acc.setdefault(xv, [0.0, 0])
        s[0] += yv
        s[1] += 1
    return sorted((xv, s[0] / s[1]) for xv, s in acc.items())


def _ticks(lo, hi, k=5):
    if hi == lo:
        return [lo]
    raw = (hi - lo) / k
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v):
    return f"{v:.4g}"


def render_svg(series, xlabel, ylabel):
    """Render ``{group: [(x, y), ...]}`` as an SVG string.

    Repeated x values within a group are averaged, so a per-replication
    CSV plots as the mean curve.
    """
    curves = {k: _mean_by_x(v) for k, v in sorted(series.items())}
    xs = [p[0] for c in curves.values() for p in c]
    ys = [p[1] for c in curves.values() for p in c]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.2f})">{escape(ylabel)}</text>')
    for i, (name, pts) in enumerate(curves.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = MARGIN["top"] + 14 * i + 10
        lx = MARGIN["left"] + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 16}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 20}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(path, x, y, group=None):
    return render_svg(read_columns(path, x, y, group), x, y)
