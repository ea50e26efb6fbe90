"""Minimal single-file SVG line/scatter plots (no plotting dependency).

CSV is the authoritative experiment output; these plots are a convenience
rendering of one or more series against a common abscissa.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 720, 460
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 160, 40, 50
_COLORS = ["#1f6fb2", "#d1495b", "#2e8b57", "#8456a8", "#c77d2b", "#3a3a3a"]


def _nice_ticks(lo, hi, target=5):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0, 1.0]
    if hi <= lo:
        hi = lo + (abs(lo) if lo else 1.0)
    span = hi - lo
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks or [lo, hi]


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.6g}"


def line_plot(path, xs, series, title="", xlabel="", ylabel="", logy=False):
    """Write an SVG plot of ``series`` ({label: ys}) against ``xs``."""
    xs = [float(v) for v in xs]
    data = {}
    for label, ys in series.items():
        pts = [(x, float(y)) for x, y in zip(xs, ys)
               if y is not None and math.isfinite(float(y))
               and (not logy or float(y) > 0.0)]
        if pts:
            data[label] = pts
    if not data:
        raise ValueError("nothing to plot")

    def ty(v):
        return math.log10(v) if logy else v

    all_x = [p[0] for pts in data.values() for p in pts]
    all_y = [ty(p[1]) for pts in data.values() for p in pts]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi, y_lo = y_hi + 0.5, y_lo - 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x):
        return _MARGIN_L + plot_w * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        return _MARGIN_T + plot_h * (1.0 - (ty(y) - y_lo) / (y_hi - y_lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
           f'height="{_HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
           f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
           f'height="{plot_h}" fill="none" stroke="#888"/>']
    if title:
        out.append(f'<text x="{_WIDTH / 2}" y="24" text-anchor="middle" '
                   f'font-size="15">{title}</text>')

    for t in _nice_ticks(x_lo, x_hi):
        if x_lo <= t <= x_hi:
            out.append(f'<line x1="{px(t):.1f}" y1="{_MARGIN_T + plot_h}" '
                       f'x2="{px(t):.1f}" y2="{_MARGIN_T + plot_h + 5}" stroke="#333"/>')
            out.append(f'<text x="{px(t):.1f}" y="{_MARGIN_T + plot_h + 18}" '
                       f'text-anchor="middle">{_fmt(t)}</text>')
    y_ticks = _nice_ticks(y_lo, y_hi)
    for t in y_ticks:
        if y_lo <= t <= y_hi:
            val = 10.0 ** t if logy else t
            ypix = _MARGIN_T + plot_h * (1.0 - (t - y_lo) / (y_hi - y_lo))
            out.append(f'<line x1="{_MARGIN_L - 5}" y1="{ypix:.1f}" '
                       f'x2="{_MARGIN_L}" y2="{ypix:.1f}" stroke="#333"/>')
            out.append(f'<text x="{_MARGIN_L - 8}" y="{ypix + 4:.1f}" '
                       f'text-anchor="end">{_fmt(val)}</text>')
    if xlabel:
        out.append(f'<text x="{_MARGIN_L + plot_w / 2}" y="{_HEIGHT - 12}" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{_MARGIN_T + plot_h / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {_MARGIN_T + plot_h / 2})">{ylabel}</text>')

    for i, (label, pts) in enumerate(data.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline points="{coords}" fill="none" '
                       f'stroke="{color}" stroke-width="1.8"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" '
                       f'fill="{color}"/>')
        ly = _MARGIN_T + 16 + 18 * i
        lx = _MARGIN_L + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{label}</text>')

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
