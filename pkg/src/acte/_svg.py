"""Minimal deterministic SVG line charts (polylines plus shaded band polygons).

No plotting dependency: output is plain SVG text with fixed-precision
coordinates, so identical inputs yield byte-identical files.
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W, _H = 720, 460
_ML, _MR, _MT, _MB = 64, 16, 36, 48


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 10))
        t += step
    return out


def line_chart(x, series, bands=None, title="", x_label="", y_label="") -> str:
    """Render one chart.

    x: shared x values.  series: list of (label, y values).  bands: optional
    list parallel to series of (lower, upper) or None.
    """
    xs = [float(v) for v in x]
    ys_all = [float(v) for _, ys in series for v in ys]
    if bands:
        for band in bands:
            if band is not None:
                ys_all.extend(float(v) for v in band[0])
                ys_all.extend(float(v) for v in band[1])
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v: float) -> float:
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(v: float) -> float:
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    def pt(vx: float, vy: float) -> str:
        return f"{px(vx):.2f},{py(vy):.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for t in _ticks(x_lo, x_hi):
        if x_lo <= t <= x_hi:
            out.append(
                f'<line x1="{px(t):.2f}" y1="{_H - _MB}" x2="{px(t):.2f}" '
                f'y2="{_H - _MB + 4}" stroke="black"/>'
            )
            out.append(
                f'<text x="{px(t):.2f}" y="{_H - _MB + 18}" text-anchor="middle">{t:g}</text>'
            )
    for t in _ticks(y_lo, y_hi):
        if y_lo <= t <= y_hi:
            out.append(
                f'<line x1="{_ML - 4}" y1="{py(t):.2f}" x2="{_ML}" y2="{py(t):.2f}" '
                f'stroke="black"/>'
            )
            out.append(
                f'<text x="{_ML - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:g}</text>'
            )
    out.append(
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>'
    )
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    out.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 10}" text-anchor="middle">{x_label}</text>'
    )
    out.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.0f})">{y_label}</text>'
    )
    for i, (label, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        band = bands[i] if bands else None
        if band is not None:
            lower, upper = band
            pts = [pt(vx, vy) for vx, vy in zip(xs, upper)]
            pts += [pt(vx, vy) for vx, vy in zip(reversed(xs), reversed(list(lower)))]
            out.append(
                f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.18" '
                f'stroke="none"/>'
            )
        pts = " ".join(pt(vx, float(vy)) for vx, vy in zip(xs, ys))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        lx, ly = _W - _MR - 150, _MT + 16 * (i + 1)
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
