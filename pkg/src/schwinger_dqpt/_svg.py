"""Tiny hand-rolled SVG plotting for the CLI.

Decorative output only: everything quantitative goes through CSV/JSON.
No external tooling, just string assembly.
"""

from __future__ import annotations

import numpy as np

__all__ = ["line_plot", "heatmap"]

_PALETTE = ("#3b6bd6", "#d64f3b", "#2e9e57", "#8a58c9", "#c98a1d", "#4fb6c9")

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 20, 34, 48


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def line_plot(path: str, curves, title: str = "", xlabel: str = "",
              ylabel: str = "") -> None:
    """Write a multi-curve line plot. curves = [(label, xs, ys), ...]."""
    xs_all = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in curves])
    ys_all = np.concatenate([np.asarray(y, dtype=float) for _, _, y in curves])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    iw, ih = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + iw * (x - x0) / (x1 - x0)

    def py(y):
        return _MT + ih * (1.0 - (y - y0) / (y1 - y0))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{iw}" height="{ih}" fill="none" stroke="#444"/>',
    ]
    if title:
        parts.append(f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for tx in _ticks(x0, x1):
        parts.append(f'<line x1="{px(tx)}" y1="{_MT + ih}" x2="{px(tx)}" y2="{_MT + ih + 5}" stroke="#444"/>')
        parts.append(f'<text x="{px(tx)}" y="{_MT + ih + 18}" text-anchor="middle">{_fmt(tx)}</text>')
    for ty in _ticks(y0, y1):
        parts.append(f'<line x1="{_ML - 5}" y1="{py(ty)}" x2="{_ML}" y2="{py(ty)}" stroke="#444"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py(ty) + 4}" text-anchor="end">{_fmt(ty)}</text>')
    if xlabel:
        parts.append(f'<text x="{_ML + iw / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{_MT + ih / 2}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {_MT + ih / 2})">{ylabel}</text>')
    for k, (label, xs, ys) in enumerate(curves):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MT + 14 + 16 * k
        parts.append(f'<line x1="{_ML + iw - 130}" y1="{ly}" x2="{_ML + iw - 110}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_ML + iw - 104}" y="{ly + 4}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _ramp(v: float) -> str:
    """0..1 -> dark violet / teal / yellow, a rough perceptual ramp."""
    stops = ((68, 1, 84), (33, 145, 140), (253, 231, 37))
    v = min(max(v, 0.0), 1.0)
    if v < 0.5:
        a, b, f = stops[0], stops[1], v / 0.5
    else:
        a, b, f = stops[1], stops[2], (v - 0.5) / 0.5
    rgb = tuple(round(x + (y - x) * f) for x, y in zip(a, b))
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def heatmap(path: str, v1s, v2s, values, title: str = "",
            xlabel: str = "", ylabel: str = "", marker=None) -> None:
    """Write a grid heatmap; v1s indexes rows (y axis), v2s columns (x)."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = (hi - lo) or 1.0
    iw, ih = _W - _ML - _MR, _H - _MT - _MB
    n1, n2 = values.shape
    cw, ch = iw / n2, ih / n1
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for i in range(n1):
        for j in range(n2):
            x = _ML + j * cw
            y = _MT + ih - (i + 1) * ch
            color = _ramp((values[i, j] - lo) / span)
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw + 0.5:.2f}" '
                         f'height="{ch + 0.5:.2f}" fill="{color}"/>')
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{iw}" height="{ih}" fill="none" stroke="#444"/>')
    for frac in (0.0, 0.5, 1.0):
        j = frac * (n2 - 1) if n2 > 1 else 0
        i = frac * (n1 - 1) if n1 > 1 else 0
        parts.append(f'<text x="{_ML + (j + 0.5) * cw:.1f}" y="{_MT + ih + 18}" '
                     f'text-anchor="middle">{_fmt(float(v2s[int(j)]))}</text>')
        parts.append(f'<text x="{_ML - 8}" y="{_MT + ih - (i + 0.5) * ch + 4:.1f}" '
                     f'text-anchor="end">{_fmt(float(v1s[int(i)]))}</text>')
    if xlabel:
        parts.append(f'<text x="{_ML + iw / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{_MT + ih / 2}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {_MT + ih / 2})">{ylabel}</text>')
    if marker is not None:
        mi, mj = marker
        x = _ML + (mj + 0.5) * cw
        y = _MT + ih - (mi + 0.5) * ch
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="none" '
                     f'stroke="white" stroke-width="2"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
