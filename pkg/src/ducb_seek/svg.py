"""Minimal two-panel SVG line plots (per-step and cumulative regret)."""
from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
PANEL_W, PANEL_H = 520, 300
MARGIN = dict(left=70, right=20, top=36, bottom=46)


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def _panel(series: Mapping[str, Sequence[float]], title: str, x0: float, y0: float) -> list[str]:
    w = PANEL_W - MARGIN["left"] - MARGIN["right"]
    h = PANEL_H - MARGIN["top"] - MARGIN["bottom"]
    left, top = x0 + MARGIN["left"], y0 + MARGIN["top"]
    arrays = {name: np.asarray(v, dtype=float) for name, v in series.items()}
    kmax = max((a.size for a in arrays.values()), default=1)
    finite = [a[np.isfinite(a)] for a in arrays.values()]
    ymax = max((float(a.max()) for a in finite if a.size), default=1.0)
    ymin = min(0.0, min((float(a.min()) for a in finite if a.size), default=0.0))
    yt = _ticks(ymin, ymax)
    ylo, yhi = float(yt[0]), float(max(yt[-1], ymax))
    xt = _ticks(1, max(kmax, 2))

    def sx(k):
        return left + (k - 1) / max(kmax - 1, 1) * w

    def sy(v):
        return top + h - (v - ylo) / (yhi - ylo) * h

    out = [f'<text x="{left + w / 2:.1f}" y="{y0 + 22}" text-anchor="middle" '
           f'font-size="14">{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#333"/>']
    for v in yt:
        y = sy(v)
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left + w}" y2="{y:.1f}" '
                   f'stroke="#ddd"/>')
        out.append(f'<text x="{left - 7}" y="{y + 4:.1f}" text-anchor="end" '
                   f'font-size="11">{_fmt(v)}</text>')
    for v in xt:
        if v > kmax:
            continue
        x = sx(v)
        out.append(f'<line x1="{x:.1f}" y1="{top + h}" x2="{x:.1f}" y2="{top + h + 4}" '
                   f'stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{top + h + 17}" text-anchor="middle" '
                   f'font-size="11">{_fmt(v)}</text>')
    out.append(f'<text x="{left + w / 2:.1f}" y="{top + h + 36}" text-anchor="middle" '
               f'font-size="12">k</text>')
    for i, (name, a) in enumerate(arrays.items()):
        if not a.size:
            continue
        # thin long series to at most ~2 points per pixel column
        stride = max(1, a.size // (2 * w))
        ks = np.arange(1, a.size + 1)[::stride]
        pts = " ".join(f"{sx(k):.1f},{sy(v):.1f}" for k, v in zip(ks, a[::stride])
                       if np.isfinite(v))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + w - 120}" y1="{ly}" x2="{left + w - 100}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + w - 95}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    return out


def regret_svg(per_step: Mapping[str, Sequence[float]],
               cumulative: Mapping[str, Sequence[float]]) -> str:
    width, height = 2 * PANEL_W, PANEL_H
    body = _panel(per_step, "Regret r_k", 0, 0) + _panel(cumulative, "Cumulative regret",
                                                          PANEL_W, 0)
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        *body,
        "</svg>",
    ]) + "\n"
