"""Standalone SVG scatter plots, no plotting library.

Output is deterministic: same points, same bytes. Log-log plots silently
drop non-positive coordinates but keep count and annotate the document, so
a zero-loss point is visible as a note instead of vanishing quietly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 55

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f")


@dataclass
class SvgStyle:
    title: str = ""
    xlabel: str = "loss 1"
    ylabel: str = "loss 2"
    marker_radius: float = 3.0


def split_plottable(points, scale: str):
    """Partition points by plottability; log scales reject non-positive."""
    kept = []
    dropped = 0
    for x, y, series in points:
        if scale == "loglog" and (x <= 0.0 or y <= 0.0):
            dropped += 1
        else:
            kept.append((float(x), float(y), str(series)))
    return kept, dropped


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if hi == lo:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.5
        lo, hi = lo - pad, hi + pad
    return np.linspace(lo, hi, n), lo, hi


def _fmt(value: float) -> str:
    return f"{value:.4g}"


def emit_svg(points, scale: str = "linear", style: SvgStyle | None = None) -> str:
    """Scatter plot of (x, y, series) triples as an SVG document string."""
    if scale not in ("linear", "loglog"):
        raise ValueError(f"unknown scale {scale!r}")
    style = style or SvgStyle()
    kept, dropped = split_plottable(points, scale)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if style.title:
        lines.append(f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
                     f'font-size="15" font-family="sans-serif">{style.title}</text>')

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    lines.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
                 f'height="{plot_h}" fill="none" stroke="black"/>')

    if not kept:
        lines.append(f'<text x="{WIDTH // 2}" y="{HEIGHT // 2}" text-anchor="middle" '
                     f'font-size="13" font-family="sans-serif" fill="#b00">'
                     f'warning: no plottable points</text>')
    else:
        xs = np.array([p[0] for p in kept])
        ys = np.array([p[1] for p in kept])
        if scale == "loglog":
            xs, ys = np.log10(xs), np.log10(ys)
        xticks, xlo, xhi = _nice_ticks(xs.min(), xs.max())
        yticks, ylo, yhi = _nice_ticks(ys.min(), ys.max())

        def px(x):
            return MARGIN_L + (x - xlo) / (xhi - xlo) * plot_w

        def py(y):
            return MARGIN_T + plot_h - (y - ylo) / (yhi - ylo) * plot_h

        for tx in xticks:
            x = px(tx)
            label = _fmt(10.0 ** tx) if scale == "loglog" else _fmt(tx)
            lines.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + plot_h}" '
                         f'x2="{x:.2f}" y2="{MARGIN_T + plot_h + 5}" stroke="black"/>')
            lines.append(f'<text x="{x:.2f}" y="{MARGIN_T + plot_h + 18}" '
                         f'text-anchor="middle" font-size="11" '
                         f'font-family="sans-serif">{label}</text>')
        for ty in yticks:
            y = py(ty)
            label = _fmt(10.0 ** ty) if scale == "loglog" else _fmt(ty)
            lines.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" '
                         f'x2="{MARGIN_L}" y2="{y:.2f}" stroke="black"/>')
            lines.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" '
                         f'text-anchor="end" font-size="11" '
                         f'font-family="sans-serif">{label}</text>')

        series_names = []
        for _, _, s in kept:
            if s not in series_names:
                series_names.append(s)
        colors = {s: PALETTE[i % len(PALETTE)] for i, s in enumerate(series_names)}
        for (x, y, s) in zip(xs, ys, (p[2] for p in kept)):
            lines.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" '
                         f'r="{style.marker_radius}" fill="{colors[s]}" '
                         f'fill-opacity="0.8"/>')
        for i, s in enumerate(series_names):
            ly = MARGIN_T + 14 + i * 18
            lx = WIDTH - MARGIN_R + 14
            lines.append(f'<circle cx="{lx}" cy="{ly - 4}" r="4" fill="{colors[s]}"/>')
            lines.append(f'<text x="{lx + 10}" y="{ly}" font-size="12" '
                         f'font-family="sans-serif">{s}</text>')

    lines.append(f'<text x="{MARGIN_L + plot_w // 2}" y="{HEIGHT - 12}" '
                 f'text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif">{style.xlabel}</text>')
    lines.append(f'<text x="18" y="{MARGIN_T + plot_h // 2}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif" '
                 f'transform="rotate(-90 18 {MARGIN_T + plot_h // 2})">'
                 f'{style.ylabel}</text>')
    if dropped:
        lines.append(f'<text x="{MARGIN_L}" y="{MARGIN_T - 8}" font-size="11" '
                     f'font-family="sans-serif" fill="#b00">dropped {dropped} '
                     f'non-positive point(s)</text>')
    lines.append(f'<!-- dropped={dropped} -->')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
