"""Minimal SVG plots: line plots, Bloch-disc trajectories and flux fields.

Only what the CLI needs. Output is plain text, deterministic for identical input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

WIDTH = 480
HEIGHT = 360
MARGIN = 50


@dataclass
class Series:
    x: Sequence[float]
    y: Sequence[float]
    color: str = "black"
    label: str = ""


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _header(width=WIDTH, height=HEIGHT) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def line_plot(series: Sequence[Series], xlabel: str = "", ylabel: str = "", title: str = "") -> str:
    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = np.concatenate([np.asarray(s.y, float) for s in series])
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    out = _header()
    out.append(
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for v in (x0, x1):
        out.append(f'<text x="{_fmt(px(v))}" y="{HEIGHT - MARGIN + 15}" font-size="10" text-anchor="middle">{v:.3g}</text>')
    for v in (y0, y1):
        out.append(f'<text x="{MARGIN - 4}" y="{_fmt(py(v))}" font-size="10" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="20" font-size="13" text-anchor="middle">{title}</text>')
    for n, s in enumerate(series):
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(s.x, s.y) if np.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"/>')
        if s.label:
            out.append(
                f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 14 + 14 * n}" font-size="11" '
                f'text-anchor="end" fill="{s.color}">{s.label}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _disc_frame(radius_px: float, cx: float, cy: float) -> list[str]:
    return [
        f'<circle cx="{cx}" cy="{cy}" r="{radius_px}" fill="none" stroke="gray"/>',
        f'<line x1="{cx - radius_px}" y1="{cy}" x2="{cx + radius_px}" y2="{cy}" stroke="lightgray"/>',
        f'<line x1="{cx}" y1="{cy - radius_px}" x2="{cx}" y2="{cy + radius_px}" stroke="black"/>',
        f'<text x="{cx + radius_px + 4}" y="{cy + 4}" font-size="11">r_x</text>',
        f'<text x="{cx + 4}" y="{cy - radius_px - 4}" font-size="11">r_z</text>',
    ]


def disc_trajectory(
    legs: Sequence[tuple[np.ndarray, str]], title: str = "", extent: float = 1.5
) -> str:
    """Trajectory segments in the x-z plane; each leg is ``(states (n, 3), color)``."""
    cx, cy = WIDTH / 2, HEIGHT / 2
    scale = (min(WIDTH, HEIGHT) / 2 - 20) / extent
    out = _header() + _disc_frame(scale, cx, cy)
    if title:
        out.append(f'<text x="{cx}" y="16" font-size="13" text-anchor="middle">{title}</text>')
    for states, color in legs:
        states = np.asarray(states, float)
        pts = " ".join(f"{_fmt(cx + scale * x)},{_fmt(cy - scale * z)}" for x, _, z in states)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def flux_field(points: Sequence[tuple[float, float, float]], title: str = "") -> str:
    """Dots on the x-z disc coloured by the sign and size of the flux."""
    cx, cy = WIDTH / 2, HEIGHT / 2
    scale = min(WIDTH, HEIGHT) / 2 - 30
    vmax = max((abs(f) for _, _, f in points), default=0.0) or 1.0
    out = _header() + _disc_frame(scale, cx, cy)
    if title:
        out.append(f'<text x="{cx}" y="16" font-size="13" text-anchor="middle">{title}</text>')
    for rx, rz, f in points:
        level = int(round(255 * (1 - abs(f) / vmax)))
        color = f"rgb(255,{level},{level})" if f > 0 else f"rgb({level},{level},255)"
        out.append(f'<circle cx="{_fmt(cx + scale * rx)}" cy="{_fmt(cy - scale * rz)}" r="2.5" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
