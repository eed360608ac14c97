"""Minimal self-contained SVG emission for fronts and trajectories.

CSV is the canonical output of the reporting commands; these plots are a thin
staircase/line renderer with no styling contract, kept dependency-free and
byte-deterministic.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _staircase(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(points)
    out: list[tuple[float, float]] = []
    for i, (x, y) in enumerate(pts):
        if i > 0:
            out.append((x, pts[i - 1][1]))
        out.append((x, y))
    return out


def render_svg(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    path: str | Path,
    staircase: bool = False,
    width: int = 640,
    height: int = 440,
    title: str = "",
) -> Path:
    """Write labeled polylines to an SVG file and return its path."""
    margin = 50.0
    all_points = [p for _, pts in series for p in pts]
    if not all_points:
        raise ValueError("nothing to plot")
    xs = [p[0] for p in all_points]
    ys = [p[1] for p in all_points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def to_px(x: float, y: float) -> tuple[float, float]:
        px = margin + (x - x_lo) / x_span * (width - 2 * margin)
        py = height - margin - (y - y_lo) / y_span * (height - 2 * margin)
        return round(px, 2), round(py, 2)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#999"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2}" y="20" text-anchor="middle" '
            f'font-size="13">{title}</text>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" '
        f'font-size="11">{x_lo:.4g} .. {x_hi:.4g}</text>'
    )
    parts.append(
        f'<text x="12" y="{height / 2}" font-size="11" '
        f'transform="rotate(-90 12 {height / 2})" text-anchor="middle">'
        f"{y_lo:.4g} .. {y_hi:.4g}</text>"
    )
    for idx, (label, points) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        plotted = _staircase(points) if staircase else list(points)
        coords = " ".join(f"{to_px(x, y)[0]},{to_px(x, y)[1]}" for x, y in plotted)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 14 * idx + 10}" '
            f'font-size="10" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return out
