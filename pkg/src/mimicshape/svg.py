"""Minimal SVG writers for importance heatmaps and shapelet polylines."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

CELL = 6
MARGIN = 40


def _doc(width: int, height: int, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        "<!-- mimicshape -->\n"
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def heatmap_svg(values: np.ndarray, title: str = "") -> str:
    """Grayscale grid, one cell per (dimension, time step); darker means more important."""
    V, T = values.shape
    width = MARGIN + T * CELL + 10
    height = MARGIN + V * CELL + 30
    body = [f"<title>{escape(title)}</title>"]
    for v in range(V):
        for t in range(T):
            g = int(round(255 * (1.0 - float(np.clip(values[v, t], 0.0, 1.0)))))
            body.append(
                f'<rect x="{MARGIN + t * CELL}" y="{MARGIN + v * CELL}" width="{CELL}" height="{CELL}" '
                f'fill="rgb({g},{g},{g})"/>'
            )
    body.append(f'<text x="{MARGIN}" y="{MARGIN + V * CELL + 20}" font-size="12">time (0..{T - 1})</text>')
    body.append(
        f'<text x="12" y="{MARGIN + V * CELL // 2}" font-size="12" '
        f'transform="rotate(-90 12 {MARGIN + V * CELL // 2})">dimension (0..{V - 1})</text>'
    )
    if title:
        body.append(f'<text x="{MARGIN}" y="20" font-size="14">{escape(title)}</text>')
    return _doc(width, height, body)


def polyline_svg(values: np.ndarray, title: str, width: int = 320, height: int = 160) -> str:
    """Values in (0, 1] drawn left to right; ``title`` goes into a <title> element."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    plot_w, plot_h = width - 2 * 20, height - 2 * 20
    xs = 20 + (np.arange(n) * plot_w / max(n - 1, 1))
    ys = 20 + (1.0 - np.clip(values, 0.0, 1.0)) * plot_h
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    body = [
        f"<title>{escape(title)}</title>",
        f'<rect x="20" y="20" width="{plot_w}" height="{plot_h}" fill="none" stroke="#ccc"/>',
        f'<polyline points="{points}" fill="none" stroke="black" stroke-width="1.5"/>',
    ]
    return _doc(width, height, body)


def write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
