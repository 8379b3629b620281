"""Deterministic CSV and minimal SVG writers."""

from __future__ import annotations

import math
import os

import numpy as np


def format_cell(v) -> str:
    """17 significant digits for floats, empty cell for NaN/None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else "%.17g" % v
    return str(v)


def write_csv(path: str, columns, rows, header_text: str = "", title: str = "") -> str:
    """Write a CSV with ``#``-prefixed provenance header lines; returns the path."""
    lines = []
    if title:
        lines.append(f"# {title}")
    for ln in header_text.splitlines():
        lines.append(f"# {ln}" if ln else "#")
    lines.append(",".join(columns))
    for r in rows:
        lines.append(",".join(format_cell(v) for v in r))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_svg(path: str, series: dict, xlabel: str = "t", ylabel: str = "", width: int = 640, height: int = 400) -> str:
    """Polyline plot of ``{label: (x, y)}``; NaN values break a line."""
    pad = 50
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()]) if series else np.zeros(1)
    ok = np.isfinite(ys)
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = (float(np.min(ys[ok])), float(np.max(ys[ok]))) if ok.any() else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    sx = lambda x: pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda y: height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>',
    ]
    for i, (label, (x, y)) in enumerate(series.items()):
        color = palette[i % len(palette)]
        seg = []
        for xi, yi in zip(np.asarray(x, float), np.asarray(y, float)):
            if not math.isfinite(yi):
                if len(seg) > 1:
                    out.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(seg)}"/>')
                seg = []
                continue
            seg.append(f"{sx(xi):.2f},{sy(yi):.2f}")
        if len(seg) > 1:
            out.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(seg)}"><title>{label}</title></polyline>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path
