"""Standalone SVG renderings of diagrams, barcodes, landscapes, Betti curves and TSI."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .persistence import PersistenceDiagram

__all__ = ["diagram_svg", "barcode_svg", "landscape_svg", "betti_svg", "tsi_svg", "PLOT_KINDS"]

PLOT_KINDS = ("diagram", "barcode", "landscape", "betti", "tsi")

W, H, PAD = 480, 360, 40
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _doc(body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"4\" "
        "orient=\"auto\"><path d=\"M0,0 L8,4 L0,8 z\" fill=\"#333\"/></marker></defs>",
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    )
    return "\n".join(list(head) + body + ["</svg>"]) + "\n"


def _no_features(title: str) -> str:
    return _doc([f'<text class="empty" x="{W / 2}" y="{H / 2}" text-anchor="middle" '
                 f'font-size="13">no features</text>'], title)


def _axes(xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="#333"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="#333"/>',
        f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="12" y="{H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {H / 2})">{escape(ylabel)}</text>',
    ]


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _top(dgm: PersistenceDiagram) -> float:
    finite = [p.death for p in dgm.pairs if not p.is_essential] + [p.birth for p in dgm.pairs]
    top = dgm.filtration_max if math.isfinite(dgm.filtration_max) else 0.0
    return max([top] + finite) or 1.0


def diagram_svg(dgm: PersistenceDiagram, title: str = "persistence diagram") -> str:
    """Birth/death scatter with the diagonal; essential points sit on the top edge."""
    top = _top(dgm) * 1.05
    sx = _scale(0, top, PAD, W - PAD)
    sy = _scale(0, top, H - PAD, PAD)
    body = _axes("birth", "death")
    body.append(f'<line class="diagonal" x1="{_fmt(sx(0))}" y1="{_fmt(sy(0))}" '
                f'x2="{_fmt(sx(top))}" y2="{_fmt(sy(top))}" stroke="#999" stroke-dasharray="4,3"/>')
    if not dgm.pairs:
        body.append(f'<text class="empty" x="{W / 2}" y="{H / 2}" text-anchor="middle">no features</text>')
    for p in dgm.pairs:
        y = PAD if p.is_essential else sy(p.death)
        cls = "essential" if p.is_essential else "point"
        body.append(f'<circle class="{cls} dim{p.dim}" cx="{_fmt(sx(p.birth))}" cy="{_fmt(y)}" r="3" '
                    f'fill="{COLORS[p.dim % len(COLORS)]}"/>')
    return _doc(body, title)


def barcode_svg(dgm: PersistenceDiagram, title: str = "persistence barcode") -> str:
    """One horizontal bar per pair, grouped by dimension and sorted by birth."""
    if not dgm.pairs:
        return _no_features(title)
    top = _top(dgm)
    edge = W - PAD
    sx = _scale(0, top, PAD, edge - 10)
    bars = sorted(dgm.pairs, key=lambda p: (p.dim, p.birth, p.death))
    step = (H - 2 * PAD) / max(len(bars), 1)
    body = _axes("scale", "features")
    for i, p in enumerate(bars):
        y = PAD + (i + 0.5) * step
        color = COLORS[p.dim % len(COLORS)]
        if p.is_essential:
            body.append(f'<line class="bar essential dim{p.dim}" x1="{_fmt(sx(p.birth))}" y1="{_fmt(y)}" '
                        f'x2="{edge}" y2="{_fmt(y)}" stroke="{color}" stroke-width="2" '
                        f'marker-end="url(#arrow)"/>')
        else:
            body.append(f'<line class="bar dim{p.dim}" x1="{_fmt(sx(p.birth))}" y1="{_fmt(y)}" '
                        f'x2="{_fmt(sx(p.death))}" y2="{_fmt(y)}" stroke="{color}" stroke-width="2"/>')
    return _doc(body, title)


def _curves(xs, rows, title, ylabel, cls) -> str:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return _no_features(title)
    ymax = float(rows.max()) if rows.size else 0.0
    sx = _scale(float(xs.min()), float(xs.max()), PAD, W - PAD)
    sy = _scale(0.0, ymax or 1.0, H - PAD, PAD)
    body = _axes("scale" if cls != "tsi" else "window", ylabel)
    if ymax == 0 and cls != "tsi":
        body.append(f'<text class="empty" x="{W / 2}" y="{H / 2}" text-anchor="middle">no features</text>')
    for r, row in enumerate(rows):
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, row))
        body.append(f'<polyline class="{cls}" points="{pts}" fill="none" '
                    f'stroke="{COLORS[r % len(COLORS)]}" stroke-width="1.5"/>')
    return _doc(body, title)


def landscape_svg(land, title: str = "persistence landscape") -> str:
    return _curves(land.grid, land.values, title, "lambda", "landscape")


def betti_svg(curve, title: str = "Betti curve") -> str:
    return _curves(curve.grid, curve.counts, title, f"beta_{curve.dim}", "betti")


def tsi_svg(records, title: str = "topological stability index") -> str:
    """``records``: indicator dicts with ``tsi`` (and ``ntsi``) per window."""
    if not records:
        return _no_features(title)
    xs = np.arange(len(records))
    rows = [[r["tsi"] for r in records]]
    return _curves(xs, rows, title, "TSI", "tsi")
