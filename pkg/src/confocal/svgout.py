"""Deterministic SVG 1.1 rendering of simple planar scenes.

Scenes hold world-coordinate primitives (polylines, circles, ellipses,
point markers) in insertion order; rendering fits the viewBox to the
scene extents with a 5% margin and emits elements in that same order, so
identical scenes produce byte-identical documents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyScene, InvalidParameters

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        raise InvalidParameters("non-finite coordinate in scene")
    s = f"{float(x):.6g}"
    return "0" if s == "-0" else s


@dataclass
class Scene:
    """Ordered collection of drawable primitives in world coordinates
    (y axis pointing up)."""

    elements: list = field(default_factory=list)

    def add_polyline(self, points, closed: bool = False, color: str = "#1f77b4",
                     width: float = 1.0):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise InvalidParameters("polyline needs at least two 2d points")
        self.elements.append(("polyline", pts, closed, color, width))

    def add_circle(self, center, radius: float, color: str = "#2ca02c",
                   width: float = 1.0):
        if radius <= 0:
            raise InvalidParameters("circle radius must be positive")
        self.elements.append(("circle", np.asarray(center, dtype=float),
                              float(radius), color, width))

    def add_ellipse(self, center, rx: float, ry: float, color: str = "#1f77b4",
                    width: float = 1.0):
        if rx <= 0 or ry <= 0:
            raise InvalidParameters("ellipse semiaxes must be positive")
        self.elements.append(("ellipse", np.asarray(center, dtype=float),
                              float(rx), float(ry), color, width))

    def add_points(self, points, color: str = "#d62728"):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != 2:
            raise InvalidParameters("points must be 2d")
        self.elements.append(("points", pts, color))

    def _extents(self):
        los, his = [], []
        for el in self.elements:
            kind = el[0]
            if kind in ("polyline", "points"):
                pts = el[1]
                los.append(pts.min(axis=0))
                his.append(pts.max(axis=0))
            elif kind == "circle":
                c, r = el[1], el[2]
                los.append(c - r)
                his.append(c + r)
            elif kind == "ellipse":
                c, rx, ry = el[1], el[2], el[3]
                los.append(c - (rx, ry))
                his.append(c + (rx, ry))
        lo = np.min(los, axis=0)
        hi = np.max(his, axis=0)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidParameters("non-finite scene extents")
        return lo, hi


def render_svg(scene: Scene, pixel_width: int = 640) -> str:
    """SVG 1.1 document string for the scene; viewBox fits the extents
    with a 5% margin on each side."""
    if not scene.elements:
        raise EmptyScene("nothing to draw")
    lo, hi = scene._extents()
    span = np.maximum(hi - lo, 1e-9)
    margin = 0.05 * max(span)
    lo = lo - margin
    hi = hi + margin
    w, h = hi - lo
    # world y points up; flip into SVG's downward y axis
    vb = f"{_fmt(lo[0])} {_fmt(-hi[1])} {_fmt(w)} {_fmt(h)}"
    stroke_scale = w / pixel_width
    marker_r = 0.008 * max(w, h)

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{pixel_width}" height="{_fmt(pixel_width * h / w)}" '
           f'viewBox="{vb}">']
    for el in scene.elements:
        kind = el[0]
        if kind == "polyline":
            _, pts, closed, color, width = el
            coords = " ".join(f"{_fmt(p[0])},{_fmt(-p[1])}" for p in pts)
            tag = "polygon" if closed else "polyline"
            out.append(f'<{tag} points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="{_fmt(width * stroke_scale)}"/>')
        elif kind == "circle":
            _, c, r, color, width = el
            out.append(f'<circle cx="{_fmt(c[0])}" cy="{_fmt(-c[1])}" '
                       f'r="{_fmt(r)}" fill="none" stroke="{color}" '
                       f'stroke-width="{_fmt(width * stroke_scale)}"/>')
        elif kind == "ellipse":
            _, c, rx, ry, color, width = el
            out.append(f'<ellipse cx="{_fmt(c[0])}" cy="{_fmt(-c[1])}" '
                       f'rx="{_fmt(rx)}" ry="{_fmt(ry)}" fill="none" '
                       f'stroke="{color}" '
                       f'stroke-width="{_fmt(width * stroke_scale)}"/>')
        elif kind == "points":
            _, pts, color = el
            for p in pts:
                out.append(f'<circle cx="{_fmt(p[0])}" cy="{_fmt(-p[1])}" '
                           f'r="{_fmt(marker_r)}" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def palette(i: int) -> str:
    return _PALETTE[i % len(_PALETTE)]
