"""Deterministic SVG export of masks and level-line overlays.

Plain string assembly with fixed decimal formatting: the same inputs
render to the same bytes on any platform, so images can be diffed and
kept alongside result tables.  No raster dependencies.
"""

from __future__ import annotations

import numpy as np

from .excursion import ExcursionMask
from .geometry import Box, level_set_segments

Array = np.ndarray

_GOLDEN = 0.6180339887498949


def _hsv_hex(h: float, s: float, v: float) -> str:
    i = int(h * 6.0) % 6
    f = h * 6.0 - int(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - f * s)
    t = v * (1.0 - (1.0 - f) * s)
    r, g, b = ((v, t, p), (q, v, p), (p, v, t),
               (p, q, v), (t, p, v), (v, p, q))[i]
    return "#{:02x}{:02x}{:02x}".format(
        round(r * 255.0), round(g * 255.0), round(b * 255.0))


def component_color(label: int) -> str:
    """Stable distinct fill for a component id (golden-ratio hue steps)."""
    return _hsv_hex((label * _GOLDEN) % 1.0, 0.55, 0.85)


def level_color(index: int) -> str:
    """Stroke color for the index-th level of an overlay."""
    return _hsv_hex((0.12 + index * _GOLDEN) % 1.0, 0.85, 0.62)


def _fmt(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return s if s else "0"


def _svg_open(width: float, height: float) -> str:
    return ('<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{_fmt(width)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">')


def _rect(x: float, y: float, w: float, h: float, fill: str) -> str:
    return (f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}"/>')


def _row_runs(row: Array):
    """(start, stop, value) runs of a 1-d array."""
    n = row.size
    cuts = np.flatnonzero(row[1:] != row[:-1]) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [n]])
    return zip(starts, stops, row[starts])


def mask_svg(mask: ExcursionMask, cell_px: float = 6.0) -> str:
    """Open cells colored by component, margin grayed, grid y up."""
    ny, nx = mask.open.shape
    s = float(cell_px)
    out = [_svg_open(nx * s, ny * s), "<title>excursion mask</title>",
           _rect(0, 0, nx * s, ny * s, "#f8f8f8")]
    if mask.margin > 0:
        out.append(_rect(mask.trusted_nx * s, 0, min(mask.margin, nx) * s,
                         ny * s, "#e4e4e4"))
    for r in range(ny):
        y = (ny - 1 - r) * s
        for c0, c1, v in _row_runs(mask.labels[r]):
            if v != 0:
                out.append(_rect(c0 * s, y, (c1 - c0) * s, s,
                                 component_color(int(v))))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _gray(norm: float) -> str:
    lum = round(245.0 - 170.0 * norm)
    return "#{0:02x}{0:02x}{0:02x}".format(lum)


def heatmap_svg(grid: Array, spacing: float, levels=(),
                box: Box | None = None, cell_px: float = 6.0) -> str:
    """Grayscale node heatmap with level lines drawn on top.

    Grid values map dark-high on a 32-shade ramp (runs of equal shade are
    merged into one rect); each level gets its own stroke color.  When a
    box is given the level lines are clipped to it and its outline is
    drawn; the heatmap always shows the whole grid.
    """
    g = np.asarray(grid, dtype=np.float64)
    ny, nx = g.shape
    s = float(cell_px)
    lo, hi = float(g.min()), float(g.max())
    if hi > lo:
        shade = np.round((g - lo) / (hi - lo) * 31.0) / 31.0
    else:
        shade = np.full_like(g, 0.5)
    out = [_svg_open(nx * s, ny * s), "<title>field heatmap</title>"]
    for r in range(ny):
        y = (ny - 1 - r) * s
        for c0, c1, v in _row_runs(shade[r]):
            out.append(_rect(c0 * s, y, (c1 - c0) * s, s, _gray(float(v))))
    if box is not None:
        out.append(f'<rect x="{_fmt(box.col0 * s)}" '
                   f'y="{_fmt((ny - 1 - box.row0 - box.nrows) * s)}" '
                   f'width="{_fmt(box.ncols * s)}" '
                   f'height="{_fmt(box.nrows * s)}" fill="none" '
                   'stroke="#333333" stroke-dasharray="3 2"/>')
    h = float(spacing)
    width = _fmt(max(s / 3.0, 0.6))
    for i, u in enumerate(levels):
        color = level_color(i)
        for x0, y0, x1, y1 in level_set_segments(g, float(u), h, box):
            # grid-length units back to node indices, then pixel centers
            px = [(x0 / h + 0.5) * s, (ny - 0.5 - y0 / h) * s,
                  (x1 / h + 0.5) * s, (ny - 0.5 - y1 / h) * s]
            out.append(f'<line x1="{_fmt(px[0])}" y1="{_fmt(px[1])}" '
                       f'x2="{_fmt(px[2])}" y2="{_fmt(px[3])}" '
                       f'stroke="{color}" stroke-width="{width}" '
                       'stroke-linecap="round"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
