"""SVG export: well-formed output, stable bytes, correct geometry hooks."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from shadowlab.excursion import Box
from shadowlab.geometry import level_set_length, level_set_segments
from shadowlab.render import component_color, heatmap_svg, level_color, mask_svg

from tests.test_excursion import mask_from_open


def seg_lengths(segs):
    return np.hypot(segs[:, 2] - segs[:, 0], segs[:, 3] - segs[:, 1])


def test_segments_reproduce_lengths_on_random_grids():
    rng = np.random.default_rng(7)
    for trial in range(25):
        g = rng.normal(size=(9, 11))
        level = float(rng.normal())
        h = float(rng.uniform(0.3, 1.7))
        stats = level_set_length(g, level, h)
        segs = level_set_segments(g, level, h)
        assert segs.shape[1] == 4
        assert len(segs) == stats.n_segments, trial
        total = float(seg_lengths(segs).sum())
        assert total == pytest.approx(stats.length, rel=1e-12, abs=1e-15)


def test_segments_axis_line_coordinates():
    h = 0.5
    xs = np.arange(6) * h
    g = np.tile(xs, (4, 1))
    segs = level_set_segments(g, 1.25, h)
    assert len(segs) == 3
    assert np.allclose(segs[:, 0], 1.25)
    assert np.allclose(segs[:, 2], 1.25)
    ys = np.sort(np.concatenate([segs[:, 1], segs[:, 3]]))
    assert np.allclose(ys, np.array([0.0, 0.5, 0.5, 1.0, 1.0, 1.5]))


def test_segments_box_offset_matches_sliced_grid():
    rng = np.random.default_rng(3)
    g = rng.normal(size=(10, 12))
    box = Box(3, 2, 5, 4)
    h = 0.7
    level = 0.1
    segs = level_set_segments(g, level, h, box)
    sub = g[box.row0:box.row0 + box.nrows + 1, box.col0:box.col0 + box.ncols + 1]
    raw = level_set_segments(sub, level, h)
    off = np.array([box.col0, box.row0, box.col0, box.row0]) * h
    assert np.allclose(segs, raw + off)


def test_segments_empty_when_level_outside():
    g = np.zeros((5, 5))
    segs = level_set_segments(g, -1.0, 1.0)
    assert segs.shape == (0, 4)


def test_component_colors_distinct_hex():
    seen = {component_color(i) for i in range(1, 12)}
    assert len(seen) == 11
    for c in seen:
        assert re.fullmatch(r"#[0-9a-f]{6}", c)
    assert re.fullmatch(r"#[0-9a-f]{6}", level_color(0))


def test_mask_svg_structure_and_determinism():
    open_cells = np.zeros((4, 6), dtype=bool)
    open_cells[0, :3] = True          # one component
    open_cells[3, 4:] = True          # another, margin will eat col 5
    mask = mask_from_open(open_cells, margin=1)
    svg = mask_svg(mask, cell_px=5.0)
    assert svg == mask_svg(mask, cell_px=5.0)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    rects = [el for el in root.iter() if el.tag.endswith("rect")]
    fills = {r.get("fill") for r in rects}
    # background, margin strip, and two component colors
    assert "#f8f8f8" in fills
    assert "#e4e4e4" in fills
    comp_fills = fills - {"#f8f8f8", "#e4e4e4"}
    assert len(comp_fills) == 2


def test_mask_svg_flips_rows():
    open_cells = np.zeros((3, 3), dtype=bool)
    open_cells[0, 0] = True           # grid bottom-left
    mask = mask_from_open(open_cells)
    root = ET.fromstring(mask_svg(mask, cell_px=10.0))
    rects = [el for el in root.iter() if el.tag.endswith("rect")]
    comp = [r for r in rects if r.get("fill") not in ("#f8f8f8", "#e4e4e4")]
    assert len(comp) == 1
    # bottom row of the grid lands at the bottom of the image
    assert comp[0].get("y") == "20"
    assert comp[0].get("x") == "0"


def test_heatmap_svg_overlay_counts_lines():
    h = 0.5
    xs = np.arange(6) * h
    g = np.tile(xs, (4, 1))
    svg = heatmap_svg(g, h, levels=[1.25])
    root = ET.fromstring(svg)
    lines = [el for el in root.iter() if el.tag.endswith("line")]
    assert len(lines) == 3
    # vertical line: x1 == x2 on every segment
    for el in lines:
        assert el.get("x1") == el.get("x2")


def test_heatmap_svg_flat_grid_and_box_outline():
    g = np.ones((4, 4))
    svg = heatmap_svg(g, 1.0, levels=[0.5], box=Box(1, 1, 2, 2))
    root = ET.fromstring(svg)
    dashed = [el for el in root.iter()
              if el.tag.endswith("rect") and el.get("stroke-dasharray")]
    assert len(dashed) == 1
    assert svg == heatmap_svg(g, 1.0, levels=[0.5], box=Box(1, 1, 2, 2))
