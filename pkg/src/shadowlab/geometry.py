"""Metric geometry of excursion masks and level sets of the slope field.

Distances inside a mask live on the eight-connected cell graph with
weights h between axis neighbors and h*sqrt(2) between diagonal ones,
matching the circuit lengths used for annuli. Level-set length uses
marching squares on the cell-center grid with linear interpolation and
the center-value rule on saddle cells. The coarea check integrates a
weight of alpha against the gradient magnitude over a box and compares
with the level-wise contour lengths; both sides share the same node grid
so the identity survives discretization.

The pointwise law of the slope at one cell is sampled on single-row
windows just wide enough to cover the censoring margin, one independent
field draw per sample. Those samples feed the rate comparison: expected
contour length against volume times the conditional gradient magnitude
times the density of alpha, each side with its own confidence band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import BoundsError, ComponentError, ConfigError, MarginError, SupportError
from .excursion import Box, ExcursionMask
from .field import FieldSample, draw_field, grid_for_kernel
from .kernels import Covariance, Kernel, covariance_at
from .slope import (GAP_FACTOR, SlopeField, default_level_floor, ray_margin_columns,
                    slope_field, slope_gradient, slope_gradient_grid)
from .stats import silverman_bandwidth

Array = np.ndarray

_EIGHT_STEPS = ((0, 1), (1, 0), (1, 1), (1, -1))


def _neighbor_pairs(open_cells: Array, dr: int, dc: int) -> tuple[Array, Array]:
    """Source coordinates of open pairs at offset (dr, dc)."""
    ny, nx = open_cells.shape
    pair = np.zeros_like(open_cells)
    rows = slice(0, ny - dr)
    cols = slice(max(0, -dc), nx - max(0, dc))
    trows = slice(dr, ny)
    tcols = slice(max(0, -dc) + dc, nx - max(0, dc) + dc)
    pair[rows, cols] = open_cells[rows, cols] & open_cells[trows, tcols]
    return np.nonzero(pair)


def mask_graph(open_cells: Array, spacing: float) -> csr_matrix:
    """Weighted eight-connected adjacency; node id of cell (r, c) is r*nx + c."""
    ny, nx = open_cells.shape
    h = float(spacing)
    diag = math.sqrt(2.0) * h
    ii, jj, ww = [], [], []
    for (dr, dc), w in zip(_EIGHT_STEPS, (h, h, diag, diag)):
        r, c = _neighbor_pairs(open_cells, dr, dc)
        ii.append(r * nx + c)
        jj.append((r + dr) * nx + (c + dc))
        ww.append(np.full(r.size, w))
    n = ny * nx
    return csr_matrix((np.concatenate(ww), (np.concatenate(ii), np.concatenate(jj))),
                      shape=(n, n))


def grid_distances(open_cells: Array, source: tuple[int, int], spacing: float) -> Array:
    """Distances from source cell (col, row) to every cell; inf where unreachable."""
    ny, nx = open_cells.shape
    col, row = source
    if not (0 <= col < nx and 0 <= row < ny):
        raise BoundsError("source cell leaves the grid")
    if not open_cells[row, col]:
        return np.full((ny, nx), np.inf)
    graph = mask_graph(open_cells, spacing)
    dist = dijkstra(graph, directed=False, indices=row * nx + col)
    dist[~open_cells.ravel()] = np.inf
    return dist.reshape(ny, nx)


def multi_source_distances(open_cells: Array, sources, spacing: float) -> Array:
    """Distance to the nearest of several source cells, inf elsewhere.

    sources is an iterable of (col, row) pairs; closed sources contribute
    nothing.  One Dijkstra run serves the whole set.
    """
    ny, nx = open_cells.shape
    ids = []
    for col, row in sources:
        if not (0 <= col < nx and 0 <= row < ny):
            raise BoundsError(f"source cell {(col, row)} leaves the grid")
        if open_cells[row, col]:
            ids.append(row * nx + col)
    if not ids:
        return np.full((ny, nx), np.inf)
    graph = mask_graph(open_cells, spacing)
    dist = dijkstra(graph, directed=False, indices=ids, min_only=True)
    dist[~open_cells.ravel()] = np.inf
    return dist.reshape(ny, nx)


@dataclass(frozen=True)
class PathResult:
    """Chemical distance between two cells and one shortest path."""

    found: bool
    length: float
    cells: tuple[tuple[int, int], ...]


def _check_cell(mask: ExcursionMask, cell: tuple[int, int]) -> None:
    col, row = cell
    ny, nx = mask.open.shape
    if not (0 <= col < nx and 0 <= row < ny):
        raise BoundsError(f"cell {cell} leaves the grid")
    if col >= mask.trusted_nx:
        raise MarginError(f"cell {cell} lies in the censored margin")


def chemical_distance(mask: ExcursionMask, a: tuple[int, int],
                      b: tuple[int, int]) -> PathResult:
    """Shortest open path between cells a and b, (col, row) each.

    found is False when either endpoint is closed or the endpoints sit in
    different components; the length is then inf and the path empty.
    """
    _check_cell(mask, a)
    _check_cell(mask, b)
    ny, nx = mask.open.shape
    if not (mask.open[a[1], a[0]] and mask.open[b[1], b[0]]):
        return PathResult(False, math.inf, ())
    src = a[1] * nx + a[0]
    dst = b[1] * nx + b[0]
    graph = mask_graph(mask.open, mask.spec.spacing)
    dist, pred = dijkstra(graph, directed=False, indices=src,
                          return_predecessors=True)
    if not math.isfinite(dist[dst]):
        return PathResult(False, math.inf, ())
    nodes = [dst]
    while nodes[-1] != src:
        nodes.append(int(pred[nodes[-1]]))
    cells = tuple((n % nx, n // nx) for n in reversed(nodes))
    return PathResult(True, float(dist[dst]), cells)


@dataclass(frozen=True)
class DiameterResult:
    """Largest chemical distance within one component.

    exact marks the all-pairs computation; on big components the value is
    a farthest-point sweep lower bound instead.
    """

    value: float
    exact: bool
    component: int
    n_cells: int


def _component_subgraph(mask: ExcursionMask, component: int) -> tuple[csr_matrix, Array]:
    if component < 1 or component > mask.n_components:
        raise ComponentError(f"no component {component} in this labeling")
    ny, nx = mask.open.shape
    rows, cols = np.nonzero(mask.labels == component)
    ids = rows * nx + cols
    graph = mask_graph(mask.open, mask.spec.spacing)
    return graph[ids][:, ids], ids


def chemical_diameter(mask: ExcursionMask, component: int,
                      exact_cells: int = 400) -> DiameterResult:
    """Chemical diameter of one component, exact up to exact_cells cells."""
    sub, ids = _component_subgraph(mask, component)
    n = ids.size
    if n == 1:
        return DiameterResult(0.0, True, component, 1)
    if n <= exact_cells:
        dmat = dijkstra(sub, directed=False)
        return DiameterResult(float(dmat.max()), True, component, int(n))
    # Farthest-point sweeps give a certified lower bound on big components.
    best = 0.0
    node = 0
    for _ in range(4):
        dist = dijkstra(sub, directed=False, indices=node)
        far = int(np.argmax(dist))
        if dist[far] <= best:
            break
        best = float(dist[far])
        node = far
    return DiameterResult(best, False, component, int(n))


def s_chem(mask: ExcursionMask, box: Box, exact_cells: int = 400) -> float:
    """Sum of chemical diameters over the components of open-within-box."""
    from scipy import ndimage

    ny, nx = mask.open.shape
    if box.row0 + box.nrows > ny or box.col0 + box.ncols > nx:
        raise BoundsError("box leaves the grid")
    if box.col0 + box.ncols > mask.trusted_nx:
        raise MarginError("box reaches into the censored margin")
    sub_open = mask.open[box.rows, box.cols]
    labels, n = ndimage.label(sub_open, structure=np.ones((3, 3), bool))
    if n == 0:
        return 0.0
    graph = mask_graph(sub_open, mask.spec.spacing)
    total = 0.0
    snx = box.ncols
    for comp in range(1, n + 1):
        rows, cols = np.nonzero(labels == comp)
        if rows.size == 1:
            continue
        ids = rows * snx + cols
        sub = graph[ids][:, ids]
        if ids.size <= exact_cells:
            total += float(dijkstra(sub, directed=False).max())
            continue
        best, node = 0.0, 0
        for _ in range(4):
            dist = dijkstra(sub, directed=False, indices=node)
            far = int(np.argmax(dist))
            if dist[far] <= best:
                break
            best, node = float(dist[far]), far
        total += best
    return total


@dataclass(frozen=True)
class LevelSetStats:
    level: float
    length: float
    n_segments: int


def _corner_views(grid: Array) -> tuple[Array, Array, Array, Array]:
    return grid[:-1, :-1], grid[:-1, 1:], grid[1:, 1:], grid[1:, :-1]


def _safe_t(level: float, va: Array, vb: Array, cross: Array) -> Array:
    den = np.where(cross, vb - va, 1.0)
    return np.where(cross, (level - va) / den, 0.0)


def _contour_sums(level: float, corners, spacing: float) -> tuple[float, int]:
    """Length and segment count of {grid = level} over the corner views.

    Inside means value <= level. Saddle cells are split by the sign of the
    corner mean. Segments of zero length (the level pinned exactly on a
    corner) are dropped so zero length always comes with zero segments.
    """
    v0, v1, v2, v3 = corners
    b0 = v0 <= level
    b1 = v1 <= level
    b2 = v2 <= level
    b3 = v3 <= level
    case = (b0.astype(np.uint8) | (b1.astype(np.uint8) << 1)
            | (b2.astype(np.uint8) << 2) | (b3.astype(np.uint8) << 3))
    t0 = _safe_t(level, v0, v1, b0 != b1)
    t1 = _safe_t(level, v1, v2, b1 != b2)
    t2 = _safe_t(level, v3, v2, b3 != b2)
    t3 = _safe_t(level, v0, v3, b0 != b3)
    l03 = np.hypot(t0, t3)
    l01 = np.hypot(1.0 - t0, t1)
    l31 = np.hypot(1.0, t1 - t3)
    l12 = np.hypot(1.0 - t2, 1.0 - t1)
    l02 = np.hypot(t2 - t0, 1.0)
    l32 = np.hypot(t2, 1.0 - t3)
    s1 = np.zeros(v0.shape)
    s2 = np.zeros(v0.shape)
    for pair, larr in (((1, 14), l03), ((2, 13), l01), ((3, 12), l31),
                       ((4, 11), l12), ((6, 9), l02), ((7, 8), l32)):
        m = (case == pair[0]) | (case == pair[1])
        s1[m] = larr[m]
    center_in = (v0 + v1 + v2 + v3) <= 4.0 * level
    m5 = case == 5
    m10 = case == 10
    s1[m5] = np.where(center_in, l01, l03)[m5]
    s2[m5] = np.where(center_in, l32, l12)[m5]
    s1[m10] = np.where(center_in, l03, l01)[m10]
    s2[m10] = np.where(center_in, l12, l32)[m10]
    count = int((s1 > 0).sum() + (s2 > 0).sum())
    return float(spacing) * float(s1.sum() + s2.sum()), count


def _node_window(grid: Array, box: Box | None) -> Array:
    if box is None:
        return grid
    ny, nx = grid.shape
    if box.row0 + box.nrows > ny - 1 or box.col0 + box.ncols > nx - 1:
        raise BoundsError("box needs one more node than cells per side")
    return grid[box.row0:box.row0 + box.nrows + 1,
                box.col0:box.col0 + box.ncols + 1]


def level_set_length(grid: Array, level: float, spacing: float,
                     box: Box | None = None) -> LevelSetStats:
    """Marching-squares length of the level line inside the box."""
    g = _node_window(np.asarray(grid, dtype=np.float64), box)
    length, count = _contour_sums(float(level), _corner_views(g), spacing)
    return LevelSetStats(level=float(level), length=length, n_segments=count)


def level_set_lengths(grid: Array, levels: Array, spacing: float,
                      box: Box | None = None) -> Array:
    """Contour lengths for a whole level grid at once."""
    g = _node_window(np.asarray(grid, dtype=np.float64), box)
    corners = _corner_views(g)
    return np.array([_contour_sums(float(u), corners, spacing)[0]
                     for u in np.asarray(levels, dtype=np.float64)])


def level_set_segments(grid: Array, level: float, spacing: float,
                       box: Box | None = None) -> Array:
    """Level-line segments as (x0, y0, x1, y1) rows in grid-length units.

    Same cases, interpolation, and saddle rule as level_set_length, so the
    summed segment lengths agree with its value; coordinates are absolute
    (box offset included).  Zero-length segments are dropped.
    """
    g = _node_window(np.asarray(grid, dtype=np.float64), box)
    v0, v1, v2, v3 = _corner_views(g)
    level = float(level)
    b0 = v0 <= level
    b1 = v1 <= level
    b2 = v2 <= level
    b3 = v3 <= level
    case = (b0.astype(np.uint8) | (b1.astype(np.uint8) << 1)
            | (b2.astype(np.uint8) << 2) | (b3.astype(np.uint8) << 3))
    t0 = _safe_t(level, v0, v1, b0 != b1)
    t1 = _safe_t(level, v1, v2, b1 != b2)
    t2 = _safe_t(level, v3, v2, b3 != b2)
    t3 = _safe_t(level, v0, v3, b0 != b3)
    rr, cc = np.indices(v0.shape, dtype=np.float64)
    # edge crossing points: e0 bottom, e1 right, e2 top, e3 left
    pts = {
        0: (cc + t0, rr),
        1: (cc + 1.0, rr + t1),
        2: (cc + t2, rr + 1.0),
        3: (cc, rr + t3),
    }
    center_in = (v0 + v1 + v2 + v3) <= 4.0 * level
    chunks = []

    def emit(m, ea, eb):
        if not m.any():
            return
        ax, ay = pts[ea]
        bx, by = pts[eb]
        seg = np.stack([ax[m], ay[m], bx[m], by[m]], axis=-1)
        keep = (seg[:, 0] != seg[:, 2]) | (seg[:, 1] != seg[:, 3])
        if keep.any():
            chunks.append(seg[keep])

    for pair, (ea, eb) in (((1, 14), (0, 3)), ((2, 13), (0, 1)),
                           ((3, 12), (3, 1)), ((4, 11), (1, 2)),
                           ((6, 9), (0, 2)), ((7, 8), (3, 2))):
        emit((case == pair[0]) | (case == pair[1]), ea, eb)
    m5 = case == 5
    m10 = case == 10
    emit(m5 & center_in, 0, 1)
    emit(m5 & center_in, 3, 2)
    emit(m5 & ~center_in, 0, 3)
    emit(m5 & ~center_in, 1, 2)
    emit(m10 & center_in, 0, 3)
    emit(m10 & center_in, 1, 2)
    emit(m10 & ~center_in, 0, 1)
    emit(m10 & ~center_in, 3, 2)

    if not chunks:
        return np.zeros((0, 4))
    segs = np.concatenate(chunks, axis=0) * float(spacing)
    if box is not None:
        off = np.array([box.col0, box.row0, box.col0, box.row0], dtype=np.float64)
        segs += off * float(spacing)
    return segs


@dataclass(frozen=True)
class CoareaReport:
    lhs: float
    rhs: float
    rel_err: float
    n_levels: int


def coarea_check(sf: SlopeField, fs: FieldSample, box: Box,
                 weight: Callable[[Array], Array], levels: Array,
                 near_tie: float | None = None) -> CoareaReport:
    """Both sides of the coarea identity for the slope over one box.

    lhs integrates weight(alpha) |grad alpha| over the box with trapezoid
    node weights; rhs integrates weight(u) times the contour length over
    the level grid. Gradients on near-tie cells fall back to central
    differences (threshold GAP_FACTOR * spacing unless overridden).
    """
    h = float(sf.spec.spacing)
    if box.col0 + box.ncols > sf.trusted_nx - 1:
        raise MarginError("box reaches into the censored margin")
    if near_tie is None:
        near_tie = GAP_FACTOR * h
    gx, gy = slope_gradient_grid(fs, sf, near_tie=near_tie)
    speed = np.hypot(gx, gy)
    alpha = _node_window(sf.alpha, box)
    speed = _node_window(speed, box)
    wr = np.ones(box.nrows + 1)
    wr[0] = wr[-1] = 0.5
    wc = np.ones(box.ncols + 1)
    wc[0] = wc[-1] = 0.5
    lhs = h * h * float(np.sum(wr[:, None] * wc[None, :] * weight(alpha) * speed))
    levels = np.asarray(levels, dtype=np.float64)
    if levels.ndim != 1 or levels.size < 2:
        raise ConfigError("need a one-dimensional grid of at least two levels")
    sigmas = level_set_lengths(sf.alpha, levels, h, box)
    rhs = float(np.trapezoid(weight(levels) * sigmas, levels))
    scale = max(abs(lhs), abs(rhs), np.finfo(float).tiny)
    return CoareaReport(lhs=lhs, rhs=rhs, rel_err=abs(lhs - rhs) / scale,
                        n_levels=int(levels.size))


@dataclass(frozen=True)
class OriginSamples:
    """Independent draws of (alpha, grad alpha, argmax t) at one cell."""

    alpha: Array
    grad: Array
    argmax_t: Array
    kernel: Kernel
    spacing: float
    master_seed: int

    @property
    def n(self) -> int:
        return int(self.alpha.size)

    @property
    def speed(self) -> Array:
        return np.hypot(self.grad[:, 0], self.grad[:, 1])


def sample_alpha_at_origin(kernel: Kernel, n_samples: int, *, spacing: float,
                           master_seed: int = 0, ray_columns: int | None = None,
                           truncation: float | None = None) -> OriginSamples:
    """Sample the slope and its gradient at a single cell.

    Each sample is one independent field on a one-row window whose single
    trusted cell sits at the left end of a long ray. The censoring margin
    alone only protects levels above the floor; resolving the sign of
    small sups needs a much longer ray, so the default is 24 kernel
    truncation radii, under which the chance of the windowed sup missing
    the far field entirely sits well below half a percent.
    """
    from .excursion import _auto_margin

    if n_samples < 1:
        raise ConfigError("need at least one sample")
    if ray_columns is None:
        ray_columns = max(_auto_margin(kernel, spacing),
                          int(math.ceil(24.0 * kernel.trunc_radius / spacing)))
    if ray_columns < 1:
        raise ConfigError("need at least one ray column")
    spec = grid_for_kernel(kernel, spacing, ray_columns + 1, 1,
                           truncation=truncation)
    alpha = np.empty(n_samples)
    grad = np.empty((n_samples, 2))
    tval = np.empty(n_samples)
    for i in range(n_samples):
        fs = draw_field(kernel, spec, master_seed, i, truncation)
        sf = slope_field(fs, margin=ray_columns)
        alpha[i] = sf.alpha[0, 0]
        tval[i] = sf.argmax_t[0, 0]
        grad[i] = slope_gradient(fs, sf, (0, 0))
    return OriginSamples(alpha=alpha, grad=grad, argmax_t=tval, kernel=kernel,
                         spacing=float(spacing), master_seed=master_seed)


@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian kernel density with a fixed bandwidth."""

    values: Array
    bandwidth: float

    def __call__(self, points):
        from .stats import kde

        return kde(self.values, points, self.bandwidth)


def density_estimate(values: Array, bandwidth: float | None = None) -> DensityEstimate:
    values = np.asarray(values, dtype=np.float64)
    if bandwidth is None:
        bandwidth = silverman_bandwidth(values)
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    return DensityEstimate(values=values, bandwidth=float(bandwidth))


@dataclass(frozen=True)
class KacRiceRow:
    level: float
    lhs: float
    lhs_low: float
    lhs_high: float
    rhs: float
    rhs_low: float
    rhs_high: float

    @property
    def overlap(self) -> bool:
        return self.lhs_low <= self.rhs_high and self.rhs_low <= self.lhs_high


@dataclass(frozen=True)
class KacRiceReport:
    rows: tuple[KacRiceRow, ...]
    bandwidth: float
    vol: float
    n_origin: int
    n_draws: int
    confidence: float

    @property
    def frac_overlap(self) -> float:
        return sum(r.overlap for r in self.rows) / len(self.rows)


def kac_rice_compare(origin: OriginSamples, levels: Array, sigma_draws: Array,
                     vol: float, *, bandwidth: float | None = None,
                     confidence: float = 0.95, n_boot: int = 1000,
                     seed: int = 0) -> KacRiceReport:
    """Mean contour length against the rate predicted by the pointwise law.

    lhs is the per-level mean of sigma_draws (one row per field draw) with
    a bootstrap band over draws. rhs is vol times the smoothed conditional
    mean of |grad alpha| at the level times the density of alpha, sharing
    one bandwidth; its band resamples the origin draws. The product
    collapses to a single weighted sum, which keeps the bootstrap exact
    rather than a ratio of smoothed estimates.
    """
    levels = np.asarray(levels, dtype=np.float64)
    alpha = origin.alpha
    if levels.min() < alpha.min() or levels.max() > alpha.max():
        raise SupportError("level grid leaves the sampled range of alpha")
    sigma_draws = np.asarray(sigma_draws, dtype=np.float64)
    if sigma_draws.ndim != 2 or sigma_draws.shape[1] != levels.size:
        raise ConfigError("sigma_draws must be (n_draws, n_levels)")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(alpha)
    b = float(bandwidth)
    n = origin.n
    lo_q = 100.0 * (1.0 - confidence) / 2.0
    hi_q = 100.0 - lo_q
    rng = np.random.default_rng(seed)

    # lhs: mean over field draws, percentile bootstrap over draws.
    lhs = sigma_draws.mean(axis=0)
    n_draws = sigma_draws.shape[0]
    idx = rng.integers(0, n_draws, size=(n_boot, n_draws))
    reps = sigma_draws[idx].mean(axis=1)
    lhs_low = np.percentile(reps, lo_q, axis=0)
    lhs_high = np.percentile(reps, hi_q, axis=0)

    # rhs: vol * E[|grad| | alpha=u] * density(u) collapses to one
    # kernel-weighted mean, linear in multinomial resample counts.
    w = np.exp(-0.5 * ((levels[:, None] - alpha[None, :]) / b) ** 2)
    w /= math.sqrt(2.0 * math.pi)
    speed = origin.speed
    rhs = vol * (w @ speed) / (n * b)
    counts = rng.multinomial(n, np.full(n, 1.0 / n), size=n_boot)
    rhs_reps = vol * (w @ (speed[None, :] * counts).T) / (n * b)
    rhs_low = np.percentile(rhs_reps, lo_q, axis=1)
    rhs_high = np.percentile(rhs_reps, hi_q, axis=1)

    rows = tuple(
        KacRiceRow(level=float(levels[k]), lhs=float(lhs[k]),
                   lhs_low=float(lhs_low[k]), lhs_high=float(lhs_high[k]),
                   rhs=float(rhs[k]), rhs_low=float(rhs_low[k]),
                   rhs_high=float(rhs_high[k]))
        for k in range(levels.size))
    return KacRiceReport(rows=rows, bandwidth=b, vol=float(vol),
                         n_origin=n, n_draws=int(sigma_draws.shape[0]),
                         confidence=confidence)


def kac_rice_experiment(kernel: Kernel, *, spacing: float, n_origin: int = 2000,
                        n_draws: int = 200, n_levels: int = 25, box_cells: int = 32,
                        bulk: tuple[float, float] = (0.05, 0.95),
                        master_seed: int = 0, truncation: float | None = None,
                        confidence: float = 0.95, n_boot: int = 1000) -> KacRiceReport:
    """Both sides of the rate comparison, end to end.

    Levels are spread evenly between the bulk quantiles of the sampled
    pointwise law, which keeps the density estimate away from its thin
    tails. The censoring margin for the box draws comes from the lowest
    compared level, so every contour entering the mean is trusted. Draw
    indices start after the origin indices; every field in the study is
    then an independent draw under one master seed.
    """
    if n_draws < 2:
        raise ConfigError("need at least two field draws")
    if n_levels < 2:
        raise ConfigError("need at least two levels")
    if box_cells < 1:
        raise ConfigError("box must be at least one cell across")
    lo_q, hi_q = float(bulk[0]), float(bulk[1])
    if not 0.0 <= lo_q < hi_q <= 1.0:
        raise ConfigError("bulk quantiles must satisfy 0 <= lo < hi <= 1")
    origin = sample_alpha_at_origin(kernel, n_origin, spacing=spacing,
                                    master_seed=master_seed, truncation=truncation)
    qlo, qhi = np.quantile(origin.alpha, (lo_q, hi_q))
    levels = np.linspace(qlo, qhi, n_levels)
    k0 = float(covariance_at(Covariance(kernel), np.zeros(2)))
    floor = float(qlo) if qlo > 0 else default_level_floor(kernel)
    margin = ray_margin_columns(k0, floor, spacing)
    spec = grid_for_kernel(kernel, spacing, box_cells + 1 + margin,
                           box_cells + 1, truncation=truncation)
    box = Box(0, 0, box_cells, box_cells)
    sigma = np.empty((n_draws, levels.size))
    for i in range(n_draws):
        fs = draw_field(kernel, spec, master_seed, n_origin + i, truncation)
        sf = slope_field(fs, margin=margin)
        sigma[i] = level_set_lengths(sf.alpha, levels, spacing, box)
    vol = (box_cells * float(spacing)) ** 2
    return kac_rice_compare(origin, levels, sigma, vol, confidence=confidence,
                            n_boot=n_boot, seed=master_seed)
