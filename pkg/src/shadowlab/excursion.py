"""Sublevel sets of the slope field and their crossing events.

Connectivity convention: the open set {alpha <= level} is eight-connected
and its complement is four-connected. With that pairing the two dual
events on a rectangle are exclusive and exhaustive: an eight-connected
open crossing joining the left and right sides exists exactly when no
four-connected closed path joins top to bottom. Margin columns carry
censored sups, so `threshold` drops them from the open set outright.

Annulus circuits use the same convention. Whether a circuit of open cells
separates the hole from the outside is decided by duality: a circuit
exists exactly when no four-connected closed path inside the band joins
the inner ring to the outer one. Its minimal length is computed on a
layered unrolling of the band. The band is cut along a rightward
half-line from the center, copies of the band are stacked, and each cut
edge reconnects consecutive copies, so a circuit winding once around the
hole becomes a path between two copies of the same cell. Stacking enough
copies keeps the construction exact even when every winding circuit has
to weave back and forth across the cut.

Crossing probabilities and the critical level are estimated with common
random numbers: sample i is keyed by (master_seed, i), so the same field
realizations are reused at every probed level and the empirical crossing
curve is monotone sample by sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import BoundsError, ConfigError, MarginError
from .field import GridSpec, draw_field, grid_for_kernel
from .kernels import Covariance, Kernel, covariance_at
from .slope import SlopeField, default_level_floor, ray_margin_columns, slope_field
from .stats import wilson_interval

Array = np.ndarray

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = np.ones((3, 3), dtype=bool)
_STRUCTURE = {"four": _FOUR, "eight": _EIGHT}
_DUAL = {"four": "eight", "eight": "four"}
_DIRECTIONS = ("horizontal", "vertical")


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle of cells, ncols x nrows anchored at (col0, row0)."""

    col0: int
    row0: int
    ncols: int
    nrows: int

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise ConfigError("box needs at least one cell per side")
        if self.col0 < 0 or self.row0 < 0:
            raise BoundsError("box anchor must be inside the grid")

    @property
    def rows(self) -> slice:
        return slice(self.row0, self.row0 + self.nrows)

    @property
    def cols(self) -> slice:
        return slice(self.col0, self.col0 + self.ncols)


@dataclass(frozen=True)
class ExcursionMask:
    """Thresholded slope field with its component labeling.

    open marks cells with alpha <= level, minus the censored margin
    columns; margin records how many right columns were dropped. labels
    gives the component id of every open cell (0 on closed cells) under
    the stored connectivity.
    """

    spec: GridSpec
    level: float
    connectivity: str
    open: Array
    labels: Array
    n_components: int
    margin: int

    @property
    def trusted_nx(self) -> int:
        return max(0, self.spec.nx - self.margin)


def threshold(sf: SlopeField, level: float, connectivity: str = "eight") -> ExcursionMask:
    """Excursion mask {alpha <= level} with margin columns forced closed."""
    if connectivity not in _STRUCTURE:
        raise ConfigError("connectivity must be 'four' or 'eight'")
    open_cells = sf.alpha <= level
    if sf.margin > 0:
        open_cells[:, sf.trusted_nx:] = False
    labels, n = ndimage.label(open_cells, structure=_STRUCTURE[connectivity])
    return ExcursionMask(
        spec=sf.spec, level=float(level), connectivity=connectivity,
        open=open_cells, labels=labels.astype(np.int32),
        n_components=int(n), margin=sf.margin,
    )


def _check_box(mask: ExcursionMask, box: Box) -> None:
    ny, nx = mask.open.shape
    if box.row0 + box.nrows > ny or box.col0 + box.ncols > nx:
        raise BoundsError("box leaves the grid")
    if box.col0 + box.ncols > mask.trusted_nx:
        raise MarginError("box reaches into the censored margin")


def _crosses(open_sub: Array, direction: str, connectivity: str) -> bool:
    """Does one component of open_sub touch both opposite sides?"""
    labels, n = ndimage.label(open_sub, structure=_STRUCTURE[connectivity])
    if n == 0:
        return False
    if direction == "horizontal":
        a, b = labels[:, 0], labels[:, -1]
    else:
        a, b = labels[0, :], labels[-1, :]
    shared = np.intersect1d(a[a > 0], b[b > 0])
    return bool(shared.size)


def crossing(mask: ExcursionMask, box: Box | None = None,
             direction: str = "horizontal") -> bool:
    """Open crossing of the box: one open component joins its two sides.

    Components are taken inside the box; a path that leaves the box does
    not count. Default box is the full trusted window.
    """
    if direction not in _DIRECTIONS:
        raise ConfigError("direction must be 'horizontal' or 'vertical'")
    if box is None:
        box = Box(0, 0, mask.trusted_nx, mask.spec.ny)
    _check_box(mask, box)
    return _crosses(mask.open[box.rows, box.cols], direction, mask.connectivity)


def complement_crossing(mask: ExcursionMask, box: Box | None = None,
                        direction: str = "vertical") -> bool:
    """Closed crossing of the box, under the dual connectivity."""
    if direction not in _DIRECTIONS:
        raise ConfigError("direction must be 'horizontal' or 'vertical'")
    if box is None:
        box = Box(0, 0, mask.trusted_nx, mask.spec.ny)
    _check_box(mask, box)
    closed = ~mask.open[box.rows, box.cols]
    return _crosses(closed, direction, _DUAL[mask.connectivity])


def dual_crossings(mask: ExcursionMask, box: Box | None = None) -> tuple[bool, bool]:
    """(open left-right crossing, closed top-bottom crossing).

    Exactly one of the two holds on any box; the pair is returned so the
    invariant can be checked rather than assumed.
    """
    return (crossing(mask, box, "horizontal"),
            complement_crossing(mask, box, "vertical"))


@dataclass(frozen=True)
class Annulus:
    """Chebyshev annulus of cells: r_in <= max(|dc|, |dr|) <= r_out.

    center is a (col, row) cell, or None for the center of the trusted
    window. Cells at distance below r_in form the hole. The default shell
    ratio r_out = 3 r_in matches a window of one hole flanked by one hole
    width on every side.
    """

    r_in: int
    r_out: int
    center: tuple[int, int] | None = None

    def __post_init__(self):
        if self.r_in < 1 or self.r_out <= self.r_in:
            raise ConfigError("annulus needs 1 <= r_in < r_out")


def annulus_for_radius(r_in: int, center: tuple[int, int] | None = None) -> Annulus:
    return Annulus(r_in, 3 * r_in, center)


def _resolve_center(mask: ExcursionMask, ann: Annulus) -> tuple[int, int]:
    ny = mask.spec.ny
    if ann.center is None:
        cx, cy = (mask.trusted_nx - 1) // 2, (ny - 1) // 2
    else:
        cx, cy = ann.center
    if (cx - ann.r_out < 0 or cy - ann.r_out < 0 or cy + ann.r_out > ny - 1
            or cx + ann.r_out > mask.spec.nx - 1):
        raise BoundsError("annulus leaves the grid")
    if cx + ann.r_out > mask.trusted_nx - 1:
        raise MarginError("annulus reaches into the censored margin")
    return cx, cy


def _chebyshev(shape: tuple[int, int], center: tuple[int, int]) -> Array:
    ny, nx = shape
    cx, cy = center
    dc = np.abs(np.arange(nx) - cx)
    dr = np.abs(np.arange(ny) - cy)
    return np.maximum(dc[None, :], dr[:, None])


def has_annulus_loop(mask: ExcursionMask, ann: Annulus) -> bool:
    """Does an open circuit inside the band separate hole from outside?

    Decided by duality: the circuit exists exactly when no closed path
    (dual connectivity) within the band joins the inner ring to the outer
    ring.
    """
    cx, cy = _resolve_center(mask, ann)
    cheb = _chebyshev(mask.open.shape, (cx, cy))
    band = (cheb >= ann.r_in) & (cheb <= ann.r_out)
    blocked = band & ~mask.open
    labels, n = ndimage.label(blocked, structure=_STRUCTURE[_DUAL[mask.connectivity]])
    if n == 0:
        return True
    inner = labels[cheb == ann.r_in]
    outer = labels[cheb == ann.r_out]
    shared = np.intersect1d(inner[inner > 0], outer[outer > 0])
    return shared.size == 0


def annulus_loop(mask: ExcursionMask, ann: Annulus) -> float | None:
    """Length of the shortest open circuit around the hole, or None.

    Edge weights are h between axis neighbors and h*sqrt(2) between
    diagonal ones. The circuit is found on a layered unrolling of the
    band along a rightward cut from the center; the layer count covers
    the worst weaving a simple circuit can do across the cut, so the
    minimum is exact.
    """
    if not has_annulus_loop(mask, ann):
        return None
    h = float(mask.spec.spacing)
    cx, cy = _resolve_center(mask, ann)
    cheb = _chebyshev(mask.open.shape, (cx, cy))
    band = (cheb >= ann.r_in) & (cheb <= ann.r_out)
    allowed = band & mask.open

    n_cells = int(allowed.sum())
    idx = np.full(allowed.shape, -1, dtype=np.int64)
    idx[allowed] = np.arange(n_cells)

    # Edge families by offset; the cut is the half-line y = cy + 0.5,
    # x >= cx + 0.5, so horizontal edges never cross it.
    diag = math.sqrt(2.0) * h
    intra_i, intra_j, intra_w = [], [], []
    cut_a, cut_b, cut_w = [], [], []
    for (dr, dc), w in (((0, 1), h), ((1, 0), h), ((1, 1), diag), ((1, -1), diag)):
        pair = np.zeros_like(allowed)
        rows = slice(0, allowed.shape[0] - dr)
        cols = slice(max(0, -dc), allowed.shape[1] - max(0, dc))
        sub = allowed[rows, cols] & allowed[
            slice(dr, allowed.shape[0]), slice(max(0, -dc) + dc, allowed.shape[1] - max(0, dc) + dc)]
        pair[rows, cols] = sub
        r, c = np.nonzero(pair)
        a = idx[r, c]
        b = idx[r + dr, c + dc]
        if dr == 1 and dc == 0:
            cut = (r == cy) & (c >= cx + 1)
        elif dr == 1 and dc == 1:
            cut = (r == cy) & (c >= cx)
        elif dr == 1 and dc == -1:
            cut = (r == cy) & (c >= cx + 1)
        else:
            cut = np.zeros(r.shape, dtype=bool)
        intra_i.append(a[~cut])
        intra_j.append(b[~cut])
        intra_w.append(np.full(int((~cut).sum()), w))
        cut_a.append(a[cut])
        cut_b.append(b[cut])
        cut_w.append(np.full(int(cut.sum()), w))

    ai = np.concatenate(intra_i)
    aj = np.concatenate(intra_j)
    aw = np.concatenate(intra_w)
    ca = np.concatenate(cut_a)
    cb = np.concatenate(cut_b)
    cw = np.concatenate(cut_w)
    assert ca.size > 0  # duality already granted a circuit, which must cross

    # A simple circuit can use at most two cut edges per band column, so
    # its lift stays within r_out - r_in + 2 layers of the base.
    span = ann.r_out - ann.r_in + 2
    n_layers = 2 * span + 3
    base = n_layers // 2
    layer = np.arange(n_layers, dtype=np.int64) * n_cells

    big_i = (ai[None, :] + layer[:, None]).ravel()
    big_j = (aj[None, :] + layer[:, None]).ravel()
    big_w = np.tile(aw, n_layers)
    # Crossing the cut from the row cy + 1 side back to row cy ascends one layer.
    lift = np.arange(n_layers - 1, dtype=np.int64) * n_cells
    big_i = np.concatenate([big_i, (ca[None, :] + lift[:, None] + n_cells).ravel()])
    big_j = np.concatenate([big_j, (cb[None, :] + lift[:, None]).ravel()])
    big_w = np.concatenate([big_w, np.tile(cw, n_layers - 1)])

    n_nodes = n_cells * n_layers
    graph = csr_matrix((big_w, (big_i, big_j)), shape=(n_nodes, n_nodes))

    best = math.inf
    for s in np.unique(ca):
        dist = dijkstra(graph, directed=False, indices=int(s + base * n_cells))
        best = min(best, float(dist[int(s + (base + 1) * n_cells)]))
    assert math.isfinite(best)
    return best


@dataclass(frozen=True)
class CrossingEstimate:
    """Monte Carlo crossing probability with a Wilson interval."""

    level: float
    ncols: int
    nrows: int
    direction: str
    n_samples: int
    hits: int
    p_hat: float
    ci_low: float
    ci_high: float
    confidence: float
    spacing: float
    master_seed: int


def _auto_margin(kernel: Kernel, spacing: float) -> int:
    k0 = float(covariance_at(Covariance(kernel), np.zeros(2)))
    return ray_margin_columns(k0, default_level_floor(kernel), spacing)


def _sample_open_rects(kernel: Kernel, spacing: float, ncols: int, nrows: int,
                       n_samples: int, master_seed: int,
                       truncation: float | None, margin: int | None) -> Array:
    """Stack of alpha values on the rect, one slab per sample index."""
    if margin is None:
        margin = _auto_margin(kernel, spacing)
    spec = grid_for_kernel(kernel, spacing, ncols + margin, nrows,
                           truncation=truncation)
    out = np.empty((n_samples, nrows, ncols))
    for i in range(n_samples):
        fs = draw_field(kernel, spec, master_seed, i, truncation)
        sf = slope_field(fs, margin=margin)
        out[i] = sf.alpha[:, :ncols]
    return out


def estimate_crossing_probability(
    kernel: Kernel,
    level: float,
    *,
    spacing: float,
    ncols: int,
    nrows: int,
    scale: float = 1.0,
    direction: str = "horizontal",
    n_samples: int = 200,
    master_seed: int = 0,
    truncation: float | None = None,
    margin: int | None = None,
    confidence: float = 0.95,
) -> CrossingEstimate:
    """P(open crossing of the scale-dilated rect) at one level.

    scale multiplies both rect sides (rounded to cells, floor one cell).
    Sample i is keyed (master_seed, i) so estimates at different levels
    or scales with the same seed are coupled.
    """
    if direction not in _DIRECTIONS:
        raise ConfigError("direction must be 'horizontal' or 'vertical'")
    if scale <= 0:
        raise ConfigError("scale must be positive")
    if n_samples < 1:
        raise ConfigError("need at least one sample")
    wc = max(1, int(round(scale * ncols)))
    hc = max(1, int(round(scale * nrows)))
    alphas = _sample_open_rects(kernel, spacing, wc, hc, n_samples,
                                master_seed, truncation, margin)
    hits = sum(_crosses(a <= level, direction, "eight") for a in alphas)
    lo, hi = wilson_interval(hits, n_samples, confidence)
    return CrossingEstimate(
        level=float(level), ncols=wc, nrows=hc, direction=direction,
        n_samples=n_samples, hits=int(hits), p_hat=hits / n_samples,
        ci_low=lo, ci_high=hi, confidence=confidence,
        spacing=float(spacing), master_seed=master_seed,
    )


@dataclass(frozen=True)
class CriticalLevelResult:
    """Bisection bracket for the level where square crossing hits 1/2."""

    estimate: float
    level_low: float
    level_high: float
    tol: float
    probes: tuple[tuple[float, float], ...]
    n_samples: int
    square_cells: int
    spacing: float
    master_seed: int
    monotone_ok: bool


def estimate_critical_level(
    kernel: Kernel,
    *,
    spacing: float,
    square_cells: int,
    bracket: tuple[float, float],
    tol: float = 0.05,
    n_samples: int = 200,
    master_seed: int = 0,
    truncation: float | None = None,
    margin: int | None = None,
    direction: str = "horizontal",
) -> CriticalLevelResult:
    """Bisect the level at which the square crossing probability is 1/2.

    The same n_samples fields are reused at every probed level, so each
    sample's crossing indicator is monotone in the level and the empirical
    curve cannot jitter across 1/2. A bracket whose endpoints do not
    straddle p = 1/2 is a config error; a non-monotone probe sequence is
    recorded in monotone_ok rather than raised, since it can only come
    from a bug, not from noise.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ConfigError("bracket must be an increasing pair")
    if tol <= 0:
        raise ConfigError("tolerance must be positive")
    alphas = _sample_open_rects(kernel, spacing, square_cells, square_cells,
                                n_samples, master_seed, truncation, margin)

    def p_hat(level: float) -> float:
        hits = sum(_crosses(a <= level, direction, "eight") for a in alphas)
        return hits / n_samples

    probes: list[tuple[float, float]] = []
    p_lo = p_hat(lo)
    p_hi = p_hat(hi)
    probes.append((lo, p_lo))
    probes.append((hi, p_hi))
    if not (p_lo < 0.5 <= p_hi):
        raise ConfigError(
            f"bracket [{lo}, {hi}] gives p = [{p_lo}, {p_hi}], "
            "which does not straddle 1/2")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p_mid = p_hat(mid)
        probes.append((mid, p_mid))
        if p_mid < 0.5:
            lo = mid
        else:
            hi = mid
    ordered = sorted(probes)
    monotone_ok = all(b[1] >= a[1] for a, b in zip(ordered, ordered[1:]))
    return CriticalLevelResult(
        estimate=0.5 * (lo + hi), level_low=lo, level_high=hi, tol=tol,
        probes=tuple(probes), n_samples=n_samples, square_cells=square_cells,
        spacing=float(spacing), master_seed=master_seed, monotone_ok=monotone_ok,
    )
