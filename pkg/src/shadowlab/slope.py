"""The directional slope field.

For a sample f on a row of the grid (the sweep direction is the first
axis), the slope at a node is the supremum of difference quotients

    (f(z + t e1) - f(z)) / t      over t > 0,

with the derivative df1(z) standing in for the t = 0 limit.  On the grid
the supremum over nodes to the right is read off the upper convex hull of
the points (x_j, f_j): a right-to-left sweep pushes each node onto the
hull and binary-searches the tangent from the current node, so a row costs
O(n log n) with exact agreement against the quadratic brute force.

Tie rule everywhere: the smallest maximizing t wins, and the derivative
candidate wins ties at t = 0.  Grids carry a flagged right margin: cells
whose remaining ray is shorter than the margin have a censored sup, and the
margin width is chosen so the censoring matters with probability below
1e-3 at the levels of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigError, MarginError
from .field import FieldSample, GridSpec
from .kernels import Covariance, Kernel, covariance_at

Array = np.ndarray

# near-tie threshold for trusting the maximizer-based gradient formula,
# in slope units per unit spacing
GAP_FACTOR = 10.0


def _sweep_impl(f, df1, h, alpha, tst, gap):
    n = f.shape[0]
    hull = np.empty(n, np.int64)
    m = 0
    for i in range(n - 1, -1, -1):
        fi = f[i]
        best = -np.inf
        second = -np.inf
        bj = -1
        if m > 0:
            # geometric order p = 0 (leftmost vertex) .. m-1 (rightmost);
            # storage order is reversed.  Slopes from (x_i, f_i) to the
            # vertices rise then fall, so the first p with
            # slope(p) >= slope(p+1) is the tangent; ties land on the
            # leftmost maximizer, which is the smallest t.
            lo = 0
            hi = m - 1
            while lo < hi:
                mid = (lo + hi) // 2
                j1 = hull[m - 1 - mid]
                j2 = hull[m - 2 - mid]
                if (f[j1] - fi) * (j2 - i) >= (f[j2] - fi) * (j1 - i):
                    hi = mid
                else:
                    lo = mid + 1
            bj = hull[m - 1 - lo]
            best = (f[bj] - fi) / ((bj - i) * h)
            if lo > 0:
                jn = hull[m - lo]
                s = (f[jn] - fi) / ((jn - i) * h)
                if s > second:
                    second = s
            if lo < m - 1:
                jn = hull[m - 2 - lo]
                s = (f[jn] - fi) / ((jn - i) * h)
                if s > second:
                    second = s
        d = df1[i]
        if d >= best:
            alpha[i] = d
            tst[i] = 0
            gap[i] = d - best
        else:
            alpha[i] = best
            tst[i] = bj - i
            other = second if second > d else d
            gap[i] = best - other
        while m >= 2:
            j1 = hull[m - 1]
            j0 = hull[m - 2]
            # pop j1 when it sits on or below the segment (i, j0)
            if (f[j1] - fi) * (j0 - i) <= (f[j0] - fi) * (j1 - i):
                m -= 1
            else:
                break
        hull[m] = i
        m += 1


try:
    from numba import njit

    _sweep = njit(cache=True)(_sweep_impl)
except ImportError:   # pragma: no cover
    _sweep = _sweep_impl


def slope_row_hull(f_row: Array, df1_row: Array, h: float) -> tuple[Array, Array]:
    """Slope sup and maximizing t for one row, hull sweep."""
    f = np.ascontiguousarray(f_row, dtype=np.float64)
    d = np.ascontiguousarray(df1_row, dtype=np.float64)
    if f.shape != d.shape or f.ndim != 1:
        raise ValueError("f and df1 rows must be equal-length vectors")
    n = f.shape[0]
    alpha = np.empty(n)
    tst = np.empty(n, np.int64)
    gap = np.empty(n)
    _sweep(f, d, float(h), alpha, tst, gap)
    return alpha, tst.astype(np.float64) * h


def slope_row_bruteforce(f_row: Array, df1_row: Array, h: float) -> tuple[Array, Array]:
    """Independent quadratic reference for slope_row_hull."""
    f = np.asarray(f_row, dtype=np.float64)
    n = f.shape[0]
    alpha = np.array(df1_row, dtype=np.float64, copy=True)
    t = np.zeros(n)
    for i in range(n - 1):
        steps = np.arange(1, n - i, dtype=np.float64)
        s = (f[i + 1:] - f[i]) / (steps * h)
        k = int(np.argmax(s))
        if s[k] > alpha[i]:
            alpha[i] = s[k]
            t[i] = steps[k] * h
    return alpha, t


@dataclass(frozen=True)
class SlopeField:
    """Slope sup grid with maximizer bookkeeping.

    window is the sup restriction radius R (None for the full ray), margin
    the number of rightmost columns whose sup is censored by the grid edge,
    gap the best-minus-runner-up slope used to spot near-ties.
    """

    spec: GridSpec
    kernel: Kernel | None
    seed: tuple[int, int]
    truncation: float | None
    window: float | None
    margin: int
    alpha: Array
    argmax_t: Array
    gap: Array

    @property
    def trusted_nx(self) -> int:
        return max(0, self.spec.nx - self.margin)

    def trusted(self) -> Array:
        """View of the non-margin part of alpha."""
        return self.alpha[:, :self.trusted_nx]


def ray_margin_columns(k0: float, level_floor: float, h: float,
                       prob: float = 1e-3) -> int:
    """Columns of ray needed so censoring beyond them matters < prob.

    Gaussian-tail bound: an increment at distance n beats level a only if a
    fluctuation of a*n shows up against variance 2 K(0); margin L is the
    smallest integer whose tail sum of those bounds is below prob.
    """
    if level_floor <= 0:
        raise ConfigError("margin level floor must be positive")
    if k0 <= 0:
        raise ConfigError("covariance at zero must be positive")
    sigma2 = 2.0 * k0
    mean_sup = 2.0 * math.sqrt(k0)
    n = np.arange(1, 4096, dtype=np.float64)
    excess = np.maximum(0.0, level_floor * n - mean_sup)
    terms = np.exp(-excess**2 / (2.0 * sigma2))
    tails = np.cumsum(terms[::-1])[::-1]
    ok = np.nonzero(tails <= prob)[0]
    if len(ok) == 0:
        raise ConfigError("margin bound does not reach the target probability")
    length_units = float(n[ok[0]])
    return int(math.ceil(length_units / h))


def default_level_floor(kernel: Kernel) -> float:
    k0 = float(covariance_at(Covariance(kernel), np.zeros(2)))
    return 0.5 * math.sqrt(k0)


def slope_field(fs: FieldSample, level_floor: float | None = None,
                margin: int | None = None) -> SlopeField:
    """Row-by-row hull sweep over the whole window."""
    ny, nx = fs.spec.shape
    h = fs.spec.spacing
    if margin is None:
        if level_floor is None:
            level_floor = default_level_floor(fs.kernel)
        k0 = float(covariance_at(Covariance(fs.kernel), np.zeros(2)))
        margin = ray_margin_columns(k0, level_floor, h)
    alpha = np.empty((ny, nx))
    tst = np.empty((ny, nx), np.int64)
    gap = np.empty((ny, nx))
    f = np.ascontiguousarray(fs.f)
    df1 = np.ascontiguousarray(fs.df1)
    for iy in range(ny):
        _sweep(f[iy], df1[iy], float(h), alpha[iy], tst[iy], gap[iy])
    return SlopeField(
        spec=fs.spec, kernel=fs.kernel, seed=fs.seed, truncation=fs.truncation,
        window=None, margin=int(margin),
        alpha=alpha, argmax_t=tst.astype(np.float64) * h, gap=gap,
    )


def window_steps(R: float, h: float) -> int:
    """Largest number of steps w with w*h strictly below R."""
    w = int(math.floor(R / h))
    while w >= 1 and w * h >= R:
        w -= 1
    return max(w, 0)


def truncated_slope_field(fs: FieldSample, R: float) -> SlopeField:
    """Slope sup restricted to rays shorter than R.

    The hull cannot serve window-restricted queries (a popped interior
    point can be the windowed max), so the restricted sup scans the R/h
    admissible shifts directly, vectorized over the grid, with the same
    slope arithmetic and tie rule as the sweep.
    """
    if R <= 0:
        raise ConfigError("window radius must be positive")
    ny, nx = fs.spec.shape
    h = fs.spec.spacing
    W = window_steps(R, h)
    f = fs.f
    alpha = np.array(fs.df1, dtype=np.float64, copy=True)
    tst = np.zeros((ny, nx), np.int64)
    second = np.full((ny, nx), -np.inf)
    for w in range(1, min(W, nx - 1) + 1):
        s = (f[:, w:] - f[:, :-w]) / (w * h)
        a = alpha[:, :-w]
        t = tst[:, :-w]
        sec = second[:, :-w]
        better = s > a
        np.copyto(sec, np.where(better, a, np.maximum(sec, s)))
        np.copyto(a, np.where(better, s, a))
        np.copyto(t, np.where(better, w, t))
    return SlopeField(
        spec=fs.spec, kernel=fs.kernel, seed=fs.seed, truncation=fs.truncation,
        window=float(R), margin=min(W, nx),
        alpha=alpha, argmax_t=tst.astype(np.float64) * h, gap=alpha - second,
    )


def slope_gradient_grid(fs: FieldSample, sf: SlopeField,
                        near_tie: float | None = None) -> tuple[Array, Array]:
    """Maximizer-based gradient of the slope field, all cells at once.

    At an interior maximizer t the gradient is the difference quotient of
    grad f between z + t e1 and z; at t = 0 it is the first column of the
    Hessian.  Cells whose runner-up gap is below near_tie (pass
    GAP_FACTOR * spacing for the default heuristic) fall back to central
    differences of alpha, where the maximizer identity is unstable.
    Margin cells are computed like any other; the caller decides whether
    to trust them.
    """
    if fs.spec != sf.spec:
        raise ValueError("field and slope grids differ")
    h = fs.spec.spacing
    t = sf.argmax_t
    k = np.rint(t / h).astype(np.int64)
    ny, nx = fs.spec.shape
    src = np.arange(nx)[None, :] + k
    assert src.max() < nx, "maximizer outside grid"
    df1s = np.take_along_axis(fs.df1, src, axis=1)
    df2s = np.take_along_axis(fs.df2, src, axis=1)
    tsafe = np.where(k == 0, 1.0, t)
    gx = np.where(k == 0, fs.d2f11, (df1s - fs.df1) / tsafe)
    gy = np.where(k == 0, fs.d2f12, (df2s - fs.df2) / tsafe)
    if near_tie is not None and nx >= 2 and ny >= 2:
        shaky = sf.gap < near_tie
        if shaky.any():
            cy, cx = np.gradient(sf.alpha, h)
            gx = np.where(shaky, cx, gx)
            gy = np.where(shaky, cy, gy)
    return gx, gy


def slope_gradient(fs: FieldSample, sf: SlopeField, cell: tuple[int, int]) -> Array:
    """Gradient vector at one cell (ix, iy); refuses margin cells."""
    ix, iy = cell
    ny, nx = fs.spec.shape
    if not (0 <= ix < nx and 0 <= iy < ny):
        raise BoundsError(f"cell {cell} outside the {nx}x{ny} window")
    if ix >= sf.trusted_nx:
        raise MarginError(f"cell {cell} lies in the censored margin")
    h = fs.spec.spacing
    t = float(sf.argmax_t[iy, ix])
    k = int(round(t / h))
    if k == 0:
        return np.array([fs.d2f11[iy, ix], fs.d2f12[iy, ix]])
    return np.array([
        (fs.df1[iy, ix + k] - fs.df1[iy, ix]) / t,
        (fs.df2[iy, ix + k] - fs.df2[iy, ix]) / t,
    ])
