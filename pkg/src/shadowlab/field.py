"""Gaussian field synthesis on padded grids.

A sample is white noise on a padded grid convolved (FFT, periodic) with the
kernel and with each of its derivative grids, scaled by the grid spacing so
that Var[f] converges to (q * q)(0).  The padding must cover the effective
kernel support; cells in the retained window then never see wraparound, so
periodic convolution is exact truncated convolution there.  Derivatives are
convolutions with derivative kernels, never finite differences of f.

Truncated variants multiply the kernel by a smooth radial cutoff that is
exactly 1 inside R/4 and exactly 0 outside R/2, with gradient below 10/R.
Both variants accept the noise grid as an argument, so coupled comparisons
draw one noise realization and convolve it twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .kernels import Covariance, Kernel, KernelError, covariance_at, eval_kernel

Array = np.ndarray

_U64 = (1 << 64) - 1


class GridError(ValueError):
    """Inconsistent grid geometry."""


class PadError(GridError):
    """Padding too small for the kernel support."""


@dataclass(frozen=True)
class GridSpec:
    """Retained window geometry plus padding, in grid units.

    The retained window is nx columns by ny rows with spacing h, the lower
    left node at origin.  Arrays are indexed [row, col] = [y, x].  The
    padded grid adds pad cells on every side and exists only inside the
    convolution.
    """

    origin: tuple[float, float]
    spacing: float
    nx: int
    ny: int
    pad: int

    def __post_init__(self):
        if self.spacing <= 0:
            raise GridError("spacing must be positive")
        if self.nx < 1 or self.ny < 1:
            raise GridError("window must be at least 1x1")
        if self.pad < 0:
            raise GridError("pad must be nonnegative")

    @property
    def padded_shape(self) -> tuple[int, int]:
        return (self.ny + 2 * self.pad, self.nx + 2 * self.pad)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def xs(self) -> Array:
        return self.origin[0] + self.spacing * np.arange(self.nx)

    def ys(self) -> Array:
        return self.origin[1] + self.spacing * np.arange(self.ny)

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin), "spacing": self.spacing,
            "nx": self.nx, "ny": self.ny, "pad": self.pad,
        }

    @staticmethod
    def from_dict(d: dict) -> "GridSpec":
        return GridSpec(
            (float(d["origin"][0]), float(d["origin"][1])),
            float(d["spacing"]), int(d["nx"]), int(d["ny"]), int(d["pad"]),
        )


def required_pad(kernel: Kernel, spacing: float, truncation: float | None = None) -> int:
    """Cells of padding that keep periodic convolution wrap-free."""
    support = kernel.trunc_radius
    if truncation is not None:
        support = min(support, truncation / 2.0)
    return int(math.ceil(support / spacing))


def grid_for_kernel(
    kernel: Kernel,
    spacing: float,
    nx: int,
    ny: int,
    origin: tuple[float, float] = (0.0, 0.0),
    truncation: float | None = None,
) -> GridSpec:
    return GridSpec(origin, spacing, nx, ny, required_pad(kernel, spacing, truncation))


@dataclass(frozen=True)
class FieldSample:
    """One realization of the field and its derivatives on the window.

    seed is the (master seed, sample index) pair that keyed the noise.
    truncation records the cutoff diameter R of the kernel, or None for the
    plain field.
    """

    spec: GridSpec
    kernel: Kernel
    seed: tuple[int, int]
    truncation: float | None
    f: Array
    df1: Array
    df2: Array
    d2f11: Array
    d2f12: Array
    d2f22: Array

    def arrays(self) -> dict[str, Array]:
        return {
            "f": self.f, "df1": self.df1, "df2": self.df2,
            "d2f11": self.d2f11, "d2f12": self.d2f12, "d2f22": self.d2f22,
        }

    def covariance_at_zero(self) -> float:
        return float(covariance_at(Covariance(self.kernel), np.zeros(2)))


def noise_generator(master_seed: int, sample_index: int = 0) -> Generator:
    """Counter-based stream keyed by (master seed, sample index).

    Each grid cell's value is then a pure function of the key and the cell's
    draw position, so results never depend on how samples are scheduled
    across threads.
    """
    key = np.array([master_seed & _U64, sample_index & _U64], dtype=np.uint64)
    return Generator(Philox(key=key))


def sample_white_noise(spec: GridSpec, master_seed: int, sample_index: int = 0) -> Array:
    """iid standard normals on the padded grid."""
    gen = noise_generator(master_seed, sample_index)
    return gen.standard_normal(spec.padded_shape, dtype=np.float64)


def _smoothstep(t: Array) -> tuple[Array, Array, Array]:
    """C-infinity step S with S=0 for t<=0, S=1 for t>=1, and S', S''."""
    t = np.asarray(t, dtype=np.float64)
    s = np.zeros_like(t)
    s1 = np.zeros_like(t)
    s2 = np.zeros_like(t)
    hi = t >= 1.0
    s[hi] = 1.0
    mid = (t > 0.0) & ~hi
    tm = t[mid]
    um = 1.0 - tm
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / um)
    a1 = a / tm**2
    b1 = b / um**2
    a2 = a * (1.0 / tm**4 - 2.0 / tm**3)
    b2 = b * (1.0 / um**4 - 2.0 / um**3)
    d = a + b
    dbdt = -b1
    d2bdt2 = b2
    n = a1 * b - a * dbdt
    n1 = a2 * b - a * d2bdt2
    d1 = a1 + dbdt
    s[mid] = a / d
    s1[mid] = n / d**2
    s2[mid] = (n1 * d - 2.0 * n * d1) / d**3
    return s, s1, s2


def cutoff_profile(r: Array, R: float) -> tuple[Array, Array, Array]:
    """Radial cutoff c(r) with c=1 for r<=R/4, c=0 for r>=R/2, |c'|<=10/R.

    Returns c, c', c''.  Implemented as the smooth step of t = 2 - 4 r / R,
    whose slope peaks at 2, so |c'| peaks at 8/R.
    """
    t = 2.0 - 4.0 * np.asarray(r, dtype=np.float64) / R
    s, s1, s2 = _smoothstep(t)
    return s, s1 * (-4.0 / R), s2 * (16.0 / (R * R))


def _offsets(n: int, h: float) -> Array:
    """Signed circular offsets i*h in ifftshift layout."""
    idx = np.arange(n)
    idx = np.where(idx <= n // 2, idx, idx - n)
    return idx * h


def kernel_grids(kernel: Kernel, spec: GridSpec, truncation: float | None = None) -> dict[str, Array]:
    """The six derivative kernels sampled on the padded grid, fft layout.

    With a cutoff, derivatives follow the product rule on q * c; sampling
    d^a q alone and multiplying by c would corrupt df1 and the Hessian.
    """
    h = spec.spacing
    nyp, nxp = spec.padded_shape
    dx = _offsets(nxp, h)
    dy = _offsets(nyp, h)
    xx, yy = np.meshgrid(dx, dy)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    shape = (nyp, nxp)
    q = {
        name: eval_kernel(kernel, pts, order).reshape(shape)
        for name, order in (
            ("f", (0, 0)), ("df1", (1, 0)), ("df2", (0, 1)),
            ("d2f11", (2, 0)), ("d2f12", (1, 1)), ("d2f22", (0, 2)),
        )
    }
    if truncation is None:
        return q

    R = truncation
    if R >= 4.0 * kernel.trunc_radius:
        # cutoff is identically 1 on the whole support: same grids bitwise
        return q
    r = np.hypot(xx, yy)
    c, c1, c2 = cutoff_profile(r, R)
    band = (r > R / 4.0) & (r < R / 2.0)
    rb = r[band]
    inv = 1.0 / rb
    ex, ey = xx[band] * inv, yy[band] * inv
    cx = np.zeros_like(c)
    cy = np.zeros_like(c)
    cxx = np.zeros_like(c)
    cxy = np.zeros_like(c)
    cyy = np.zeros_like(c)
    cx[band] = c1[band] * ex
    cy[band] = c1[band] * ey
    cxx[band] = c2[band] * ex * ex + c1[band] * (1.0 - ex * ex) * inv
    cyy[band] = c2[band] * ey * ey + c1[band] * (1.0 - ey * ey) * inv
    cxy[band] = c2[band] * ex * ey - c1[band] * ex * ey * inv
    return {
        "f": q["f"] * c,
        "df1": q["df1"] * c + q["f"] * cx,
        "df2": q["df2"] * c + q["f"] * cy,
        "d2f11": q["d2f11"] * c + 2.0 * q["df1"] * cx + q["f"] * cxx,
        "d2f12": q["d2f12"] * c + q["df1"] * cy + q["df2"] * cx + q["f"] * cxy,
        "d2f22": q["d2f22"] * c + 2.0 * q["df2"] * cy + q["f"] * cyy,
    }


def convolve_field(
    noise: Array,
    kernel: Kernel,
    spec: GridSpec,
    seed: tuple[int, int] = (0, 0),
    truncation: float | None = None,
) -> FieldSample:
    """Convolve one noise grid with the kernel and its derivative grids."""
    if noise.shape != spec.padded_shape:
        raise GridError(
            f"noise shape {noise.shape} does not match padded {spec.padded_shape}")
    if truncation is not None and truncation < 1.0:
        raise KernelError("cutoff diameter R must be at least 1")
    need = required_pad(kernel, spec.spacing, truncation)
    if spec.pad < need:
        raise PadError(f"pad {spec.pad} below required {need}")

    grids = kernel_grids(kernel, spec, truncation)
    fn = np.fft.rfft2(noise)
    h = spec.spacing
    p = spec.pad
    out = {}
    for name, kg in grids.items():
        full = np.fft.irfft2(fn * np.fft.rfft2(kg), s=spec.padded_shape) * h
        out[name] = np.ascontiguousarray(full[p:p + spec.ny, p:p + spec.nx])
    return FieldSample(spec=spec, kernel=kernel, seed=seed,
                       truncation=truncation, **out)


def draw_field(
    kernel: Kernel,
    spec: GridSpec,
    master_seed: int,
    sample_index: int = 0,
    truncation: float | None = None,
) -> FieldSample:
    noise = sample_white_noise(spec, master_seed, sample_index)
    return convolve_field(noise, kernel, spec, (master_seed, sample_index), truncation)


def truncated_field(
    noise: Array,
    kernel: Kernel,
    spec: GridSpec,
    R: float,
    seed: tuple[int, int] = (0, 0),
) -> FieldSample:
    """The cutoff-kernel field from an existing noise grid."""
    return convolve_field(noise, kernel, spec, seed, truncation=R)
