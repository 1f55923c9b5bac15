"""Small statistical estimators shared by the experiment modules.

Proportions get Wilson intervals, ratio-like quantities get bootstrap
percentile intervals, and the conditional-expectation estimate used by
the level-length comparison is a gaussian-kernel Nadaraya-Watson
regression with a shared Silverman bandwidth.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError

Array = np.ndarray


def wilson_interval(hits: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ConfigError("need at least one trial")
    if not 0 <= hits <= n:
        raise ConfigError("hits must lie in [0, n]")
    if not 0.0 < confidence < 1.0:
        raise ConfigError("confidence must be in (0, 1)")
    z = float(ndtri(0.5 + confidence / 2.0))
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def bootstrap_ci(values: Array, stat=np.mean, n_boot: int = 2000,
                 confidence: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for stat(values)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ConfigError("cannot bootstrap an empty sample")
    gen = np.random.default_rng(seed)
    idx = gen.integers(0, values.size, size=(n_boot, values.size))
    reps = np.apply_along_axis(stat, 1, values[idx])
    lo = (1.0 - confidence) / 2.0
    return (float(np.quantile(reps, lo)), float(np.quantile(reps, 1.0 - lo)))


def silverman_bandwidth(values: Array) -> float:
    """Silverman's rule of thumb, robust spread variant."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n < 2:
        raise ConfigError("bandwidth needs at least two values")
    sd = float(values.std(ddof=1))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        raise ConfigError("sample has zero spread")
    return 0.9 * spread * n ** (-0.2)


def _gauss(u: Array) -> Array:
    return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def kde(values: Array, points, bandwidth: float | None = None) -> Array:
    """Gaussian kernel density estimate of the sample at the points."""
    values = np.asarray(values, dtype=np.float64)
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    if bandwidth is None:
        bandwidth = silverman_bandwidth(values)
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    w = _gauss((pts[:, None] - values[None, :]) / bandwidth)
    out = w.sum(axis=1) / (values.size * bandwidth)
    return out if np.ndim(points) else float(out[0])


def nadaraya_watson(x: Array, y: Array, points, bandwidth: float | None = None) -> Array:
    """Kernel-regression estimate of E[y | x = point]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ConfigError("x and y must be paired")
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    if bandwidth is None:
        bandwidth = silverman_bandwidth(x)
    w = _gauss((pts[:, None] - x[None, :]) / bandwidth)
    denom = w.sum(axis=1)
    if np.any(denom <= 0):
        raise ConfigError("no sample mass near a requested point")
    out = (w * y[None, :]).sum(axis=1) / denom
    return out if np.ndim(points) else float(out[0])
