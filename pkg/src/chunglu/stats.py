"""Sample moments and the one-sample Kolmogorov-Smirnov test against N(0, s^2)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import InvalidInput

MIN_KS_SAMPLES = 8


@dataclass
class Moments:
    n: int
    mean: float
    variance: float
    skewness: float
    se_mean: float
    se_variance: float


def empirical_moments(samples) -> Moments:
    """Mean, unbiased variance, skewness ``g1`` and their standard errors.

    ``se_variance`` is the normal-theory value ``var * sqrt(2 / (n - 1))``.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise InvalidInput("need at least two samples")
    mean = math.fsum(x) / n
    dev = x - mean
    ss = math.fsum(dev * dev)
    var = ss / (n - 1)
    m2 = ss / n
    skew = math.fsum(dev ** 3) / n / m2 ** 1.5 if m2 > 0 else 0.0
    return Moments(n, mean, var, skew, math.sqrt(var / n), var * math.sqrt(2.0 / (n - 1)))


def normal_cdf(x, variance: float = 1.0):
    """CDF of N(0, variance) through ``erf`` (double-precision accurate)."""
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=np.float64) / math.sqrt(2.0 * variance)))


def kolmogorov_sf(x: float) -> float:
    """``P(K > x)`` for the limiting Kolmogorov distribution.

    Alternating series ``2 sum (-1)^(k-1) exp(-2 k^2 x^2)`` for ``x >= 1``,
    the Jacobi-transformed series below that, where the first converges slowly.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        s = sum(math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * x * x)) for k in range(1, 20))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / x * s))
    s = sum((-1) ** (k - 1) * math.exp(-2 * k * k * x * x) for k in range(1, 101))
    return min(1.0, max(0.0, 2.0 * s))


def ks_statistic(samples, variance: float = 1.0) -> float:
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    F = normal_cdf(x, variance)
    ranks = np.arange(1, n + 1)
    return float(max(np.max(ranks / n - F), np.max(F - (ranks - 1) / n)))


@dataclass
class GofResult:
    sample_size: int
    mean: float | None
    variance: float | None
    skewness: float | None
    ks_statistic: float | None
    ks_p_value: float | None
    alpha: float
    passed: bool | None
    reference_variance: float
    status: str = "ok"
    ks_p_value_half: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def ks_test_normal(samples, variance: float = 1.0, alpha: float = 0.01) -> GofResult:
    """KS test of ``samples`` against N(0, variance) with the asymptotic p-value.

    Also reports the p-value of the first half of the samples
    (``ks_p_value_half``); the pass flag uses the full sample only.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < MIN_KS_SAMPLES:
        raise InvalidInput(f"KS test needs at least {MIN_KS_SAMPLES} samples, got {n}")
    mom = empirical_moments(x)
    D = ks_statistic(x, variance)
    p = kolmogorov_sf(math.sqrt(n) * D)
    half = None
    if n // 2 >= MIN_KS_SAMPLES:
        h = x[: n // 2]
        half = kolmogorov_sf(math.sqrt(h.size) * ks_statistic(h, variance))
    return GofResult(n, mom.mean, mom.variance, mom.skewness, D, p, alpha, p >= alpha, variance,
                     ks_p_value_half=half)


def insufficient(samples, variance: float, alpha: float) -> GofResult:
    x = np.asarray(samples, dtype=np.float64).ravel()
    mean = float(x.mean()) if x.size else None
    var = float(x.var(ddof=1)) if x.size >= 2 else None
    return GofResult(int(x.size), mean, var, None, None, None, alpha, None, variance, status="insufficient data")


def gof(samples, variance: float, alpha: float) -> GofResult:
    """:func:`ks_test_normal`, or an "insufficient data" record for tiny samples."""
    if np.size(samples) < MIN_KS_SAMPLES:
        return insufficient(samples, variance, alpha)
    return ks_test_normal(samples, variance, alpha)


def histogram_rows(z, variance: float, bins: int = 32, half_width_sd: float = 4.0):
    """``(bin_left, bin_right, count, reference_density)`` rows over ±4 reference sd."""
    sd = math.sqrt(variance)
    edges = np.linspace(-half_width_sd * sd, half_width_sd * sd, bins + 1)
    counts, _ = np.histogram(np.asarray(z, dtype=np.float64).ravel(), bins=edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    dens = np.exp(-mid ** 2 / (2 * variance)) / math.sqrt(2 * math.pi * variance)
    return [(float(a), float(b), int(c), float(r)) for a, b, c, r in zip(edges[:-1], edges[1:], counts, dens)]
