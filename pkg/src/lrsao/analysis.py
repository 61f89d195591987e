"""Closed-form expectations, harmonic-number tools and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .agent import default_hyperparams
from .errors import EmptyInput, RangeError
from .objectives import ProblemParams

# Euler-Mascheroni constant to 20 significant digits.
EULER_GAMMA = 0.57721566490153286061

EXACT_HARMONIC_LIMIT = 10**6


def harmonic(m: int) -> float:
    """H_m = 1 + 1/2 + ... + 1/m, with H_0 = 0.

    Exact summation of the rounded terms up to ``EXACT_HARMONIC_LIMIT``;
    above that the three-term asymptotic expansion.
    """
    if m < 0:
        raise RangeError(f"harmonic number needs m >= 0, got {m}")
    if m == 0:
        return 0.0
    if m <= EXACT_HARMONIC_LIMIT:
        return math.fsum(1.0 / k for k in range(1, m + 1))
    return math.log(m) + EULER_GAMMA + 1.0 / (2 * m)


def harmonic_diff(hi: int, lo: int) -> float:
    """H_hi - H_lo for 0 <= lo <= hi, summed directly to avoid cancellation."""
    if not 0 <= lo <= hi:
        raise RangeError(f"need 0 <= lo <= hi, got lo={lo}, hi={hi}")
    if hi <= EXACT_HARMONIC_LIMIT:
        return math.fsum(1.0 / k for k in range(lo + 1, hi + 1))
    return harmonic(hi) - harmonic(lo)


@lru_cache(maxsize=4)
def harmonic_table(m_max: int) -> np.ndarray:
    """``H_0 .. H_m_max`` by a running Neumaier-compensated sum."""
    out = np.empty(m_max + 1, dtype=np.float64)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for k in range(1, m_max + 1):
        x = 1.0 / k
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[k] = s + c
    out.flags.writeable = False
    return out


def harmonic_excess(m, h=None):
    """``H_m - ln(m) - gamma_E``; vectorized over ``m``."""
    m = np.asarray(m)
    if h is None:
        h = harmonic_table(int(np.max(m)))[m]
    return h - np.log(m) - EULER_GAMMA


def check_harmonic_bounds(m: int, h: float | None = None) -> bool:
    """Whether ``1/(2m+1) <= H_m - ln m - gamma_E <= 1/(2m)`` holds."""
    if m < 1:
        raise RangeError(f"m must be >= 1, got {m}")
    if h is None:
        h = harmonic(m)
    d = h - math.log(m) - EULER_GAMMA
    return 1.0 / (2 * m + 1) <= d <= 1.0 / (2 * m)


def sweep_harmonic_bounds(m_max: int) -> np.ndarray:
    """Values of ``m`` in ``[1 .. m_max]`` where the bounds fail (empty if none)."""
    m = np.arange(1, m_max + 1)
    d = harmonic_excess(m, harmonic_table(m_max)[1:])
    ok = (1.0 / (2 * m + 1) <= d) & (d <= 1.0 / (2 * m))
    return m[~ok]


def expected_t1_closed_form(p: ProblemParams) -> float:
    """Expected first hitting time of weight ``ell + 1``."""
    n, ell = p.n, p.ell
    return 2.0 / (3.0 * (2 * n - 1)) + n * harmonic_diff(n, n - ell - 1)


def t1_upper_bound(p: ProblemParams) -> float:
    return 2.0 * (p.ell + 1) * math.log(2.0)


def plateau_crossing_expectation(n: int, k: int, b: int) -> float:
    """Expected time to reach ``b + 1`` from ``k`` when only forward moves are accepted."""
    if not (0 <= k <= b + 1 and b < n):
        raise RangeError(f"need 0 <= k <= b+1 and b < n, got n={n}, k={k}, b={b}")
    return n * harmonic_diff(n - k, n - (b + 1))


def phase_bounds(p: ProblemParams) -> dict:
    n, ell = p.n, p.ell
    ratio = (n - ell - 3) / (ell + 1)
    log_term = 5 * n * math.log(ratio) if n - ell - 3 >= ell + 1 else 0.0
    return {
        "t1_ub": t1_upper_bound(p),
        "t2_ub_main": log_term + 2.0 * n / ell,
        "t3_sub2_ub": n * harmonic(ell),
    }


def q_upper_bound(p: ProblemParams, gamma: float) -> float:
    return (p.n - p.ell - 1) / (1.0 - gamma)


def theory_summary(p: ProblemParams) -> dict:
    h = default_hyperparams(p)
    out = {"n": p.n, "ell": p.ell, "expected_t1": expected_t1_closed_form(p)}
    out.update(phase_bounds(p))
    out["q_upper_bound"] = q_upper_bound(p, h.gamma)
    return out


@dataclass(frozen=True)
class CiEstimate:
    mean: float
    ci95_lo: float
    ci95_hi: float
    n_samples: int
    std_err: float

    @property
    def half_width(self) -> float:
        return self.ci95_hi - self.mean


def mean_ci(samples) -> CiEstimate:
    """Sample mean with a normal-approximation 95% interval."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyInput("mean_ci needs at least one sample")
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return CiEstimate(mean, mean - 1.96 * se, mean + 1.96 * se, int(x.size), se)


def loglog_slope(points) -> float:
    """Least-squares slope of ``log T`` against ``log n``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise RangeError("need at least two (n, T) pairs")
    if np.any(pts <= 0):
        raise RangeError("log-log fit needs strictly positive n and T")
    slope, _ = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope)
