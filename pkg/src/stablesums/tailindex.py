"""Tail-index estimation, spatial clustering indexes and the extremogram.

The bias-corrected Hill estimator is the minimum-variance reduced-bias
version: gamma_bar = gamma_H * (1 - beta_hat * (n/k)^rho_hat / (1 - rho_hat)),
with the second-order parameter rho estimated by the standard T-statistic
of the scaled log-spacings (tau = 0 variant) and beta by its least-squares
moment estimator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDataError, NoExceedancesError,
                     PreconditionError, TooFewPointsError)
from .series import MultiSeries, as_multiseries

__all__ = [
    "TailFit",
    "SpatialIndexes",
    "Extremogram",
    "hill",
    "rho_second_order",
    "unbiased_hill",
    "spatial_indexes",
    "extremogram",
]


@dataclass(frozen=True)
class TailFit:
    """Tail index estimate from the top k order statistics."""

    alpha_hat: float
    gamma_hat: float
    k: int
    rho_hat: float
    corrected: bool


@dataclass(frozen=True)
class SpatialIndexes:
    """Per-coordinate clustering indexes m(j) in [0, 1]."""

    m: np.ndarray
    k: int
    alpha_used: float


@dataclass(frozen=True)
class Extremogram:
    lags: np.ndarray
    values: np.ndarray
    baseline: float
    threshold_quantile: float


def _top_log_spacings(sample, k):
    """Descending log order statistics l_1 >= ... >= l_{k+1}."""
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1:
        raise PreconditionError("sample must be one-dimensional")
    n = x.size
    if not 2 <= k < n:
        raise PreconditionError(f"need 2 <= k < n, got k={k}, n={n}")
    top = np.sort(x)[-(k + 1):][::-1]
    if top[-1] <= 0.0:
        raise PreconditionError(
            "top k+1 order statistics must be strictly positive")
    return np.log(top)


def hill(sample, k: int) -> TailFit:
    """Plain Hill estimator on the top ``k`` order statistics."""
    logs = _top_log_spacings(sample, k)
    gamma = float(np.mean(logs[:k] - logs[k]))
    if gamma == 0.0:
        raise DegenerateDataError("degenerate tail: all top order statistics equal")
    return TailFit(alpha_hat=1.0 / gamma, gamma_hat=gamma, k=k,
                   rho_hat=0.0, corrected=False)


def _rho_trajectory(sample, k):
    """Pointwise second-order estimates rho(k_rho) for 2 <= k_rho <= k.

    Each estimate is rho = -|3(T - 1)/(T - 3)| with T built from the first
    three log-excess moments.  Returns (k_rho values, estimates); entries
    may be non-finite.
    """
    logs = _top_log_spacings(sample, k)
    # cumulative power sums of l_1..l_k enable all k_rho at once
    l = logs[:k]
    c1 = np.cumsum(l)
    c2 = np.cumsum(l * l)
    c3 = np.cumsum(l ** 3)
    m = np.arange(2, k + 1)
    thr = logs[m]  # l_{k_rho + 1}
    s1 = c1[m - 1]
    s2 = c2[m - 1]
    s3 = c3[m - 1]
    M1 = s1 / m - thr
    M2 = (s2 - 2.0 * thr * s1) / m + thr * thr
    M3 = (s3 - 3.0 * thr * s2 + 3.0 * thr * thr * s1) / m - thr ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.log(M1) - 0.5 * np.log(M2 / 2.0)
        den = 0.5 * np.log(M2 / 2.0) - np.log(M3 / 6.0) / 3.0
        T = num / den
        rho = -np.abs(3.0 * (T - 1.0) / (T - 3.0))
    return m, rho


def rho_second_order(sample, k: int) -> float:
    """Second-order regular-variation parameter rho <= 0: the median of the
    pointwise estimates over 2 <= k_rho <= k, clipped to nonpositive."""
    if k < 10:
        raise TooFewPointsError(f"rho estimation needs k >= 10, got {k}")
    _, rho = _rho_trajectory(sample, k)
    rho = rho[np.isfinite(rho)]
    if rho.size == 0:
        raise DegenerateDataError("no finite second-order estimates")
    return float(min(np.median(rho), 0.0))


def _rho_for_correction(sample, top_frac: float = 0.9) -> float:
    """rho estimate used inside the bias correction.

    The pointwise estimates stabilize only for large k_rho, so this takes
    the median over the top (1 - top_frac) share of k_rho up to n^0.995,
    which is far less noisy than the all-k median.
    """
    n = np.asarray(sample).size
    k_max = min(int(n ** 0.995), n - 2)
    if k_max < 10:
        raise TooFewPointsError("sample too short for rho estimation")
    m, rho = _rho_trajectory(sample, k_max)
    sel = np.isfinite(rho) & (m >= int(top_frac * k_max))
    if not sel.any():
        raise DegenerateDataError("no finite second-order estimates")
    return float(min(np.median(rho[sel]), 0.0))


def unbiased_hill(sample, k: int, rho: float | None = None) -> TailFit:
    """Bias-corrected Hill estimator; falls back to plain Hill (with a
    warning and ``corrected=False``) when the correction is non-finite.

    ``rho`` overrides the second-order parameter; by default it is
    estimated from the stable upper portion of the pointwise trajectory.
    """
    plain = hill(sample, k)
    if rho is None:
        rho = _rho_for_correction(sample)
    if rho > 0.0:
        raise PreconditionError("rho must be nonpositive")
    x = np.asarray(sample, dtype=float)
    n = x.size
    # the scale beta of the second-order term is estimated at the same high
    # level as rho; both stabilize only near the full sample
    k1 = min(int(n ** 0.995), n - 2)
    logs = _top_log_spacings(sample, k1)
    i = np.arange(1, k1 + 1)
    U = i * (logs[:k1] - logs[1:k1 + 1])
    frac = (i / k1).astype(float)

    def d_k(r):
        return float(np.mean(frac ** (-r)))

    def D_k(r):
        return float(np.mean(frac ** (-r) * U))

    with np.errstate(all="ignore"):
        beta = ((k1 / n) ** rho
                * (d_k(rho) * D_k(0.0) - D_k(rho))
                / (d_k(rho) * D_k(rho) - D_k(2.0 * rho)))
        gamma = plain.gamma_hat * (1.0 - beta * (n / k) ** rho / (1.0 - rho))
    if not np.isfinite(gamma) or gamma <= 0.0:
        warnings.warn("bias correction non-finite; returning plain Hill",
                      RuntimeWarning, stacklevel=2)
        return plain
    return TailFit(alpha_hat=1.0 / gamma, gamma_hat=float(gamma), k=k,
                   rho_hat=rho, corrected=True)


def spatial_indexes(series, alpha: float,
                    threshold_quantile: float = 0.95) -> SpatialIndexes:
    """Clustering indexes m(j): the expected share of coordinate j's
    alpha-power in the norm's alpha-power, over high-norm observations."""
    s = as_multiseries(series)
    if alpha <= 0.0:
        raise PreconditionError("alpha must be positive")
    if s.n < 20:
        raise PreconditionError(f"series needs at least 20 rows, got {s.n}")
    norms = s.norms()
    if np.max(norms) == 0.0:
        raise DegenerateDataError("all-zero series")
    u = np.quantile(norms, threshold_quantile)
    keep = norms >= u
    k = int(np.count_nonzero(keep))
    if s.d == 1:
        return SpatialIndexes(m=np.ones(1), k=k, alpha_used=float(alpha))
    v = s.values[keep]
    nk = norms[keep]
    ratios = np.clip(v, 0.0, None) ** alpha / nk[:, None] ** alpha
    return SpatialIndexes(m=ratios.mean(axis=0), k=k, alpha_used=float(alpha))


def extremogram(series, max_lag: int,
                threshold_quantile: float = 0.95) -> Extremogram:
    """Empirical extremogram of threshold exceedances of the norm sample."""
    s = as_multiseries(series)
    x = s.norms() if s.d > 1 else s.values[:, 0]
    n = x.size
    if max_lag >= n / 4:
        raise PreconditionError(f"max_lag={max_lag} must be below n/4={n / 4}")
    u = np.quantile(x, threshold_quantile)
    exceed = x > u
    if not exceed.any():
        raise NoExceedancesError("no observations exceed the threshold")
    lags = np.arange(max_lag + 1)
    values = np.empty(max_lag + 1)
    for h in lags:
        head = exceed[:n - h] if h > 0 else exceed
        denom = int(np.count_nonzero(head))
        if denom == 0:
            values[h] = 0.0
            continue
        joint = int(np.count_nonzero(head & exceed[h:])) if h > 0 else denom
        values[h] = joint / denom
    return Extremogram(lags=lags, values=values,
                       baseline=1.0 - threshold_quantile,
                       threshold_quantile=float(threshold_quantile))
