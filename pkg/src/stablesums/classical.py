"""Classical extreme-value baselines.

Peaks-over-threshold with intervals declustering and generalized Pareto
fitting, the Ferro-Segers intervals estimator of the extremal index, and
block maxima with GEV fitting.  Confidence intervals use the
observed-information delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (ConvergenceError, DegenerateDataError,
                     NoExceedancesError, PreconditionError, TooFewPointsError)

__all__ = [
    "ExtremalIndexEstimate",
    "GpdFit",
    "GevFit",
    "ReturnLevelCI",
    "ferro_segers_theta",
    "decluster_intervals",
    "fit_gpd",
    "pot_return_level",
    "fit_gev",
    "block_maxima_return_level",
    "pot_pipeline",
    "block_maxima_pipeline",
]


@dataclass(frozen=True)
class ExtremalIndexEstimate:
    theta: float
    n_exceed: int
    interexceedance_times: np.ndarray


@dataclass(frozen=True)
class GpdFit:
    u: float
    sigma: float
    xi: float
    n_exceed: int
    n_clusters: int
    zeta_u: float
    cov: np.ndarray | None = None


@dataclass(frozen=True)
class GevFit:
    mu: float
    sigma: float
    xi: float
    block_length: int
    theta_hat: float
    cov: np.ndarray | None = None


@dataclass(frozen=True)
class ReturnLevelCI:
    z: float
    ci_low: float
    ci_high: float
    se: float


def _exceedance_indices(x, threshold_quantile):
    u = float(np.quantile(x, threshold_quantile))
    idx = np.nonzero(x > u)[0]
    return u, idx


def ferro_segers_theta(sample, threshold_quantile: float = 0.95) -> ExtremalIndexEstimate:
    """Intervals estimator of the extremal index from interexceedance times."""
    x = np.asarray(sample, dtype=float)
    _, idx = _exceedance_indices(x, threshold_quantile)
    if idx.size < 2:
        raise TooFewPointsError("extremal index needs at least 2 exceedances")
    T = np.diff(idx).astype(float)
    if np.max(T) <= 2.0:
        theta = 2.0 * np.sum(T) ** 2 / ((idx.size - 1) * np.sum(T * T))
    else:
        theta = (2.0 * np.sum(T - 1.0) ** 2
                 / ((idx.size - 1) * np.sum((T - 1.0) * (T - 2.0))))
    return ExtremalIndexEstimate(theta=min(1.0, float(theta)),
                                 n_exceed=int(idx.size),
                                 interexceedance_times=T.astype(int))


def decluster_intervals(sample, threshold_quantile: float = 0.95) -> np.ndarray:
    """Cluster maxima after intervals declustering.

    The number of clusters is C = max(1, floor(theta * n_exceed)); the C - 1
    largest interexceedance times (ties broken by earliest position) split
    the exceedances into clusters.
    """
    x = np.asarray(sample, dtype=float)
    est = ferro_segers_theta(x, threshold_quantile)
    _, idx = _exceedance_indices(x, threshold_quantile)
    values = x[idx]
    C = max(1, int(est.theta * idx.size))
    if C >= idx.size:
        return values.copy()
    T = np.diff(idx)
    order = np.argsort(-T, kind="stable")  # descending, earliest first on ties
    splits = np.sort(order[:C - 1])
    bounds = np.concatenate(([0], splits + 1, [idx.size]))
    return np.array([values[a:b].max() for a, b in zip(bounds[:-1], bounds[1:])])


def _num_hessian(f, x, rel_step=1.0e-4):
    p = x.size
    h = rel_step * np.maximum(np.abs(x), 1.0e-2)
    H = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            ei = np.zeros(p)
            ej = np.zeros(p)
            ei[i] = h[i]
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def _cov_from_nll(nll, x_hat):
    try:
        H = _num_hessian(nll, x_hat)
        cov = np.linalg.inv(H)
        if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) <= 0.0):
            return None
        return cov
    except np.linalg.LinAlgError:
        return None


def _xi_from_raw(t):
    # map an unconstrained optimizer coordinate into xi in (-0.5, 1)
    return -0.5 + 1.5 / (1.0 + math.exp(-t))


def _xi_to_raw(xi):
    p = (xi + 0.5) / 1.5
    return math.log(p / (1.0 - p))


def _gpd_nll(sigma, xi, y):
    if sigma <= 0.0:
        return 1.0e308
    r = xi * y / sigma
    if np.any(r <= -1.0):
        return 1.0e308
    if abs(xi) < 1.0e-10:
        return y.size * math.log(sigma) + float(np.sum(y)) / sigma
    return (y.size * math.log(sigma)
            + (1.0 + 1.0 / xi) * float(np.sum(np.log1p(r))))


def fit_gpd(exceedances, threshold: float = 0.0, n_total: int | None = None,
            n_clusters: int | None = None) -> GpdFit:
    """Generalized Pareto MLE on the excesses of ``exceedances`` over
    ``threshold``; ``n_total`` sets the exceedance rate zeta_u."""
    exc = np.asarray(exceedances, dtype=float)
    if exc.size < 10:
        raise TooFewPointsError(
            f"GPD fitting needs at least 10 exceedances, got {exc.size}")
    y = exc - threshold
    if np.any(y < 0.0):
        raise PreconditionError("exceedances must be at or above the threshold")
    if np.std(y) == 0.0:
        raise DegenerateDataError("all excesses are equal")

    def nll_t(theta):
        return _gpd_nll(math.exp(theta[0]), _xi_from_raw(theta[1]), y)

    start = np.array([math.log(max(np.mean(y), 1.0e-12)), _xi_to_raw(0.1)])
    res = optimize.minimize(nll_t, start, method="Nelder-Mead",
                            options={"maxiter": 800, "xatol": 1.0e-8,
                                     "fatol": 1.0e-10})
    if not res.success or not math.isfinite(res.fun):
        raise ConvergenceError("GPD likelihood optimization did not converge")
    sigma, xi = math.exp(res.x[0]), _xi_from_raw(res.x[1])
    cov = _cov_from_nll(lambda p: _gpd_nll(p[0], p[1], y),
                        np.array([sigma, xi]))
    return GpdFit(u=float(threshold), sigma=sigma, xi=xi,
                  n_exceed=int(exc.size),
                  n_clusters=int(n_clusters if n_clusters is not None else exc.size),
                  zeta_u=float(exc.size / n_total) if n_total else 1.0,
                  cov=cov)


def pot_return_level(fit: GpdFit, T_obs: float, theta: float = 1.0) -> ReturnLevelCI:
    """Peaks-over-threshold return level with delta-method CI."""
    Q = T_obs * fit.zeta_u * theta
    if Q <= 1.0:
        raise PreconditionError(
            f"return period too short: T_obs * zeta_u * theta = {Q} <= 1")
    sigma, xi = fit.sigma, fit.xi
    logQ = math.log(Q)
    if abs(xi) < 1.0e-8:
        z = fit.u + sigma * logQ
        grad = np.array([logQ, sigma * logQ * logQ / 2.0])
    else:
        Qxi = Q ** xi
        z = fit.u + sigma / xi * (Qxi - 1.0)
        grad = np.array([(Qxi - 1.0) / xi,
                         sigma * (Qxi * logQ * xi - (Qxi - 1.0)) / (xi * xi)])
    se = 0.0
    if fit.cov is not None:
        var = float(grad @ fit.cov @ grad)
        se = math.sqrt(max(var, 0.0))
    half = 1.959963984540054 * se
    return ReturnLevelCI(z=float(z), ci_low=float(z - half),
                         ci_high=float(z + half), se=se)


def _gev_nll(mu, sigma, xi, x):
    if sigma <= 0.0:
        return 1.0e308
    s = (x - mu) / sigma
    if abs(xi) < 1.0e-10:
        return x.size * math.log(sigma) + float(np.sum(s + np.exp(-s)))
    r = 1.0 + xi * s
    if np.any(r <= 0.0):
        return 1.0e308
    logr = np.log(r)
    return (x.size * math.log(sigma)
            + float(np.sum((1.0 + 1.0 / xi) * logr + np.exp(-logr / xi))))


def fit_gev(block_maxima, block_length: int = 1, theta_hat: float = 1.0) -> GevFit:
    """GEV MLE on disjoint block maxima."""
    x = np.asarray(block_maxima, dtype=float)
    if x.size < 20:
        raise TooFewPointsError(
            f"GEV fitting needs at least 20 block maxima, got {x.size}")
    if np.std(x) == 0.0:
        raise DegenerateDataError("all block maxima are equal")

    sigma0 = max(float(np.std(x)) * math.sqrt(6.0) / math.pi, 1.0e-12)
    mu0 = float(np.mean(x)) - 0.5772156649015329 * sigma0

    def nll_t(theta):
        return _gev_nll(theta[0], math.exp(theta[1]), _xi_from_raw(theta[2]), x)

    start = np.array([mu0, math.log(sigma0), _xi_to_raw(0.1)])
    res = optimize.minimize(nll_t, start, method="Nelder-Mead",
                            options={"maxiter": 1200, "xatol": 1.0e-8,
                                     "fatol": 1.0e-10})
    if not res.success or not math.isfinite(res.fun):
        raise ConvergenceError("GEV likelihood optimization did not converge")
    mu, sigma, xi = res.x[0], math.exp(res.x[1]), _xi_from_raw(res.x[2])
    cov = _cov_from_nll(lambda p: _gev_nll(p[0], p[1], p[2], x),
                        np.array([mu, sigma, xi]))
    return GevFit(mu=float(mu), sigma=float(sigma), xi=float(xi),
                  block_length=int(block_length), theta_hat=float(theta_hat),
                  cov=cov)


def block_maxima_return_level(fit: GevFit, T_obs: float) -> ReturnLevelCI:
    """Return level from a GEV fit: the GEV quantile at the block-maximum
    level (1 - 1/T_obs)^(block_length * theta_hat), with delta-method CI."""
    if T_obs <= 1.0:
        raise PreconditionError("T_obs must exceed 1")
    level = (1.0 - 1.0 / T_obs) ** (fit.block_length * fit.theta_hat)
    y = -math.log(level)
    mu, sigma, xi = fit.mu, fit.sigma, fit.xi
    logy = math.log(y)
    if abs(xi) < 1.0e-8:
        z = mu - sigma * logy
        grad = np.array([1.0, -logy, sigma * logy * logy / 2.0])
    else:
        t = y ** (-xi)
        z = mu + sigma * (t - 1.0) / xi
        grad = np.array([1.0, (t - 1.0) / xi,
                         sigma * (-xi * t * logy - t + 1.0) / (xi * xi)])
    se = 0.0
    if fit.cov is not None:
        var = float(grad @ fit.cov @ grad)
        se = math.sqrt(max(var, 0.0))
    half = 1.959963984540054 * se
    return ReturnLevelCI(z=float(z), ci_low=float(z - half),
                         ci_high=float(z + half), se=se)


def pot_pipeline(sample, T_obs: float,
                 threshold_quantile: float = 0.95) -> ReturnLevelCI:
    """Declustered POT: threshold at the given quantile, intervals
    declustering, GPD on cluster maxima, extremal-index-adjusted level."""
    x = np.asarray(sample, dtype=float)
    u, idx = _exceedance_indices(x, threshold_quantile)
    if idx.size == 0:
        raise NoExceedancesError("no observations exceed the threshold")
    est = ferro_segers_theta(x, threshold_quantile)
    cluster_max = decluster_intervals(x, threshold_quantile)
    fit = fit_gpd(cluster_max, threshold=u, n_total=x.size,
                  n_clusters=cluster_max.size)
    # zeta_u tracks raw exceedances; the GPD is fit on cluster maxima
    fit = GpdFit(u=fit.u, sigma=fit.sigma, xi=fit.xi, n_exceed=int(idx.size),
                 n_clusters=fit.n_clusters, zeta_u=idx.size / x.size,
                 cov=fit.cov)
    return pot_return_level(fit, T_obs, est.theta)


def block_maxima_pipeline(sample, T_obs: float, block_length: int = 20,
                          threshold_quantile: float = 0.95) -> ReturnLevelCI:
    """Block maxima with GEV fit and extremal-index-corrected level."""
    x = np.asarray(sample, dtype=float)
    n_blocks = x.size // block_length
    if n_blocks < 20:
        raise TooFewPointsError("need at least 20 complete blocks")
    maxima = x[:n_blocks * block_length].reshape(n_blocks, block_length).max(axis=1)
    theta = ferro_segers_theta(x, threshold_quantile).theta
    fit = fit_gev(maxima, block_length=block_length, theta_hat=theta)
    return block_maxima_return_level(fit, T_obs)
