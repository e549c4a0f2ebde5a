"""Return-level inference from stable block sums.

The estimator raises the supremum norm of each observation to the power
alpha_hat, sums over disjoint blocks of length b, and fits a totally
right-skewed stable law to the sums.  A likelihood-ratio test of the
stability index a = 1 gates the estimate: when a = 1 is not rejected, the
T-observation return level of coordinate j is

    z(j) = quantile(theta_hat_{a=1}, (1 - 1/(T * m(j)))^b)^(1/alpha_hat),

with m(j) the spatial clustering index.  Confidence intervals come from a
parametric percentile bootstrap that refits the model on replicates drawn
from the fitted law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dist
from .errors import ConvergenceError, PreconditionError, TooFewPointsError
from .series import MultiSeries, as_multiseries
from .tailindex import SpatialIndexes

__all__ = [
    "BlockSumSeries",
    "ReturnLevelEstimate",
    "BlockSelection",
    "block_sums",
    "estimate_return_levels",
    "bootstrap_ci",
    "select_block_length",
    "qq_stable_diagnostics",
]

POLICIES = ("paper_min_pvalue", "max_pvalue", "first_accepted")

_FAST_FIT_OPTIONS = {"maxiter": 300, "xatol": 1.0e-4, "fatol": 1.0e-4}


@dataclass(frozen=True)
class BlockSumSeries:
    """Sums of |X_t|^p over disjoint consecutive blocks of length b."""

    sums: np.ndarray
    b: int
    p: float
    n_used: int
    discarded: int


@dataclass(frozen=True)
class ReturnLevelEstimate:
    """Return levels per coordinate with provenance.

    ``z`` and the CI vectors are None when the a = 1 test rejected
    (``accepted`` False); callers must then pick another (alpha, b) pair.
    """

    z: np.ndarray | None
    T_obs: float
    ci_low: np.ndarray | None
    ci_high: np.ndarray | None
    accepted: bool
    stable_fit: dist.StableFit
    lrt: dist.LrtResult
    alpha_hat: float
    b: int
    k: int | None
    m_hat: np.ndarray

    def to_dict(self) -> dict:
        p = self.stable_fit.params
        return {
            "z": None if self.z is None else list(map(float, self.z)),
            "T_obs": float(self.T_obs),
            "ci_low": None if self.ci_low is None else list(map(float, self.ci_low)),
            "ci_high": None if self.ci_high is None else list(map(float, self.ci_high)),
            "accepted": bool(self.accepted),
            "lrt_statistic": float(self.lrt.statistic),
            "lrt_p_value": float(self.lrt.p_value),
            "stable_params": {"a": p.a, "sigma": p.sigma, "beta": p.beta,
                              "mu": p.mu, "param_kind": p.param_kind},
            "alpha_hat": float(self.alpha_hat),
            "b": int(self.b),
            "k": None if self.k is None else int(self.k),
            "m_hat": list(map(float, self.m_hat)),
        }


@dataclass(frozen=True)
class BlockSelection:
    candidates: np.ndarray
    p_values: np.ndarray
    accepted_mask: np.ndarray
    chosen: int | None
    policy: str


def block_sums(series, b: int, p: float) -> BlockSumSeries:
    """Disjoint block sums of the supremum norm raised to the power p;
    trailing observations that do not fill a block are discarded."""
    s = as_multiseries(series)
    if not 1 <= b <= s.n:
        raise PreconditionError(f"block length b={b} outside 1..{s.n}")
    if p <= 0.0:
        raise PreconditionError("power p must be positive")
    n_blocks = s.n // b
    n_used = n_blocks * b
    powered = s.norms()[:n_used] ** p
    sums = powered.reshape(n_blocks, b).sum(axis=1)
    return BlockSumSeries(sums=sums, b=int(b), p=float(p),
                          n_used=int(n_used), discarded=int(s.n - n_used))


def _as_m_vector(m_hat, d) -> np.ndarray:
    if m_hat is None:
        m = np.ones(d)
    elif isinstance(m_hat, SpatialIndexes):
        m = np.asarray(m_hat.m, dtype=float)
    else:
        m = np.atleast_1d(np.asarray(m_hat, dtype=float))
    if m.size != d:
        raise PreconditionError(f"m_hat has {m.size} entries for d={d}")
    return m


def _quantile_levels(b: int, T_obs: float, m: np.ndarray) -> np.ndarray:
    """Levels (1 - 1/(T*m(j)))^b per coordinate, computed in log-space."""
    if np.any(T_obs * m <= 1.0):
        raise PreconditionError("need T_obs * m(j) > 1 for every coordinate")
    log_level = b * np.log1p(-1.0 / (T_obs * m))
    level = np.exp(log_level)
    if np.any(level >= 1.0):
        raise PreconditionError(
            "quantile level rounds to 1 in working precision; "
            "increase T resolution or reduce b")
    return level


def _levels_to_z(fit: dist.StableFit, levels: np.ndarray,
                 alpha_hat: float) -> np.ndarray:
    q = dist.quantile(fit.params, levels)
    q = np.atleast_1d(q)
    if np.any(q <= 0.0):
        raise ConvergenceError("fitted stable quantile is nonpositive")
    return q ** (1.0 / alpha_hat)


def _fit_and_test(sums: np.ndarray):
    free = dist.fit_mle(sums)
    constrained = dist.fit_mle(sums, fix_a1=True)
    lrt = dist.lrt_a_equals_1(free, constrained)
    return free, constrained, lrt


def estimate_return_levels(series, b: int, alpha_hat: float, m_hat,
                           T_obs: float, *, R: int = 100,
                           ci_level: float = 0.95, seed=None,
                           with_bootstrap: bool = True) -> ReturnLevelEstimate:
    """Block-sum return-level estimate at return period ``T_obs``
    (in observation counts)."""
    s = as_multiseries(series)
    if alpha_hat <= 0.0:
        raise PreconditionError("alpha_hat must be positive")
    m = _as_m_vector(m_hat, s.d)
    k = m_hat.k if isinstance(m_hat, SpatialIndexes) else None
    sums = block_sums(s, b, alpha_hat)
    if sums.sums.size < 20:
        raise PreconditionError(
            f"need at least 20 blocks, got {sums.sums.size}")
    levels = _quantile_levels(b, T_obs, m)  # validate before fitting

    free, constrained, lrt = _fit_and_test(sums.sums)
    if lrt.reject_at_05:
        return ReturnLevelEstimate(
            z=None, T_obs=float(T_obs), ci_low=None, ci_high=None,
            accepted=False, stable_fit=constrained, lrt=lrt,
            alpha_hat=float(alpha_hat), b=int(b), k=k, m_hat=m)

    z = _levels_to_z(constrained, levels, alpha_hat)
    ci_low = ci_high = None
    if with_bootstrap:
        ci_low, ci_high = bootstrap_ci(
            constrained, b, sums.sums.size, m, alpha_hat, T_obs,
            R=R, level=ci_level, seed=seed)
    return ReturnLevelEstimate(
        z=z, T_obs=float(T_obs), ci_low=ci_low, ci_high=ci_high,
        accepted=True, stable_fit=constrained, lrt=lrt,
        alpha_hat=float(alpha_hat), b=int(b), k=k, m_hat=m)


def _bootstrap_z_draws(fit, b, n_blocks, levels_matrix, alpha_hat, R, seed,
                       refit_free=True):
    """Replicate return levels, one row per successful bootstrap refit.

    ``levels_matrix`` has one row per return period so several T share one
    set of refits.  Replicate r draws its RNG from SeedSequence(seed) child
    r, keeping results deterministic and order-independent.

    By default each replicate refits the unconstrained stable model, so the
    interval reflects the sampling noise of the stability index as well;
    ``refit_free=False`` refits with a = 1 held fixed instead.
    """
    if not fit.constrained_a1:
        raise PreconditionError("bootstrap expects the accepted a=1 fit")
    children = np.random.SeedSequence(seed).spawn(R)
    flat_levels = levels_matrix.ravel()
    draws = []
    failures = 0
    for r in range(R):
        rng = np.random.default_rng(children[r])
        x = dist.sample(fit.params, n_blocks, seed=rng)
        try:
            refit = dist.fit_mle(x, fix_a1=not refit_free, start=fit.params,
                                 options=_FAST_FIT_OPTIONS)
            q = np.atleast_1d(dist.quantile(refit.params, flat_levels))
            if np.any(q <= 0.0):
                raise ConvergenceError("nonpositive bootstrap quantile")
        except (ConvergenceError, PreconditionError):
            failures += 1
            continue
        draws.append(q.reshape(levels_matrix.shape) ** (1.0 / alpha_hat))
    if failures > 0.2 * R:
        raise ConvergenceError(
            f"{failures}/{R} bootstrap replicates failed to fit")
    return np.array(draws)


def bootstrap_ci(fit: dist.StableFit, b: int, n_blocks: int, m_hat,
                 alpha_hat: float, T_obs: float, R: int = 100,
                 level: float = 0.95, seed=None):
    """Percentile bootstrap confidence interval for the return levels.

    Draws ``n_blocks`` values from the fitted law, refits the model,
    recomputes z, and returns the (1 -/+ level)/2 percentiles per
    coordinate.  Deterministic given ``seed``.
    """
    if not 0.0 < level < 1.0:
        raise PreconditionError("CI level must lie in (0, 1)")
    m = np.atleast_1d(np.asarray(
        m_hat.m if isinstance(m_hat, SpatialIndexes) else m_hat, dtype=float))
    levels = _quantile_levels(b, T_obs, m)[None, :]
    draws = _bootstrap_z_draws(fit, b, n_blocks, levels, alpha_hat, R, seed)
    lo = np.quantile(draws[:, 0, :], (1.0 - level) / 2.0, axis=0)
    hi = np.quantile(draws[:, 0, :], (1.0 + level) / 2.0, axis=0)
    return lo, hi


def select_block_length(series, alpha_hat: float, candidates,
                        policy: str = "paper_min_pvalue", *,
                        alpha_level: float = 0.05, min_block: int = 32,
                        max_acceptances: int = 20) -> BlockSelection:
    """Scan block-length candidates in increasing order and choose one.

    ``paper_min_pvalue`` restricts to lengths above ``min_block``, stops at
    the first ``max_acceptances`` acceptances, and picks the accepted length
    with the smallest p-value.  ``max_pvalue`` picks the accepted length
    with the largest p-value; ``first_accepted`` the first acceptance.
    """
    if policy not in POLICIES:
        raise PreconditionError(f"unknown policy {policy!r}; use one of {POLICIES}")
    s = as_multiseries(series)
    cands = sorted(int(c) for c in np.atleast_1d(candidates))
    if not cands:
        raise PreconditionError("candidates must be nonempty")
    for c in cands:
        if c < 2 or s.n // c < 20:
            raise PreconditionError(
                f"candidate b={c} violates b >= 2 with at least 20 blocks")

    evaluated = []
    p_values = []
    accepted = []
    n_counted = 0
    for c in cands:
        sums = block_sums(s, c, alpha_hat)
        _, _, lrt = _fit_and_test(sums.sums)
        evaluated.append(c)
        p_values.append(lrt.p_value)
        ok = not lrt.reject_at_05
        accepted.append(ok)
        if policy == "first_accepted" and ok:
            break
        if policy == "paper_min_pvalue" and ok and c > min_block:
            n_counted += 1
            if n_counted >= max_acceptances:
                break

    cand_arr = np.array(evaluated)
    p_arr = np.array(p_values)
    acc_arr = np.array(accepted)
    chosen = None
    if policy == "first_accepted":
        hits = np.nonzero(acc_arr)[0]
        chosen = int(cand_arr[hits[0]]) if hits.size else None
    elif policy == "max_pvalue":
        if acc_arr.any():
            idx = np.argmax(np.where(acc_arr, p_arr, -1.0))
            chosen = int(cand_arr[idx])
    else:
        eligible = acc_arr & (cand_arr > min_block)
        if eligible.any():
            idx = np.argmin(np.where(eligible, p_arr, 2.0))
            chosen = int(cand_arr[idx])
    return BlockSelection(candidates=cand_arr, p_values=p_arr,
                          accepted_mask=acc_arr, chosen=chosen, policy=policy)


def qq_stable_diagnostics(series, fit: dist.StableFit, b: int,
                          alpha_hat: float, m_hat=None,
                          mode: str = "radial") -> dict:
    """Quantile-quantile tables against the fitted stable law.

    Returns a mapping from table name ("radial" or station name) to a dict
    with "empirical" and "theoretical" arrays.

    - ``radial``: sorted block sums^(1/alpha) against fitted quantiles^(1/alpha)
      at plotting positions (i - 0.5)/m.
    - ``marginal_mv``: per coordinate j, the top floor(m(j) * n/b) order
      statistics of the raw coordinate against fitted quantiles^(1/alpha) at
      levels 1 - k/(m(j) * n/b).
    - ``marginal_uv``: per coordinate, block sums of that coordinate alone
      with its own constrained fit, levels 1 - k/(n/b).
    """
    s = as_multiseries(series)
    inv_alpha = 1.0 / alpha_hat
    if mode == "radial":
        sums = np.sort(block_sums(s, b, alpha_hat).sums)
        n_blocks = sums.size
        pos = (np.arange(1, n_blocks + 1) - 0.5) / n_blocks
        theo = np.atleast_1d(dist.quantile(fit.params, pos)) ** inv_alpha
        return {"radial": {"empirical": sums ** inv_alpha, "theoretical": theo}}

    n_blocks = s.n // b
    m = _as_m_vector(m_hat, s.d)
    out = {}
    if mode == "marginal_mv":
        for j, name in enumerate(s.names):
            count = m[j] * n_blocks
            top = int(count)
            if top < 3:
                raise TooFewPointsError(
                    f"coordinate {name}: m(j)*n/b = {count:.2f} leaves "
                    f"{top} points (< 3)")
            ks = np.arange(1, top + 1)
            levels = 1.0 - ks / count
            keep = levels > 0.0
            emp = np.sort(s.coordinate(j))[::-1][:top][keep]
            theo = np.atleast_1d(
                dist.quantile(fit.params, levels[keep])) ** inv_alpha
            out[name] = {"empirical": emp, "theoretical": theo}
        return out
    if mode == "marginal_uv":
        for j, name in enumerate(s.names):
            sums_j = block_sums(s.coordinate(j), b, alpha_hat).sums
            if sums_j.size < 20:
                raise TooFewPointsError(
                    f"coordinate {name}: only {sums_j.size} blocks")
            fit_j = dist.fit_mle(sums_j, fix_a1=True)
            ks = np.arange(1, n_blocks + 1)
            levels = 1.0 - ks / n_blocks
            keep = levels > 0.0
            emp = np.sort(s.coordinate(j))[::-1][:n_blocks][keep]
            theo = np.atleast_1d(
                dist.quantile(fit_j.params, levels[keep])) ** inv_alpha
            out[name] = {"empirical": emp, "theoretical": theo}
        return out
    raise PreconditionError(f"unknown mode {mode!r}")
