"""Monte Carlo harness: coverage studies and multivariate-vs-univariate
relative efficiency.

Replicate r of a study derives its RNG stream from
SeedSequence([master_seed, model_hash, r]), so every method within a cell
sees the same simulated path (paired comparisons) and results are
reproducible and independent of evaluation order.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import blocksums, classical, dist, models, tailindex
from .errors import ConvergenceError, PreconditionError, StableSumsError

__all__ = [
    "McConfig",
    "McCell",
    "McSummary",
    "run_coverage_study",
    "relative_change",
    "true_return_level",
]

METHODS = ("stable", "stable_uv", "pot", "block_maxima")


@dataclass(frozen=True)
class McConfig:
    model: models.ModelSpec
    n: int
    n_reps: int
    T_years: tuple
    obs_per_year: int = 100
    methods: tuple = ("stable",)
    block_lengths: tuple = (64,)
    k_exponent: float = 0.9
    seed: int = 0
    R_bootstrap: int = 100
    threshold_quantile: float = 0.95
    bm_block_length: int = 20

    def __post_init__(self):
        if self.n_reps < 1:
            raise PreconditionError("n_reps must be at least 1")
        if self.obs_per_year < 1:
            raise PreconditionError("obs_per_year must be at least 1")
        object.__setattr__(self, "T_years", tuple(float(t) for t in self.T_years))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "block_lengths",
                           tuple(int(b) for b in self.block_lengths))
        for m in self.methods:
            if m not in METHODS:
                raise PreconditionError(f"unknown method {m!r}")
        if self.block_lengths and self.T_years:
            min_T_obs = min(self.T_years) * self.obs_per_year
            if min_T_obs <= max(self.block_lengths):
                raise PreconditionError(
                    "every T in observations must exceed the largest block")
        if self.model.d > 1 and ("pot" in self.methods
                                 or "block_maxima" in self.methods):
            raise PreconditionError(
                "classical baselines are univariate; use d = 1")


@dataclass(frozen=True)
class McCell:
    """Summary of one (method, T, block-length) cell."""

    method: str
    T_years: float
    b: int | None
    coverage: np.ndarray          # per coordinate, accepted replicates only
    coverage_all: np.ndarray      # per coordinate, all completed replicates
    acceptance_rate: float
    bias: np.ndarray
    variance: np.ndarray
    mse: np.ndarray
    n_accepted: int
    n_fail: int
    runtime: float


@dataclass(frozen=True)
class McSummary:
    config: McConfig
    cells: tuple
    truth: dict
    replicates: dict = field(repr=False)

    def cell(self, method, T_years, b=None) -> McCell:
        for c in self.cells:
            if c.method == method and c.T_years == T_years and c.b == b:
                return c
        raise KeyError((method, T_years, b))

    def to_rows(self) -> list:
        rows = []
        for c in self.cells:
            for j in range(c.coverage.size):
                rows.append({
                    "method": c.method, "T_years": c.T_years,
                    "b": "" if c.b is None else c.b, "coordinate": j + 1,
                    "coverage": float(c.coverage[j]),
                    "coverage_all": float(c.coverage_all[j]),
                    "acceptance_rate": c.acceptance_rate,
                    "bias": float(c.bias[j]),
                    "variance": float(c.variance[j]),
                    "mse": float(c.mse[j]),
                    "n_accepted": c.n_accepted, "n_fail": c.n_fail,
                    "runtime": c.runtime,
                })
        return rows


def true_return_level(spec: models.ModelSpec, T_obs: float,
                      coordinate: int = 0) -> float:
    """Exact marginal return level at period ``T_obs`` observations."""
    if not 0 <= coordinate < spec.d:
        raise PreconditionError(f"coordinate {coordinate} outside 0..{spec.d - 1}")
    if T_obs <= 1.0:
        raise PreconditionError("T_obs must exceed 1")
    return float(models.oracle(spec).true_quantile(1.0 - 1.0 / T_obs))


def relative_change(estimates_mv, estimates_uv, truth: float,
                    metric: str = "mse") -> float:
    """Relative percentage change (metric_UV - metric_MV)/metric_UV * 100;
    positive values favor the multivariate estimator."""
    mv = np.asarray(estimates_mv, dtype=float)
    uv = np.asarray(estimates_uv, dtype=float)
    if mv.shape != uv.shape or mv.size < 2:
        raise PreconditionError("need equal-length estimate vectors, >= 2 entries")

    def _metric(e):
        if metric == "mse":
            return float(np.mean((e - truth) ** 2))
        if metric == "variance":
            return float(np.var(e))
        if metric == "abs_bias":
            return abs(float(np.mean(e)) - truth)
        raise PreconditionError(f"unknown metric {metric!r}")

    m_uv = _metric(uv)
    if m_uv == 0.0:
        raise PreconditionError("univariate metric is zero; change undefined")
    return (m_uv - _metric(mv)) / m_uv * 100.0


def _model_hash(spec: models.ModelSpec) -> int:
    return zlib.crc32(repr(spec).encode()) & 0x7FFFFFFF


def _stable_estimate_multi(series, b, alpha, m_vec, T_obs_list, R, seed):
    """One stable-sums fit serving several return periods.

    Returns (accepted, z, ci_low, ci_high) with arrays shaped (nT, d);
    z rows are None-filled (nan) only when the a=1 test rejects.
    """
    sums = blocksums.block_sums(series, b, alpha)
    if sums.sums.size < 20:
        raise PreconditionError("fewer than 20 blocks")
    _, constrained, lrt = blocksums._fit_and_test(sums.sums)
    if lrt.reject_at_05:
        return False, None, None, None
    levels = np.vstack([blocksums._quantile_levels(b, T, m_vec)
                        for T in T_obs_list])
    q = np.atleast_1d(dist.quantile(constrained.params, levels.ravel()))
    if np.any(q <= 0.0):
        raise ConvergenceError("nonpositive fitted quantile")
    z = q.reshape(levels.shape) ** (1.0 / alpha)
    if R <= 0:
        # point estimates only (paired efficiency studies skip the CIs)
        nan = np.full_like(z, np.nan)
        return True, z, nan, nan
    draws = blocksums._bootstrap_z_draws(
        constrained, b, sums.sums.size, levels, alpha, R, seed)
    lo = np.quantile(draws, 0.025, axis=0)
    hi = np.quantile(draws, 0.975, axis=0)
    return True, z, lo, hi


def _run_replicate(config: McConfig, rep: int) -> dict:
    """All method results for one simulated path; pure given (config, rep)."""
    spec = config.model
    ss = np.random.SeedSequence([config.seed, _model_hash(spec), rep])
    rng = np.random.default_rng(ss)
    boot_seed = int(ss.generate_state(2)[1])
    series = models.simulate(spec, config.n, seed=rng)
    d = spec.d
    T_obs = [t * config.obs_per_year for t in config.T_years]
    out = {}

    if "stable" in config.methods or "stable_uv" in config.methods:
        k = int(round(config.n ** config.k_exponent))
        norms = series.norms()
        alpha_mv = tailindex.unbiased_hill(norms, k).alpha_hat
        m_vec = (tailindex.spatial_indexes(
            series, alpha_mv, config.threshold_quantile).m
            if d > 1 else np.ones(1))

    for b in config.block_lengths:
        if "stable" in config.methods:
            t0 = time.perf_counter()
            try:
                acc, z, lo, hi = _stable_estimate_multi(
                    series, b, alpha_mv, m_vec, T_obs,
                    config.R_bootstrap, boot_seed)
                out[("stable", b)] = {"ok": True, "accepted": acc,
                                      "z": z, "lo": lo, "hi": hi}
            except StableSumsError as e:
                out[("stable", b)] = {"ok": False, "error": str(e)}
            out[("stable", b)]["t"] = time.perf_counter() - t0
        if "stable_uv" in config.methods:
            t0 = time.perf_counter()
            zs, los, his, accs = [], [], [], []
            failed = False
            for j in range(d):
                coord = series.coordinate(j)
                try:
                    alpha_j = tailindex.unbiased_hill(
                        coord, int(round(config.n ** config.k_exponent))).alpha_hat
                    acc, z, lo, hi = _stable_estimate_multi(
                        coord, b, alpha_j, np.ones(1), T_obs,
                        config.R_bootstrap, boot_seed + j + 1)
                except StableSumsError:
                    failed = True
                    break
                accs.append(acc)
                zs.append(z)
                los.append(lo)
                his.append(hi)
            if failed:
                out[("stable_uv", b)] = {"ok": False, "error": "coordinate fit"}
            else:
                all_acc = all(accs)
                stack = (lambda arrs: np.concatenate(arrs, axis=1)
                         if all_acc else None)
                out[("stable_uv", b)] = {
                    "ok": True, "accepted": all_acc,
                    "z": stack(zs) if all_acc else None,
                    "lo": stack(los) if all_acc else None,
                    "hi": stack(his) if all_acc else None}
            out[("stable_uv", b)]["t"] = time.perf_counter() - t0

    x = series.coordinate(0)
    if "pot" in config.methods:
        t0 = time.perf_counter()
        try:
            rls = [classical.pot_pipeline(x, T, config.threshold_quantile)
                   for T in T_obs]
            out[("pot", None)] = {
                "ok": True, "accepted": True,
                "z": np.array([[r.z] for r in rls]),
                "lo": np.array([[r.ci_low] for r in rls]),
                "hi": np.array([[r.ci_high] for r in rls])}
        except StableSumsError as e:
            out[("pot", None)] = {"ok": False, "error": str(e)}
        out[("pot", None)]["t"] = time.perf_counter() - t0
    if "block_maxima" in config.methods:
        t0 = time.perf_counter()
        try:
            rls = [classical.block_maxima_pipeline(
                x, T, config.bm_block_length, config.threshold_quantile)
                for T in T_obs]
            out[("block_maxima", None)] = {
                "ok": True, "accepted": True,
                "z": np.array([[r.z] for r in rls]),
                "lo": np.array([[r.ci_low] for r in rls]),
                "hi": np.array([[r.ci_high] for r in rls])}
        except StableSumsError as e:
            out[("block_maxima", None)] = {"ok": False, "error": str(e)}
        out[("block_maxima", None)]["t"] = time.perf_counter() - t0
    return out


def run_coverage_study(config: McConfig, n_workers: int = 1) -> McSummary:
    """Coverage/acceptance summary over ``config.n_reps`` replicates.

    Coverage is reported with two denominators: accepted replicates only
    (``coverage``, matching the tabulation convention that lists acceptance
    separately) and all completed replicates (``coverage_all``).
    """
    spec = config.model
    truth = {T: np.array([true_return_level(spec, T * config.obs_per_year, j)
                          for j in range(spec.d)])
             for T in config.T_years}

    if n_workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_replicate,
                                    [config] * config.n_reps,
                                    range(config.n_reps)))
    else:
        results = [_run_replicate(config, r) for r in range(config.n_reps)]

    keys = []
    for m in config.methods:
        if m in ("stable", "stable_uv"):
            keys.extend((m, b) for b in config.block_lengths)
        else:
            keys.append((m, None))

    n_reps = config.n_reps
    nT = len(config.T_years)
    d = spec.d
    cells = []
    replicates = {}
    for method, b in keys:
        z_all = np.full((n_reps, nT, d), np.nan)
        lo_all = np.full((n_reps, nT, d), np.nan)
        hi_all = np.full((n_reps, nT, d), np.nan)
        completed = np.zeros(n_reps, dtype=bool)
        accepted = np.zeros(n_reps, dtype=bool)
        elapsed = 0.0
        for r_idx, res in enumerate(results):
            r = res.get((method, b))
            if r is None:
                continue
            elapsed += r.get("t", 0.0)
            if not r["ok"]:
                continue
            completed[r_idx] = True
            if r["accepted"]:
                accepted[r_idx] = True
                z_all[r_idx] = r["z"]
                lo_all[r_idx] = r["lo"]
                hi_all[r_idx] = r["hi"]
        n_fail = int(n_reps - completed.sum())
        if n_fail > 0.3 * n_reps:
            raise ConvergenceError(
                f"cell ({method}, b={b}): {n_fail}/{n_reps} replicates failed")
        n_done = int(completed.sum())
        n_acc = int(accepted.sum())
        for i, T in enumerate(config.T_years):
            tr = truth[T]
            z = z_all[accepted, i, :]
            cov = ((lo_all[accepted, i, :] <= tr)
                   & (tr <= hi_all[accepted, i, :]))
            if n_acc > 0:
                coverage = cov.mean(axis=0)
                bias = z.mean(axis=0) - tr
                variance = np.var(z, axis=0)
                mse = np.mean((z - tr) ** 2, axis=0)
                coverage_all = cov.sum(axis=0) / max(n_done, 1)
            else:
                coverage = np.full(d, np.nan)
                bias = np.full(d, np.nan)
                variance = np.full(d, np.nan)
                mse = np.full(d, np.nan)
                coverage_all = np.zeros(d)
            cells.append(McCell(
                method=method, T_years=T, b=b, coverage=coverage,
                coverage_all=coverage_all,
                acceptance_rate=n_acc / n_done if n_done else 0.0,
                bias=bias, variance=variance, mse=mse,
                n_accepted=n_acc, n_fail=n_fail, runtime=elapsed))
            replicates[(method, T, b)] = {
                "z": z_all[:, i, :], "lo": lo_all[:, i, :],
                "hi": hi_all[:, i, :], "accepted": accepted,
                "completed": completed}
    return McSummary(config=config, cells=tuple(cells), truth=truth,
                     replicates=replicates)
