"""CSV ingestion, pipeline configuration and the case-study pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import blocksums, tailindex
from .errors import PreconditionError, StableSumsError
from .series import MultiSeries

__all__ = [
    "StationTable",
    "PipelineConfig",
    "load_csv",
    "write_csv",
    "run_case_study_pipeline",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StationTable:
    """Dated station observations; missing values are NaN."""

    dates: np.ndarray
    values: np.ndarray
    station_names: tuple
    season_filter: frozenset | None = None

    def __post_init__(self):
        d = np.asarray(self.dates, dtype="datetime64[D]")
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if d.shape[0] != v.shape[0]:
            raise PreconditionError("dates and values disagree in length")
        if d.size > 1 and not (d[1:] > d[:-1]).all():
            raise PreconditionError("dates must be strictly increasing")
        object.__setattr__(self, "dates", d)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "station_names", tuple(self.station_names))
        if len(self.station_names) != v.shape[1]:
            raise PreconditionError("one station name per column required")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def complete_rows(self):
        """(MultiSeries of fully observed rows, dropped-row count)."""
        keep = ~np.isnan(self.values).any(axis=1)
        dropped = int(np.count_nonzero(~keep))
        return MultiSeries(self.values[keep], names=self.station_names), dropped


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of the full stable-sums analysis pipeline."""

    k_values: tuple = (150, 250, 350, 450, 550)
    min_block: int = 32
    max_acceptances: int = 20
    threshold_quantile: float = 0.95
    T_years: tuple = (50.0,)
    obs_per_year: int = 100
    bootstrap_R: int = 100
    seed: int = 0
    block_candidates: tuple | None = None
    selection_policy: str = "paper_min_pvalue"
    extremogram_max_lag: int = 10

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "T_years", tuple(float(t) for t in self.T_years))
        if self.block_candidates is not None:
            object.__setattr__(self, "block_candidates",
                               tuple(int(b) for b in self.block_candidates))
        for name in ("min_block", "max_acceptances", "obs_per_year",
                     "bootstrap_R", "extremogram_max_lag"):
            if getattr(self, name) <= 0:
                raise PreconditionError(f"{name} must be positive")
        if not 0.5 < self.threshold_quantile < 1.0:
            raise PreconditionError("threshold_quantile must be in (0.5, 1)")


def load_csv(path, date_column: str | None = None,
             season: set | None = None) -> StationTable:
    """Read a station CSV: one ISO-8601 date column plus one numeric column
    per station.  ``season`` keeps only rows whose month is in the set."""
    df = pd.read_csv(path)
    if df.shape[1] < 2:
        raise PreconditionError("CSV needs a date column and >= 1 station column")
    date_col = date_column if date_column is not None else df.columns[0]
    if date_col not in df.columns:
        raise PreconditionError(f"no column named {date_col!r}")
    try:
        dates = pd.to_datetime(df[date_col], format="ISO8601")
    except (ValueError, TypeError) as e:
        raise PreconditionError(f"malformed date: {e}") from e
    if dates.duplicated().any():
        raise PreconditionError("duplicate dates in input")
    value_cols = [c for c in df.columns if c != date_col]
    try:
        values = df[value_cols].to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise PreconditionError(f"non-numeric cell: {e}") from e
    order = np.argsort(dates.to_numpy())
    dates = dates.to_numpy()[order]
    values = values[order]
    season_filter = None
    if season is not None:
        season_filter = frozenset(int(m) for m in season)
        months = pd.DatetimeIndex(dates).month
        keep = np.isin(months, list(season_filter))
        dates, values = dates[keep], values[keep]
    return StationTable(dates=dates.astype("datetime64[D]"), values=values,
                        station_names=tuple(value_cols),
                        season_filter=season_filter)


def write_csv(table: StationTable, path) -> None:
    df = pd.DataFrame(table.values, columns=list(table.station_names))
    df.insert(0, "date", pd.DatetimeIndex(table.dates).strftime("%Y-%m-%d"))
    df.to_csv(path, index=False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def run_case_study_pipeline(table: StationTable, config: PipelineConfig) -> dict:
    """Full analysis: tail index per k, spatial indexes, block-length
    search, gated return-level estimates with bootstrap CIs, QQ tables and
    the extremogram.  Returns a JSON-ready report."""
    series, dropped = table.complete_rows()
    n, d = series.n, series.d
    if n < 500:
        raise PreconditionError(f"pipeline needs n >= 500 complete rows, got {n}")

    ex = tailindex.extremogram(series, config.extremogram_max_lag,
                               config.threshold_quantile)
    report = {
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "d": d,
        "dropped_rows": dropped,
        "stations": list(series.names),
        "config": _jsonable(vars(config) | {}),
        "extremogram": {"lags": ex.lags, "values": ex.values,
                        "baseline": ex.baseline},
        "per_k": [],
    }

    candidates = config.block_candidates
    if candidates is None:
        candidates = tuple(range(config.min_block + 1, max(n // 20, 0) + 1))
    candidates = [b for b in candidates if n // b >= 20 and b >= 2]
    if not candidates:
        raise PreconditionError("no feasible block-length candidates")

    for k in config.k_values:
        entry = {"k": k}
        try:
            fit_tail = tailindex.unbiased_hill(series.norms(), k)
        except StableSumsError as e:
            entry["error"] = str(e)
            report["per_k"].append(entry)
            continue
        alpha = fit_tail.alpha_hat
        entry["alpha_hat"] = alpha
        entry["rho_hat"] = fit_tail.rho_hat
        entry["corrected"] = fit_tail.corrected
        m_hat = (tailindex.spatial_indexes(series, alpha,
                                           config.threshold_quantile)
                 if d > 1 else None)
        entry["m_hat"] = (m_hat.m if m_hat is not None else np.ones(1))

        sel = blocksums.select_block_length(
            series, alpha, candidates, policy=config.selection_policy,
            min_block=config.min_block,
            max_acceptances=config.max_acceptances)
        entry["block_selection"] = {
            "candidates": sel.candidates, "p_values": sel.p_values,
            "accepted": sel.accepted_mask, "chosen": sel.chosen,
            "policy": sel.policy}
        if sel.chosen is None:
            entry["estimates"] = []
            report["per_k"].append(entry)
            continue
        b = sel.chosen

        estimates = []
        qq = None
        for T in config.T_years:
            T_obs = T * config.obs_per_year
            est = blocksums.estimate_return_levels(
                series, b, alpha, m_hat, T_obs, R=config.bootstrap_R,
                seed=config.seed)
            rec = est.to_dict()
            rec["T_years"] = T
            estimates.append(rec)
            if est.accepted and qq is None:
                qq = {"radial": blocksums.qq_stable_diagnostics(
                    series, est.stable_fit, b, alpha, m_hat, mode="radial")}
                try:
                    qq["marginal_mv"] = blocksums.qq_stable_diagnostics(
                        series, est.stable_fit, b, alpha, m_hat,
                        mode="marginal_mv")
                    if d > 1:
                        qq["marginal_uv"] = blocksums.qq_stable_diagnostics(
                            series, est.stable_fit, b, alpha, m_hat,
                            mode="marginal_uv")
                except StableSumsError as e:
                    qq["marginal_error"] = str(e)
        entry["estimates"] = estimates
        entry["qq"] = qq
        report["per_k"].append(entry)
    return _jsonable(report)
