"""Command-line interface.

Subcommands: simulate, fit-stable, stable-sums, pot, block-maxima,
extremogram, qq, mc-experiment.  Every subcommand accepts --seed, --config
(JSON or TOML) and --output.  Results are JSON documents carrying a
schema_version field; simulate writes the dataset as CSV instead.

Exit codes: 0 success, 2 precondition violation (bad input or config),
3 estimator non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import blocksums, classical, data, dist, mc, models, tailindex
from .errors import ConvergenceError, PreconditionError

SCHEMA_VERSION = data.SCHEMA_VERSION


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise PreconditionError(f"config file not found: {p}")
    text = p.read_text()
    try:
        if p.suffix.lower() == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise PreconditionError(f"malformed config {p}: {e}") from e


def _emit(payload: dict, output) -> None:
    payload = {"schema_version": payload.pop("schema_version", SCHEMA_VERSION),
               **payload}
    text = json.dumps(data._jsonable(payload), indent=2)
    if output is None:
        print(text)
    else:
        Path(output).write_text(text + "\n")


def _load_table(args, cfg) -> data.StationTable:
    if args.input is None:
        raise PreconditionError("--input CSV is required for this subcommand")
    season = cfg.get("season")
    return data.load_csv(args.input, date_column=cfg.get("date_column"),
                         season=set(season) if season else None)


def _column(table: data.StationTable, cfg) -> np.ndarray:
    """One univariate series: the named/indexed station, default first."""
    col = cfg.get("column", 0)
    if isinstance(col, str):
        if col not in table.station_names:
            raise PreconditionError(f"no station named {col!r}")
        col = table.station_names.index(col)
    if not 0 <= col < table.d:
        raise PreconditionError(f"column index {col} outside 0..{table.d - 1}")
    vals = table.values[:, col]
    return vals[~np.isnan(vals)]


def _model_spec(cfg: dict) -> models.ModelSpec:
    m = cfg.get("model")
    if not isinstance(m, dict) or "kind" not in m:
        raise PreconditionError('config needs a "model" table with a "kind"')
    kw = dict(m)
    if "lam" in kw and isinstance(kw["lam"], list):
        kw["lam"] = tuple(kw["lam"])
    try:
        return models.ModelSpec(**kw)
    except TypeError as e:
        raise PreconditionError(f"bad model config: {e}") from e


def _cmd_simulate(args, cfg):
    spec = _model_spec(cfg)
    n = int(cfg.get("n", 1000))
    series = models.simulate(spec, n, seed=args.seed)
    start = np.datetime64(cfg.get("start_date", "2000-01-01"))
    dates = start + np.arange(n)
    table = data.StationTable(dates=dates, values=series.values,
                              station_names=series.names)
    if args.output is None:
        data.write_csv(table, sys.stdout)
    else:
        data.write_csv(table, args.output)
    return 0


def _fit_payload(fit: dist.StableFit) -> dict:
    p = fit.params
    return {"a": p.a, "sigma": p.sigma, "beta": p.beta, "mu": p.mu,
            "param_kind": p.param_kind, "loglik": fit.loglik, "n": fit.n,
            "converged": fit.converged, "constrained_a1": fit.constrained_a1}


def _cmd_fit_stable(args, cfg):
    table = _load_table(args, cfg)
    x = _column(table, cfg)
    free = dist.fit_mle(x)
    constrained = dist.fit_mle(x, fix_a1=True)
    lrt = dist.lrt_a_equals_1(free, constrained)
    _emit({"free": _fit_payload(free),
           "constrained": _fit_payload(constrained),
           "lrt": {"statistic": lrt.statistic, "p_value": lrt.p_value,
                   "df": lrt.df, "reject_at_05": lrt.reject_at_05}},
          args.output)
    return 0


def _cmd_stable_sums(args, cfg):
    table = _load_table(args, cfg)
    fields = {f for f in data.PipelineConfig.__dataclass_fields__}
    kw = {k: v for k, v in cfg.items() if k in fields}
    for key in ("k_values", "T_years", "block_candidates"):
        if key in kw and kw[key] is not None:
            kw[key] = tuple(kw[key])
    if args.seed is not None:
        kw["seed"] = args.seed
    report = data.run_case_study_pipeline(table, data.PipelineConfig(**kw))
    _emit(report, args.output)
    return 0


def _classical_runs(x, cfg, runner):
    T_years = cfg.get("T_years", [50.0])
    opy = int(cfg.get("obs_per_year", 100))
    out = []
    for T in T_years:
        rl = runner(x, float(T) * opy)
        out.append({"T_years": float(T), "z": rl.z, "ci_low": rl.ci_low,
                    "ci_high": rl.ci_high, "se": rl.se})
    return out, opy


def _cmd_pot(args, cfg):
    table = _load_table(args, cfg)
    x = _column(table, cfg)
    tq = float(cfg.get("threshold_quantile", 0.95))
    theta = classical.ferro_segers_theta(x, tq)
    levels, opy = _classical_runs(
        x, cfg, lambda s, T: classical.pot_pipeline(s, T, tq))
    _emit({"method": "pot", "threshold_quantile": tq,
           "obs_per_year": opy, "theta_hat": theta.theta,
           "n_exceed": theta.n_exceed, "return_levels": levels}, args.output)
    return 0


def _cmd_block_maxima(args, cfg):
    table = _load_table(args, cfg)
    x = _column(table, cfg)
    tq = float(cfg.get("threshold_quantile", 0.95))
    bl = int(cfg.get("block_length", 20))
    theta = classical.ferro_segers_theta(x, tq)
    levels, opy = _classical_runs(
        x, cfg, lambda s, T: classical.block_maxima_pipeline(s, T, bl, tq))
    _emit({"method": "block_maxima", "block_length": bl,
           "threshold_quantile": tq, "obs_per_year": opy,
           "theta_hat": theta.theta, "return_levels": levels}, args.output)
    return 0


def _cmd_extremogram(args, cfg):
    table = _load_table(args, cfg)
    series, _ = table.complete_rows()
    ex = tailindex.extremogram(series, int(cfg.get("max_lag", 10)),
                               float(cfg.get("threshold_quantile", 0.95)))
    _emit({"lags": ex.lags, "values": ex.values, "baseline": ex.baseline,
           "threshold_quantile": ex.threshold_quantile}, args.output)
    return 0


def _cmd_qq(args, cfg):
    table = _load_table(args, cfg)
    series, _ = table.complete_rows()
    b = int(cfg.get("b", 64))
    if "alpha" in cfg:
        alpha = float(cfg["alpha"])
    else:
        k = int(cfg.get("k", round(series.n ** 0.9)))
        alpha = tailindex.unbiased_hill(series.norms(), k).alpha_hat
    m_hat = (tailindex.spatial_indexes(
        series, alpha, float(cfg.get("threshold_quantile", 0.95)))
        if series.d > 1 else None)
    sums = blocksums.block_sums(series, b, alpha)
    fit = dist.fit_mle(sums.sums, fix_a1=True)
    mode = cfg.get("mode", "radial")
    tables = blocksums.qq_stable_diagnostics(series, fit, b, alpha, m_hat,
                                             mode=mode)
    _emit({"mode": mode, "b": b, "alpha_hat": alpha,
           "fit": _fit_payload(fit), "tables": tables}, args.output)
    return 0


def _cmd_mc_experiment(args, cfg):
    spec = _model_spec(cfg)
    fields = set(mc.McConfig.__dataclass_fields__) - {"model"}
    kw = {k: v for k, v in cfg.items() if k in fields}
    for key in ("T_years", "methods", "block_lengths"):
        if key in kw:
            kw[key] = tuple(kw[key])
    if args.seed is not None:
        kw["seed"] = args.seed
    config = mc.McConfig(model=spec, **kw)
    summary = mc.run_coverage_study(config,
                                    n_workers=int(cfg.get("n_workers", 1)))
    rows = summary.to_rows()
    if args.output is None:
        raise PreconditionError("mc-experiment requires --output")
    out = Path(args.output)
    csv_path = out.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "model": {k: (list(v) if isinstance(v, tuple) else v)
                  for k, v in vars(spec).items()},
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in vars(config).items() if k != "model"},
        "truth": {str(T): list(v) for T, v in summary.truth.items()},
        "results_csv": csv_path.name,
        "n_cells": len(summary.cells),
    }
    _emit(manifest, out.with_suffix(".json"))
    return 0


_COMMANDS = {
    "simulate": (_cmd_simulate, "simulate a heavy-tailed model to CSV"),
    "fit-stable": (_cmd_fit_stable, "fit a stable law by maximum likelihood"),
    "stable-sums": (_cmd_stable_sums, "full stable-sums return-level pipeline"),
    "pot": (_cmd_pot, "declustered peaks-over-threshold return levels"),
    "block-maxima": (_cmd_block_maxima, "GEV block-maxima return levels"),
    "extremogram": (_cmd_extremogram, "empirical extremogram of exceedances"),
    "qq": (_cmd_qq, "QQ tables against the fitted stable law"),
    "mc-experiment": (_cmd_mc_experiment, "Monte Carlo coverage study"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablesums",
        description="Return levels of heavy-tailed time series via stable "
                    "block sums, with classical baselines.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=None,
                       help="master RNG seed")
        p.add_argument("--config", default=None,
                       help="JSON or TOML settings document")
        p.add_argument("--output", default=None,
                       help="output path (default: stdout)")
        if name != "simulate" and name != "mc-experiment":
            p.add_argument("--input", default=None,
                           help="input CSV (ISO dates + station columns)")
        else:
            p.add_argument("--input", default=None, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.command][0](args, cfg)
    except PreconditionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
