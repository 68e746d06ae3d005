"""Config-driven batch pipeline and its report artifacts.

Stages run in order: ingest -> stationarity -> bekk -> dcc -> diagnostics.
Each stage writes CSV artifacts into the output directory and registers
them in a JSON manifest; a stage failure aborts the run with that stage's
exit code and leaves the manifest marked incomplete.  Runs are
deterministic for a fixed config and seed.

The config file is INI-style; see ``load_config`` for the schema.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from . import bekk as bekk_mod
from . import dcc as dcc_mod
from .diagnostics import dcc_compare, hosking_test, li_mcleod_test
from .market_data import (
    DataError,
    PeriodSpec,
    ReturnMatrix,
    load_prices,
    log_returns,
    split_periods,
    write_panel_csv,
    write_returns_csv,
)
from .optimizer import MleSettings
from .simulate import SimSpec, simulate
from .stationarity import adf_test, kpss_test, pp_test

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "config_hash",
    "run_pipeline",
    "write_demo",
    "EXIT_OK",
    "EXIT_INGEST",
    "EXIT_STATIONARITY",
    "EXIT_BEKK",
    "EXIT_DCC",
    "EXIT_DIAGNOSTICS",
    "EXIT_CONFIG",
]

EXIT_OK = 0
EXIT_INGEST = 10
EXIT_STATIONARITY = 20
EXIT_BEKK = 30
EXIT_DCC = 40
EXIT_DIAGNOSTICS = 50
EXIT_CONFIG = 64

_STAGE_CODES = {
    "ingest": EXIT_INGEST,
    "stationarity": EXIT_STATIONARITY,
    "bekk": EXIT_BEKK,
    "dcc": EXIT_DCC,
    "diagnostics": EXIT_DIAGNOSTICS,
}

_MODELS = ("bekk", "dcc", "tdcc")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Resolved pipeline configuration."""

    data: list[tuple[str, Path]]
    periods: list[PeriodSpec]
    pairs: list[tuple[str, str]]
    models: tuple[str, ...]
    outdir: Path
    seed: int
    optimizer: MleSettings
    jobs: int = 1
    dcc_pairwise: bool = False

    @property
    def markets(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.data)


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read an INI config file, applying CLI overrides by key name.

    Schema::

        [run]
        outdir = out
        seed = 7
        models = bekk,dcc,tdcc
        jobs = 1
        base_market = india          ; or: pairs = usa:india,germany:india
        dcc_pairwise = false
        [optimizer]
        tolerance = 1e-7
        max_iterations = 2000
        restarts = 5
        [data]
        usa = data/usa.csv           ; market = csv path (relative to config)
        [periods]
        calm = 2013-01-01:2019-12-31 ; name = start:end (inclusive)

    Overrides accept the scalar keys of [run] and [optimizer] plus
    ``pairs``.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep market/period names case-sensitive
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None

    run = dict(parser.items("run")) if parser.has_section("run") else {}
    opt = dict(parser.items("optimizer")) if parser.has_section("optimizer") else {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("tolerance", "max_iterations", "restarts"):
            opt[key] = str(value)
        else:
            run[key] = str(value)

    base_dir = path.parent

    if not parser.has_section("data") or not parser.items("data"):
        raise ConfigError("config needs a non-empty [data] section")
    data = [
        (market, (base_dir / raw).resolve() if not Path(raw).is_absolute() else Path(raw))
        for market, raw in parser.items("data")
    ]
    markets = [m for m, _ in data]

    if not parser.has_section("periods") or not parser.items("periods"):
        raise ConfigError("config needs a non-empty [periods] section")
    periods = []
    for name, raw in parser.items("periods"):
        try:
            start_s, end_s = raw.split(":")
            spec = PeriodSpec(
                name=name,
                start=date.fromisoformat(start_s.strip()),
                end=date.fromisoformat(end_s.strip()),
            )
        except (ValueError, DataError) as exc:
            raise ConfigError(f"period {name!r}: {exc}") from None
        periods.append(spec)

    try:
        models = tuple(
            m.strip() for m in run.get("models", "bekk,dcc").split(",") if m.strip()
        )
        if not models or any(m not in _MODELS for m in models):
            raise ConfigError(f"models must be a subset of {_MODELS}, got {models}")
        seed = int(run.get("seed", "0"))
        jobs = int(run.get("jobs", "1"))
        if jobs < 1:
            raise ConfigError("jobs must be >= 1")
        dcc_pairwise = _parse_bool(run.get("dcc_pairwise", "false"), "dcc_pairwise")
        settings = MleSettings(
            tolerance=float(opt.get("tolerance", "1e-7")),
            max_iterations=int(opt.get("max_iterations", "2000")),
            restarts=int(opt.get("restarts", "5")),
            seed=seed,
        )
        if settings.tolerance <= 0 or settings.max_iterations < 1 or settings.restarts < 0:
            raise ConfigError("invalid optimizer settings")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    pairs: list[tuple[str, str]] = []
    if run.get("pairs"):
        for chunk in run["pairs"].split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = [p.strip() for p in chunk.split(":")]
            if len(parts) != 2 or parts[0] == parts[1]:
                raise ConfigError(f"bad pair spec {chunk!r}; expected 'a:b' with a != b")
            pairs.append((parts[0], parts[1]))
    elif run.get("base_market"):
        base = run["base_market"].strip()
        if base not in markets:
            raise ConfigError(f"base_market {base!r} is not a configured market")
        pairs = [(m, base) for m in markets if m != base]
    else:
        raise ConfigError("config needs either 'pairs' or 'base_market' under [run]")
    for a, b in pairs:
        if a not in markets or b not in markets:
            raise ConfigError(f"pair ({a}, {b}) references unknown markets")

    outdir_raw = run.get("outdir", "out")
    outdir = Path(outdir_raw)
    if not outdir.is_absolute():
        # CLI overrides are relative to the caller, config values to the file
        if overrides and "outdir" in (overrides or {}) and overrides["outdir"]:
            outdir = Path.cwd() / outdir
        else:
            outdir = base_dir / outdir

    return RunConfig(
        data=data,
        periods=periods,
        pairs=pairs,
        models=models,
        outdir=outdir,
        seed=seed,
        optimizer=settings,
        jobs=jobs,
        dcc_pairwise=dcc_pairwise,
    )


def config_hash(config: RunConfig) -> str:
    """SHA-256 over the canonical JSON form of the resolved config."""
    payload = {
        "data": [[m, str(p)] for m, p in config.data],
        "periods": [[p.name, p.start.isoformat(), p.end.isoformat()] for p in config.periods],
        "pairs": [list(p) for p in config.pairs],
        "models": list(config.models),
        "seed": config.seed,
        "jobs": config.jobs,
        "dcc_pairwise": config.dcc_pairwise,
        "optimizer": {
            "tolerance": config.optimizer.tolerance,
            "max_iterations": config.optimizer.max_iterations,
            "restarts": config.optimizer.restarts,
        },
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "{:.12g}".format(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


class _StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _pair_key(pair: tuple[str, str]) -> str:
    return f"{pair[0]}:{pair[1]}"


def run_pipeline(config: RunConfig) -> int:
    """Execute the full pipeline; returns the process exit code."""
    outdir = config.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "config_hash": config_hash(config),
        "seed": config.seed,
        "artifacts": [],
        "started": datetime.now(timezone.utc).isoformat(),
        "finished": None,
        "status": "incomplete",
    }

    def add_artifact(name: str, filename: str, stage: str) -> Path:
        path = outdir / filename
        manifest["artifacts"].append({"name": name, "path": str(path), "stage": stage})
        return path

    def finish(status: str, code: int, failed_stage: str | None = None,
               error: str | None = None) -> int:
        manifest["finished"] = datetime.now(timezone.utc).isoformat()
        manifest["status"] = status
        if failed_stage is not None:
            manifest["failed_stage"] = failed_stage
        if error is not None:
            manifest["error"] = error
        with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return code

    try:
        returns, by_period = _stage_ingest(config, add_artifact)
        _stage_stationarity(config, returns, add_artifact)
        if "bekk" in config.models:
            _stage_bekk(config, by_period, add_artifact)
        dcc_results = {}
        if any(m in config.models for m in ("dcc", "tdcc")):
            dcc_results = _stage_dcc(config, by_period, add_artifact)
        if dcc_results:
            _stage_diagnostics(config, dcc_results, add_artifact)
    except _StageFailure as failure:
        print(f"error: {failure}", file=sys.stderr)
        return finish(
            "incomplete",
            _STAGE_CODES[failure.stage],
            failed_stage=failure.stage,
            error=str(failure.cause),
        )
    return finish("complete", EXIT_OK)


def _stage_ingest(config: RunConfig, add_artifact):
    try:
        panel = load_prices([(m, p) for m, p in config.data])
        returns = log_returns(panel)
        by_period = split_periods(returns, config.periods)
        write_panel_csv(panel, add_artifact("aligned prices", "aligned_prices.csv", "ingest"))
        write_returns_csv(returns, add_artifact("log returns", "returns.csv", "ingest"))
    except Exception as exc:
        raise _StageFailure("ingest", exc) from exc
    return returns, by_period


def _stage_stationarity(config: RunConfig, returns: ReturnMatrix, add_artifact) -> None:
    try:
        rows = []
        for market in returns.markets:
            series = returns.column(market)
            for report in (adf_test(series), pp_test(series), kpss_test(series)):
                rows.append([
                    market,
                    report.test_name,
                    report.statistic,
                    report.lags_used,
                    report.critical_values["1%"],
                    report.critical_values["5%"],
                    report.critical_values["10%"],
                    report.decision,
                ])
        _write_csv(
            add_artifact("stationarity tests", "stationarity.csv", "stationarity"),
            ["market", "test", "statistic", "lags", "cv1", "cv5", "cv10", "decision"],
            rows,
        )
    except Exception as exc:
        raise _StageFailure("stationarity", exc) from exc


def _bekk_task(config: RunConfig, by_period, pair, period_name):
    sub = by_period[period_name]
    cols = np.column_stack([sub.column(pair[0]), sub.column(pair[1])])
    fit = bekk_mod.fit_bekk(cols, config.optimizer)
    if not fit.converged:
        raise RuntimeError(
            f"BEKK fit did not converge for pair {_pair_key(pair)} in period {period_name!r}"
        )
    return fit


def _stage_bekk(config: RunConfig, by_period, add_artifact) -> None:
    try:
        tasks = [(pair, spec.name) for pair in config.pairs for spec in config.periods]
        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                futures = {
                    key: pool.submit(_bekk_task, config, by_period, *key) for key in tasks
                }
                fits = {key: fut.result() for key, fut in futures.items()}
        else:
            fits = {key: _bekk_task(config, by_period, *key) for key in tasks}

        for spec in config.periods:
            header = ["parameter"]
            for pair in config.pairs:
                key = _pair_key(pair)
                header += [f"{key} estimate", f"{key} std_error", f"{key} stars"]
            rows = []
            for label in bekk_mod.PARAM_LABELS:
                row: list = [label]
                for pair in config.pairs:
                    fit = fits[(pair, spec.name)]
                    row += [fit.estimate(label), fit.std_errors[label], fit.stars[label]]
                rows.append(row)
            _write_csv(
                add_artifact(
                    f"BEKK estimates ({spec.name})", f"bekk_{spec.name}.csv", "bekk"
                ),
                header,
                rows,
            )

        rows = []
        for pair in config.pairs:
            for spec in config.periods:
                summary = bekk_mod.spillover_summary(fits[(pair, spec.name)], pair)
                rows.append([
                    spec.name,
                    _pair_key(pair),
                    summary.g21,
                    summary.se_g21,
                    summary.stars_g21,
                    summary.g12,
                    summary.se_g12,
                    summary.stars_g12,
                    summary.direction,
                    summary.magnitude_pct.get("i->j"),
                    summary.magnitude_pct.get("j->i"),
                ])
        _write_csv(
            add_artifact("BEKK spillover summary", "bekk_spillover.csv", "bekk"),
            [
                "period", "pair", "g21", "se_g21", "stars_g21",
                "g12", "se_g12", "stars_g12", "direction",
                "magnitude_pct_i_to_j", "magnitude_pct_j_to_i",
            ],
            rows,
        )
    except _StageFailure:
        raise
    except Exception as exc:
        raise _StageFailure("bekk", exc) from exc


def _dcc_task(config: RunConfig, sub: ReturnMatrix, distribution: str):
    fit = dcc_mod.fit_dcc(sub, distribution=distribution, settings=config.optimizer)
    if not fit.converged:
        raise RuntimeError("DCC stage-2 optimization did not converge")
    return fit


def _stage_dcc(config: RunConfig, by_period, add_artifact):
    try:
        models = [m for m in config.models if m in ("dcc", "tdcc")]
        results: dict[tuple[str, str], dict] = {}
        tasks = []
        for model in models:
            dist = "gaussian" if model == "dcc" else "t"
            for spec in config.periods:
                if config.dcc_pairwise:
                    for pair in config.pairs:
                        tasks.append((model, spec.name, dist, pair))
                else:
                    tasks.append((model, spec.name, dist, None))

        def run_task(task):
            model, period_name, dist, pair = task
            sub = by_period[period_name]
            if pair is not None:
                sub = ReturnMatrix(
                    dates=sub.dates,
                    markets=pair,
                    values=np.column_stack([sub.column(pair[0]), sub.column(pair[1])]),
                )
            return task, _dcc_task(config, sub, dist)

        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                fitted = list(pool.map(run_task, tasks))
        else:
            fitted = [run_task(t) for t in tasks]

        for (model, period_name, _, pair), fit in fitted:
            entry = results.setdefault((model, period_name), {"fits": [], "pairs": {}})
            entry["fits"].append((pair, fit))
            if pair is None:
                for p in config.pairs:
                    i = fit.markets.index(p[0])
                    j = fit.markets.index(p[1])
                    entry["pairs"][p] = dcc_mod.extract_pair(fit, i, j)
            else:
                entry["pairs"][pair] = dcc_mod.extract_pair(fit, 0, 1)

        garch_rows = []
        param_rows = []
        for model in models:
            for spec in config.periods:
                for pair, fit in results[(model, spec.name)]["fits"]:
                    scope = _pair_key(pair) if pair else "joint"
                    for market, g in zip(fit.markets, fit.stage1):
                        garch_rows.append([
                            model, spec.name, scope, market,
                            g.params.mu, g.params.omega, g.params.alpha, g.params.beta,
                            g.std_errors["omega"], g.std_errors["alpha"],
                            g.std_errors["beta"], g.loglik, g.converged,
                        ])
                    param_rows.append([
                        model, spec.name, scope,
                        fit.params.alpha, fit.std_errors["alpha"],
                        fit.params.beta, fit.std_errors["beta"],
                        fit.params.nu, fit.std_errors.get("nu"),
                        fit.loglik_stage2, fit.converged,
                    ])
        _write_csv(
            add_artifact("stage-1 GARCH fits", "garch_stage1.csv", "dcc"),
            [
                "model", "period", "scope", "market", "mu", "omega", "alpha", "beta",
                "se_omega", "se_alpha", "se_beta", "loglik", "converged",
            ],
            garch_rows,
        )
        _write_csv(
            add_artifact("DCC parameters", "dcc_params.csv", "dcc"),
            [
                "model", "period", "scope", "alpha", "se_alpha", "beta", "se_beta",
                "nu", "se_nu", "loglik_stage2", "converged",
            ],
            param_rows,
        )

        for model in models:
            summary_rows = []
            for pair in config.pairs:
                corr_rows = []
                for spec in config.periods:
                    series = results[(model, spec.name)]["pairs"][pair]
                    for d, rho in zip(series.dates, series.rho):
                        corr_rows.append([d.isoformat(), _pair_key(pair), rho])
                    summary_rows.append([
                        _pair_key(pair), spec.name,
                        float(np.mean(series.rho)), float(np.min(series.rho)),
                        float(np.max(series.rho)), series.rho.size,
                    ])
                _write_csv(
                    add_artifact(
                        f"correlation path {model} {_pair_key(pair)}",
                        f"corr_{model}_{pair[0]}_{pair[1]}.csv",
                        "dcc",
                    ),
                    ["date", "pair", "rho"],
                    corr_rows,
                )
            _write_csv(
                add_artifact(f"DCC summary ({model})", f"dcc_summary_{model}.csv", "dcc"),
                ["pair", "period", "mean_rho", "min_rho", "max_rho", "n"],
                summary_rows,
            )
        return results
    except _StageFailure:
        raise
    except Exception as exc:
        raise _StageFailure("dcc", exc) from exc


def _stage_diagnostics(config: RunConfig, dcc_results, add_artifact) -> None:
    try:
        models = [m for m in config.models if m in ("dcc", "tdcc")]
        diag_rows = []
        for model in models:
            for spec in config.periods:
                for pair, fit in dcc_results[(model, spec.name)]["fits"]:
                    scope = _pair_key(pair) if pair else "joint"
                    resid = fit.std_residuals
                    for report in (hosking_test(resid), li_mcleod_test(resid)):
                        diag_rows.append([
                            model, spec.name, scope, report.test_name,
                            report.statistic, report.lags_used,
                            report.critical_values["5%"], report.p_value,
                            report.decision,
                        ])
        _write_csv(
            add_artifact("residual portmanteau tests", "diagnostics.csv", "diagnostics"),
            [
                "model", "period", "scope", "test", "statistic", "lags",
                "cv5", "p_value", "decision",
            ],
            diag_rows,
        )

        if len(config.periods) >= 2:
            pre_name = config.periods[0].name
            during_name = config.periods[1].name
            for model in models:
                rows = []
                for pair in config.pairs:
                    pre = dcc_results[(model, pre_name)]["pairs"][pair]
                    during = dcc_results[(model, during_name)]["pairs"][pair]
                    cmp = dcc_compare(pre.rho, during.rho, pair)
                    rows.append([
                        _pair_key(pair), cmp.mean_pre, cmp.mean_during,
                        cmp.mean_diff, cmp.t_stat, cmp.significant_5pct,
                    ])
                _write_csv(
                    add_artifact(
                        f"correlation comparison ({model})", f"compare_{model}.csv",
                        "diagnostics",
                    ),
                    ["pair", "mean_pre", "mean_during", "mean_diff", "t_stat", "significant"],
                    rows,
                )
    except _StageFailure:
        raise
    except Exception as exc:
        raise _StageFailure("diagnostics", exc) from exc


_DEMO_SEED = 42


def write_demo(target: str | Path, t_returns: int = 840) -> Path:
    """Write simulated demo price data plus a ready-to-run config.

    Returns the path of the generated config file.  The demo is seeded, so
    repeated generation produces identical files.
    """
    target = Path(target)
    data_dir = target / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    markets = ("usa", "germany", "india")
    qbar = np.array([
        [1.00, 0.60, 0.35],
        [0.60, 1.00, 0.30],
        [0.35, 0.30, 1.00],
    ])
    spec = SimSpec(
        model="dcc_garch",
        params={
            "garch": {"mu": 2e-4, "omega": 2.88e-6, "alpha": 0.06, "beta": 0.92},
            "alpha": 0.04,
            "beta": 0.93,
            "qbar": qbar,
        },
        T=t_returns,
        K=3,
        seed=_DEMO_SEED,
    )
    sim = simulate(spec)
    start_prices = (3000.0, 12000.0, 15000.0)
    base = date(2018, 1, 1)
    dates = [base + timedelta(days=i) for i in range(t_returns + 1)]
    # each market skips a couple of distinct dates so ingest exercises the
    # intersection alignment
    holidays = {0: {100, 101}, 1: {300, 301}, 2: set()}
    for k, market in enumerate(markets):
        prices = start_prices[k] * np.exp(np.concatenate([[0.0], np.cumsum(sim.values[:, k])]))
        with open(data_dir / f"{market}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["date", "close"])
            for i, (d, p) in enumerate(zip(dates, prices)):
                if i in holidays[k]:
                    continue
                writer.writerow([d.isoformat(), "{:.10f}".format(p)])

    split = dates[int(t_returns * 0.55)]
    config_path = target / "demo.ini"
    config_text = f"""# demo configuration over simulated market data
[run]
outdir = out
seed = 7
models = bekk,dcc,tdcc
jobs = 1
base_market = india

[optimizer]
tolerance = 1e-7
max_iterations = 2000
restarts = 5

[data]
usa = data/usa.csv
germany = data/germany.csv
india = data/india.csv

[periods]
calm = {dates[0].isoformat()}:{split.isoformat()}
crisis = {(split + timedelta(days=1)).isoformat()}:{dates[-1].isoformat()}
"""
    config_path.write_text(config_text, encoding="utf-8")
    return config_path
