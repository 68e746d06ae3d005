"""Command-line interface.

Subcommands mirror the pipeline stages (``ingest``, ``returns``,
``stationarity``, ``bekk``, ``dcc``, ``compare``, ``simulate``) plus
``run`` for the full config-driven pipeline and ``demo`` to materialize a
simulated dataset with a ready-to-run config.  ``run`` reads the config
path from ``--config`` or the ``SPILLOVER_CONFIG`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys
from pathlib import Path

import numpy as np

from . import bekk as bekk_mod
from . import dcc as dcc_mod
from .diagnostics import dcc_compare
from .market_data import (
    DataError,
    load_prices,
    log_returns,
    read_returns_csv,
    write_panel_csv,
    write_returns_csv,
)
from .pipeline import (
    EXIT_CONFIG,
    ConfigError,
    load_config,
    run_pipeline,
    write_demo,
)
from .simulate import MODELS, SimSpec, simulate
from .stationarity import adf_test, kpss_test, pp_test

CONFIG_ENV_VAR = "SPILLOVER_CONFIG"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "{:.12g}".format(value)
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _parse_data_args(items: list[str]) -> list[tuple[str, str]]:
    out = []
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"bad --data argument {item!r}; expected NAME=PATH")
        out.append((name, path))
    return out


def _parse_pair(raw: str) -> tuple[str, str]:
    parts = [p.strip() for p in raw.split(":")]
    if len(parts) != 2 or not all(parts) or parts[0] == parts[1]:
        raise ValueError(f"bad pair {raw!r}; expected 'a:b' with distinct names")
    return parts[0], parts[1]


def _parse_kv(raw: str | None) -> dict[str, float]:
    if not raw:
        return {}
    out = {}
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, value = chunk.partition("=")
        if not sep:
            raise ValueError(f"bad --params entry {chunk!r}; expected key=value")
        out[key.strip()] = float(value)
    return out


def _sim_params(model: str, kv: dict[str, float]):
    if model in ("iid_gaussian", "random_walk", "ar1"):
        return kv or None
    if model == "garch11":
        return kv
    if model == "bekk11":
        return kv
    if model == "dcc_garch":
        params: dict = {
            "alpha": kv.pop("alpha"),
            "beta": kv.pop("beta"),
            "garch": {
                "mu": kv.pop("gmu", 0.0),
                "omega": kv.pop("omega", 0.05),
                "alpha": kv.pop("galpha", 0.05),
                "beta": kv.pop("gbeta", 0.90),
            },
        }
        for key in ("rho", "nu"):
            if key in kv:
                params[key] = kv.pop(key)
        if kv:
            raise ValueError(f"unknown dcc_garch parameter keys: {sorted(kv)}")
        return params
    return kv or None


def _cmd_ingest(args) -> int:
    panel = load_prices(_parse_data_args(args.data))
    write_panel_csv(panel, args.out)
    print(f"wrote {panel.n_dates} aligned rows x {len(panel.markets)} markets to {args.out}")
    return 0


def _cmd_returns(args) -> int:
    panel = load_prices(_parse_data_args(args.data))
    returns = log_returns(panel)
    write_returns_csv(returns, args.out)
    print(f"wrote {returns.n_obs} return rows x {returns.n_markets} markets to {args.out}")
    return 0


def _cmd_stationarity(args) -> int:
    returns = read_returns_csv(args.returns)
    rows = []
    for market in returns.markets:
        series = returns.column(market)
        reports = (
            adf_test(series, lags=args.lags),
            pp_test(series, bandwidth=args.bandwidth),
            kpss_test(series, bandwidth=args.bandwidth),
        )
        for report in reports:
            rows.append([
                market, report.test_name, report.statistic, report.lags_used,
                report.critical_values["1%"], report.critical_values["5%"],
                report.critical_values["10%"], report.decision,
            ])
    _write_csv(
        args.out,
        ["market", "test", "statistic", "lags", "cv1", "cv5", "cv10", "decision"],
        rows,
    )
    print(f"wrote {len(rows)} test rows to {args.out}")
    return 0


def _cmd_bekk(args) -> int:
    returns = read_returns_csv(args.returns)
    pair = _parse_pair(args.pair)
    values = np.column_stack([returns.column(pair[0]), returns.column(pair[1])])
    fit = bekk_mod.fit_bekk(values)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [
        [label, fit.estimate(label), fit.std_errors[label], fit.stars[label]]
        for label in bekk_mod.PARAM_LABELS
    ]
    rows.append(["loglik", fit.loglik, None, None])
    rows.append(["converged", fit.converged, None, None])
    _write_csv(outdir / "bekk_estimates.csv", ["parameter", "estimate", "std_error", "stars"], rows)
    if fit.converged:
        summary = bekk_mod.spillover_summary(fit, pair)
        _write_csv(
            outdir / "bekk_spillover.csv",
            [
                "pair", "g21", "se_g21", "stars_g21", "g12", "se_g12", "stars_g12",
                "direction", "magnitude_pct_i_to_j", "magnitude_pct_j_to_i",
            ],
            [[
                f"{pair[0]}:{pair[1]}", summary.g21, summary.se_g21, summary.stars_g21,
                summary.g12, summary.se_g12, summary.stars_g12, summary.direction,
                summary.magnitude_pct.get("i->j"), summary.magnitude_pct.get("j->i"),
            ]],
        )
    else:
        print("warning: fit did not converge; spillover summary skipped", file=sys.stderr)
    print(f"wrote BEKK artifacts to {outdir}")
    return 0


def _cmd_dcc(args) -> int:
    returns = read_returns_csv(args.returns)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.pairs:
        pairs = [_parse_pair(p) for p in args.pairs.split(",") if p.strip()]
    else:
        pairs = list(itertools.combinations(returns.markets, 2))
    fit = dcc_mod.fit_dcc(returns, distribution=args.distribution)
    _write_csv(
        outdir / "dcc_params.csv",
        ["alpha", "se_alpha", "beta", "se_beta", "nu", "se_nu", "loglik_stage2", "converged"],
        [[
            fit.params.alpha, fit.std_errors["alpha"], fit.params.beta,
            fit.std_errors["beta"], fit.params.nu, fit.std_errors.get("nu"),
            fit.loglik_stage2, fit.converged,
        ]],
    )
    summary_rows = []
    for a, b in pairs:
        series = dcc_mod.extract_pair(fit, fit.markets.index(a), fit.markets.index(b))
        _write_csv(
            outdir / f"corr_{a}_{b}.csv",
            ["date", "pair", "rho"],
            [
                [d.isoformat(), f"{a}:{b}", rho]
                for d, rho in zip(series.dates, series.rho)
            ],
        )
        summary_rows.append([
            f"{a}:{b}", float(np.mean(series.rho)), float(np.min(series.rho)),
            float(np.max(series.rho)), series.rho.size,
        ])
    _write_csv(
        outdir / "dcc_summary.csv",
        ["pair", "mean_rho", "min_rho", "max_rho", "n"],
        summary_rows,
    )
    print(f"wrote DCC artifacts to {outdir}")
    return 0


def _read_corr_csv(path) -> dict[str, np.ndarray]:
    out: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.lower() for c in reader.fieldnames] != ["date", "pair", "rho"]:
            raise DataError(f"{path}: expected header 'date,pair,rho'")
        for row in reader:
            out.setdefault(row["pair"], []).append(float(row["rho"]))
    return {pair: np.array(v) for pair, v in out.items()}


def _cmd_compare(args) -> int:
    pre = _read_corr_csv(args.pre)
    during = _read_corr_csv(args.during)
    common = [p for p in pre if p in during]
    if not common:
        raise DataError("the two correlation files share no pairs")
    rows = []
    for pair in common:
        names = tuple(pair.split(":")) if ":" in pair else (pair, pair)
        cmp = dcc_compare(pre[pair], during[pair], names)
        rows.append([
            pair, cmp.mean_pre, cmp.mean_during, cmp.mean_diff, cmp.t_stat,
            cmp.significant_5pct,
        ])
    _write_csv(
        args.out,
        ["pair", "mean_pre", "mean_during", "mean_diff", "t_stat", "significant"],
        rows,
    )
    print(f"wrote {len(rows)} comparison rows to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    params = _sim_params(args.model, _parse_kv(args.params))
    spec = SimSpec(
        model=args.model,
        params=params,
        T=args.T,
        K=args.K,
        seed=args.seed,
        burn_in=args.burn_in,
    )
    write_returns_csv(simulate(spec), args.out)
    print(f"wrote simulated {args.model} sample ({args.T} x {args.K}) to {args.out}")
    return 0


def _cmd_run(args) -> int:
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not config_path:
        print(
            f"error: no config given; use --config or set {CONFIG_ENV_VAR}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    overrides = {
        "outdir": args.outdir,
        "seed": args.seed,
        "models": args.models,
        "jobs": args.jobs,
        "base_market": args.base_market,
        "pairs": args.pairs,
        "dcc_pairwise": args.dcc_pairwise,
        "tolerance": args.tolerance,
        "max_iterations": args.max_iterations,
        "restarts": args.restarts,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        config = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_pipeline(config)


def _cmd_demo(args) -> int:
    config_path = write_demo(args.outdir)
    print(f"wrote demo data and config to {config_path}")
    if args.run:
        try:
            config = load_config(config_path, {})
        except ConfigError as exc:  # pragma: no cover - demo config is generated
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return run_pipeline(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spillover",
        description="Volatility spillover analysis: BEKK / (t-)DCC GARCH pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="align price CSVs on common dates")
    p.add_argument("--data", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("returns", help="compute log returns from price CSVs")
    p.add_argument("--data", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_returns)

    p = sub.add_parser("stationarity", help="ADF, PP and KPSS tests per market")
    p.add_argument("--returns", required=True, help="returns CSV (date,<markets...>)")
    p.add_argument("--out", required=True)
    p.add_argument("--lags", type=int, default=None, help="ADF lag order (default: AIC)")
    p.add_argument("--bandwidth", type=int, default=None, help="PP/KPSS bandwidth")
    p.set_defaults(func=_cmd_stationarity)

    p = sub.add_parser("bekk", help="fit a bivariate BEKK(1,1) for one pair")
    p.add_argument("--returns", required=True)
    p.add_argument("--pair", required=True, metavar="A:B")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_bekk)

    p = sub.add_parser("dcc", help="fit a (t-)DCC GARCH over all markets")
    p.add_argument("--returns", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--distribution", choices=("gaussian", "t"), default="gaussian")
    p.add_argument("--pairs", default=None, metavar="A:B,C:D",
                   help="pairs to extract (default: all)")
    p.set_defaults(func=_cmd_dcc)

    p = sub.add_parser("compare", help="compare correlation paths across two periods")
    p.add_argument("--pre", required=True, help="correlation CSV for the first period")
    p.add_argument("--during", required=True, help="correlation CSV for the second period")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("simulate", help="generate a seeded sample path")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--params", default=None, metavar="k=v,...")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=500, dest="burn_in")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", default=None)
    p.add_argument("--outdir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--models", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--base-market", default=None, dest="base_market")
    p.add_argument("--pairs", default=None)
    p.add_argument("--dcc-pairwise", default=None, dest="dcc_pairwise")
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None, dest="max_iterations")
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("demo", help="write simulated demo data plus a config")
    p.add_argument("--outdir", required=True)
    p.add_argument("--run", action="store_true", help="run the pipeline afterwards")
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
