"""Command-line front door: synth, backtest, ksweep, trade-eval, report.

Configuration can come from a YAML file (--config) with CLI flags taking
precedence; all defaults match the package defaults (calibration 728,
validation 728, threshold 50, efficiency 0.9). A rejected configuration
performs zero computation and zero file writes. Timing goes to a separate
timings.json so every report file is byte-deterministic for a given input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import backtest as bt
from . import trading as tr
from .errors import ArxselError, ConfigError
from .features import ModelSpec
from .methods import AVG6_WINDOWS, AVG_ALL_WINDOWS, DEFAULT_K_GRID, MethodConfig
from .panel import HourlyPanel, derive_residual_load, load_panel, make_split
from .synth import SynthConfig, write_synthetic


def parse_methods(text: str) -> list[MethodConfig]:
    """Parse a method list like ``win:728,avg:6,avg:all,arhnn:182,arhnn,wls``."""
    out: list[MethodConfig] = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        name, _, arg = token.partition(":")
        if name == "win":
            out.append(MethodConfig(method="win", window=int(arg) if arg else 728))
        elif name == "avg":
            if arg in ("", "6"):
                out.append(MethodConfig(method="avg", windows=AVG6_WINDOWS))
            elif arg == "all":
                out.append(MethodConfig(method="avg", windows=AVG_ALL_WINDOWS))
            else:
                ws = tuple(int(w) for w in arg.split("+"))
                out.append(MethodConfig(method="avg", windows=ws))
        elif name == "arhnn":
            if arg:
                out.append(MethodConfig(method="arhnn_k", k=int(arg)))
            else:
                out.append(MethodConfig(method="arhnn"))
        elif name == "wls":
            out.append(MethodConfig(method="wls"))
        else:
            raise ConfigError(f"cannot parse method token '{token}'")
    if not out:
        raise ConfigError("empty method list")
    return out


def parse_kgrid(text: str) -> tuple[int, ...]:
    """Parse ``lo:hi:step`` (hi exclusive) or a comma list of k values."""
    text = text.strip()
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            parts.append(7)
        lo, hi, step = parts
        grid = tuple(range(lo, hi, step))
    else:
        grid = tuple(int(x) for x in text.split(","))
    if not grid:
        raise ConfigError(f"empty k grid from '{text}'")
    return grid


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    data = yaml.safe_load(p.read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {p} must hold a mapping")
    return data


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit CLI flags."""
    cfg = dict(defaults)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _load_ready_panel(path, profile: str) -> HourlyPanel:
    panel = load_panel(path, profile)
    if profile == "eu":
        panel = derive_residual_load(panel)
    return panel


def _progress(done: int, total: int) -> None:
    if done == total or done % 25 == 0:
        print(f"  {done}/{total} test days", file=sys.stderr)


def _method_params(cfg: MethodConfig) -> dict:
    d = dataclasses.asdict(cfg)
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(v)
    return d


def cmd_synth(args) -> int:
    cfg = _merged(
        args,
        {
            "days": 1200,
            "seed": 1,
            "profile": "eu",
            "regimes": 2,
            "block": 90,
            "noise": 2.5,
            "start": "2015-01-01",
            "out": None,
        },
    )
    if not cfg["out"]:
        raise ConfigError("synth needs --out <panel.csv>")
    sc = SynthConfig(
        n_days=int(cfg["days"]),
        seed=int(cfg["seed"]),
        profile=str(cfg["profile"]).lower(),
        n_regimes=int(cfg["regimes"]),
        block_len=int(cfg["block"]),
        noise_sigma=float(cfg["noise"]),
        start_date=str(cfg["start"]),
    )
    sc.validate()
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    path, sidecar = write_synthetic(sc, out)
    print(f"wrote {path} and {sidecar}")
    return 0


def _build_split(panel, cfg):
    return make_split(
        panel,
        calibration_len=int(cfg["calib"]),
        validation_len=int(cfg["valid"]),
        test_start=cfg["test_start"],
        test_end=cfg["test_end"],
    )


_BACKTEST_DEFAULTS = {
    "panel": None,
    "profile": "eu",
    "methods": "win:728,avg:6,arhnn:182,arhnn:364,arhnn,wls",
    "calib": 728,
    "valid": 728,
    "test_start": None,
    "test_end": None,
    "kgrid": None,
    "method_valid": None,
    "workers": 1,
    "out": None,
}


def cmd_backtest(args) -> int:
    cfg = _merged(args, _BACKTEST_DEFAULTS)
    if not cfg["panel"]:
        raise ConfigError("backtest needs --panel <panel.csv>")
    if not cfg["out"]:
        raise ConfigError("backtest needs --out <directory>")
    profile = str(cfg["profile"]).lower()
    if not isinstance(cfg["methods"], str):
        raise ConfigError("methods must be a string like 'win:728,avg:6,arhnn,wls'")
    methods = parse_methods(cfg["methods"])
    overrides = {}
    if cfg["kgrid"]:
        overrides["k_grid"] = parse_kgrid(str(cfg["kgrid"]))
    if cfg["method_valid"]:
        overrides["validation_len"] = int(cfg["method_valid"])
    if overrides:
        methods = [
            dataclasses.replace(m, **overrides) if m.method == "arhnn" else m for m in methods
        ]

    panel = _load_ready_panel(cfg["panel"], profile)
    spec = ModelSpec.for_profile(profile)
    split = _build_split(panel, cfg)
    for m in methods:
        m.validate(spec, split.calibration_len, split.validation_len)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    runs = bt.run_backtest(
        panel, spec, methods, split, workers=int(cfg["workers"]), progress=_progress
    )

    manifest = {}
    for run in runs:
        fname = f"forecast_{bt.slug(run.label)}.csv"
        bt.write_forecast_csv(run, out / fname)
        manifest[run.label] = {
            "file": fname,
            "method": run.config.method,
            "params": _method_params(run.config),
            "profile": profile,
            "market_id": panel.market_id,
            "test_start": str(run.dates[0]),
            "test_end": str(run.dates[-1]),
            "calibration_len": split.calibration_len,
            "validation_len": split.validation_len,
        }
    (out / "runs.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (out / "timings.json").write_text(
        json.dumps({r.label: r.seconds for r in runs}, indent=2, sort_keys=True) + "\n"
    )

    reports = {run.label: bt.rmse_by_year(run, panel) for run in runs}
    bt.write_rmse_csv(reports, out / "rmse_by_year.csv")
    bt.write_rmse_json(reports, out / "rmse_by_year.json")
    print(bt.format_rmse_table(reports))
    return 0


def cmd_ksweep(args) -> int:
    cfg = _merged(
        args,
        {
            "panel": None,
            "profile": "eu",
            "calib": 728,
            "valid": 728,
            "test_start": None,
            "test_end": None,
            "kgrid": "28:729:7",
            "workers": 1,
            "out": None,
        },
    )
    if not cfg["panel"]:
        raise ConfigError("ksweep needs --panel <panel.csv>")
    if not cfg["out"]:
        raise ConfigError("ksweep needs --out <directory>")
    profile = str(cfg["profile"]).lower()
    grid = parse_kgrid(str(cfg["kgrid"]))
    panel = _load_ready_panel(cfg["panel"], profile)
    spec = ModelSpec.for_profile(profile)
    split = _build_split(panel, cfg)
    for k in grid:
        MethodConfig(method="arhnn_k", k=k).validate(spec, split.calibration_len, split.validation_len)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    pairs = bt.k_sweep(panel, spec, split, grid, workers=int(cfg["workers"]), progress=_progress)
    bt.write_ksweep_csv(pairs, out / "ksweep.csv")
    best = min(pairs, key=lambda kv: kv[1])
    print(f"swept {len(pairs)} k values; min RMSE {best[1]:.4f} at k={best[0]}")
    return 0


def cmd_trade_eval(args) -> int:
    cfg = _merged(
        args,
        {
            "panel": None,
            "profile": "eu",
            "runs": None,
            "threshold": 50.0,
            "efficiency": 0.9,
            "out": None,
        },
    )
    for key in ("panel", "runs", "out"):
        if not cfg[key]:
            raise ConfigError(f"trade-eval needs --{key}")
    profile = str(cfg["profile"]).lower()
    params = tr.StrategyParams(efficiency=float(cfg["efficiency"]), threshold=float(cfg["threshold"]))
    panel = load_panel(cfg["panel"], profile)

    runs_dir = Path(cfg["runs"])
    manifest_path = runs_dir / "runs.json"
    if not manifest_path.exists():
        raise ConfigError(f"no runs.json manifest in {runs_dir}")
    manifest = json.loads(manifest_path.read_text())

    loaded = {}
    for label, meta in manifest.items():
        dates, matrix = bt.read_forecast_csv(runs_dir / meta["file"])
        start, end = panel.days[0], panel.days[-1]
        if dates[0] < start or dates[-1] > end:
            raise ConfigError(
                f"run '{label}' covers {dates[0]}..{dates[-1]} but panel covers {start}..{end}"
            )
        idx = np.array([panel.day_index(d) for d in dates])
        if not np.array_equal(np.diff(idx), np.ones(len(idx) - 1, dtype=idx.dtype)):
            raise ConfigError(f"run '{label}' has gaps in its date range")
        loaded[label] = (dates, idx, matrix)

    first = next(iter(loaded.values()))
    for label, (dates, _, _) in loaded.items():
        if len(dates) != len(first[0]) or dates[0] != first[0][0] or dates[-1] != first[0][-1]:
            raise ConfigError(
                f"run '{label}' covers {dates[0]}..{dates[-1]} but other runs cover "
                f"{first[0][0]}..{first[0][-1]}"
            )

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    dates, idx, _ = first
    actual = panel.prices[idx]
    years = tr.years_of(dates)

    ledgers: dict[str, tr.TradeLedger] = {}
    for label, (dates_l, idx_l, matrix) in loaded.items():
        ledgers[label] = tr.build_ledger(matrix, actual, dates_l, params, label)
    ledgers["Crystal ball"] = tr.crystal_ledger(actual, dates, params)

    reports = {label: tr.econ_report(led, years) for label, led in ledgers.items()}
    for label, led in ledgers.items():
        tr.write_ledger_csv(led, out / f"ledger_{bt.slug(label)}.csv")
    tr.write_econ_csv(reports, out / "econ_report.csv")
    tr.write_econ_json(reports, out / "econ_report.json")
    print(tr.format_econ_table(reports))
    return 0


def cmd_report(args) -> int:
    cfg = _merged(args, {"runs": None, "reference": "Win(728)", "out": None})
    if not cfg["runs"]:
        raise ConfigError("report needs --runs <directory with rmse_by_year.csv and econ_report.csv>")
    if not cfg["out"]:
        raise ConfigError("report needs --out <directory>")
    runs_dir = Path(cfg["runs"])
    rmse_path = runs_dir / "rmse_by_year.csv"
    econ_path = runs_dir / "econ_report.csv"
    for p in (rmse_path, econ_path):
        if not p.exists():
            raise ConfigError(f"missing report input {p}")
    rmse = bt.read_rmse_csv(rmse_path)
    econ = tr.read_econ_csv(econ_path)
    rows = tr.relative_changes(rmse, econ, str(cfg["reference"]))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    tr.write_scatter_csv(rows, out / "scatter.csv")
    print(f"wrote {out / 'scatter.csv'} ({len(rows)} rows, reference {cfg['reference']})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="arxsel",
        description="Calibration-sample selection forecasting and trading evaluation "
        "for day-ahead hourly electricity prices.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="YAML config file; CLI flags override its keys")
        p.add_argument("--out", help="output path/directory")

    p = sub.add_parser("synth", help="generate a seeded synthetic panel CSV")
    add_common(p)
    p.add_argument("--days", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", choices=["eu", "isone"])
    p.add_argument("--regimes", type=int)
    p.add_argument("--block", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--start")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("backtest", help="rolling backtest; writes forecasts and RMSE tables")
    add_common(p)
    p.add_argument("--panel")
    p.add_argument("--profile", choices=["eu", "isone"])
    p.add_argument("--methods", help="e.g. win:728,avg:6,avg:all,arhnn:182,arhnn,wls")
    p.add_argument("--calib", type=int)
    p.add_argument("--valid", type=int)
    p.add_argument("--test-start", dest="test_start")
    p.add_argument("--test-end", dest="test_end")
    p.add_argument("--kgrid", help="k grid for the full method: lo:hi[:step] or comma list")
    p.add_argument("--method-valid", dest="method_valid", type=int,
                   help="validation days used by the full method (default: split validation)")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("ksweep", help="RMSE of the fixed-k method for each k in a grid")
    add_common(p)
    p.add_argument("--panel")
    p.add_argument("--profile", choices=["eu", "isone"])
    p.add_argument("--calib", type=int)
    p.add_argument("--valid", type=int)
    p.add_argument("--test-start", dest="test_start")
    p.add_argument("--test-end", dest="test_end")
    p.add_argument("--kgrid")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_ksweep)

    p = sub.add_parser("trade-eval", help="battery-arbitrage evaluation of saved forecast runs")
    add_common(p)
    p.add_argument("--panel")
    p.add_argument("--profile", choices=["eu", "isone"])
    p.add_argument("--runs", help="directory with runs.json and forecast CSVs")
    p.add_argument("--threshold", type=float)
    p.add_argument("--efficiency", type=float)
    p.set_defaults(func=cmd_trade_eval)

    p = sub.add_parser("report", help="statistical-vs-economic relative-change scatter data")
    add_common(p)
    p.add_argument("--runs", help="directory with rmse_by_year.csv and econ_report.csv")
    p.add_argument("--reference", help="reference method label (default Win(728))")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArxselError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
