"""Rolling-window evaluation: per-method forecast matrices, RMSE tables, k sweeps.

The engine walks the test range one day at a time, refits normalization stats
on the calibration+validation union for that day, and evaluates every
configured method for all 24 hours. Results are reduced in day order, so the
forecast matrices do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ForecastError
from .features import Designer, ModelSpec
from .methods import MethodConfig, forecast_cell
from .panel import HourlyPanel, SplitGeometry, fit_norm_stats

_WORKER_CTX: dict = {}


@dataclass
class ForecastRun:
    """One method's forecasts over the test range, on the original price scale."""

    config: MethodConfig
    label: str
    test_days: np.ndarray     # 0-based panel day indices
    dates: np.ndarray         # datetime64[D], aligned with test_days
    matrix: np.ndarray        # (n_test_days, 24)
    seconds: float


def _forecast_day(designer, stats, split, methods, d):
    rows = {}
    secs = {}
    for cfg in methods:
        t0 = time.perf_counter()
        row = np.empty(24)
        for h in range(24):
            try:
                row[h] = forecast_cell(designer, stats, split, cfg, d, h)
            except Exception as exc:
                raise ForecastError(cfg.label, designer.panel.days[d], h, exc) from exc
        rows[cfg.label] = row
        secs[cfg.label] = time.perf_counter() - t0
    return rows, secs


def _worker_init(panel, spec, methods, split):
    _WORKER_CTX["designer"] = Designer(panel, spec)
    _WORKER_CTX["spec"] = spec
    _WORKER_CTX["methods"] = methods
    _WORKER_CTX["split"] = split


def _worker_day(d):
    designer = _WORKER_CTX["designer"]
    spec = _WORKER_CTX["spec"]
    split = _WORKER_CTX["split"]
    stats = fit_norm_stats(designer.panel, split.stats_range(d), spec.norm_series)
    return _forecast_day(designer, stats, split, _WORKER_CTX["methods"], d)


def run_backtest(
    panel: HourlyPanel,
    spec: ModelSpec,
    methods: list[MethodConfig],
    split: SplitGeometry,
    workers: int = 1,
    progress=None,
) -> list[ForecastRun]:
    """Forecast every (test day, hour) for every configured method.

    Any single-cell failure aborts the run with (method, day, hour) context;
    silently imputing would corrupt cross-method comparisons. ``progress`` is
    an optional callable ``(done, total) -> None``.
    """
    labels = [cfg.label for cfg in methods]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate method labels: {labels}")
    for cfg in methods:
        cfg.validate(spec, split.calibration_len, split.validation_len)

    n_test = split.n_test_days
    matrices = {lbl: np.full((n_test, 24), np.nan) for lbl in labels}
    seconds = {lbl: 0.0 for lbl in labels}

    if workers <= 1:
        designer = Designer(panel, spec)
        for i, d in enumerate(split.test_days):
            stats = fit_norm_stats(panel, split.stats_range(int(d)), spec.norm_series)
            rows, secs = _forecast_day(designer, stats, split, methods, int(d))
            for lbl in labels:
                matrices[lbl][i] = rows[lbl]
                seconds[lbl] += secs[lbl]
            if progress is not None:
                progress(i + 1, n_test)
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunk = max(1, n_test // (workers * 8))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init, initargs=(panel, spec, methods, split)
        ) as pool:
            for i, (rows, secs) in enumerate(
                pool.map(_worker_day, [int(d) for d in split.test_days], chunksize=chunk)
            ):
                for lbl in labels:
                    matrices[lbl][i] = rows[lbl]
                    seconds[lbl] += secs[lbl]
                if progress is not None:
                    progress(i + 1, n_test)

    dates = panel.days[split.test_days]
    return [
        ForecastRun(
            config=cfg,
            label=cfg.label,
            test_days=split.test_days.copy(),
            dates=dates.copy(),
            matrix=matrices[cfg.label],
            seconds=seconds[cfg.label],
        )
        for cfg in methods
    ]


def rmse_by_year(run: ForecastRun, panel: HourlyPanel) -> dict[int, float]:
    """RMSE over all (day, hour) cells of each calendar year in the test range."""
    actual = panel.prices[run.test_days]
    years = panel.years[run.test_days]
    err2 = (run.matrix - actual) ** 2
    return {int(y): float(np.sqrt(err2[years == y].mean())) for y in np.unique(years)}


def rmse_total(run: ForecastRun, panel: HourlyPanel) -> float:
    actual = panel.prices[run.test_days]
    return float(np.sqrt(((run.matrix - actual) ** 2).mean()))


def k_sweep(
    panel: HourlyPanel,
    spec: ModelSpec,
    split: SplitGeometry,
    k_values,
    workers: int = 1,
    progress=None,
) -> list[tuple[int, float]]:
    """Whole-test-period RMSE of the fixed-k neighbor method for each k."""
    out = []
    for j, k in enumerate(k_values):
        cfg = MethodConfig(method="arhnn_k", k=int(k))
        run = run_backtest(panel, spec, [cfg], split, workers=workers)[0]
        out.append((int(k), rmse_total(run, panel)))
        if progress is not None:
            progress(j + 1, len(list(k_values)))
    return out


# ---------------------------------------------------------------------------
# file emission (schemas documented in README)

def slug(label: str) -> str:
    return "".join(ch for ch in label.lower() if ch.isalnum())


def write_forecast_csv(run: ForecastRun, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "hour", "forecast"])
        for i, date in enumerate(run.dates):
            for h in range(24):
                w.writerow([str(date), h + 1, repr(float(run.matrix[i, h]))])


def read_forecast_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a forecast CSV back into (dates, matrix)."""
    rows: dict[str, list[float]] = {}
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["date", "hour", "forecast"]:
            raise ValueError(f"unexpected forecast CSV header {header} in {path}")
        for date, hour, val in r:
            rows.setdefault(date, [np.nan] * 24)[int(hour) - 1] = float(val)
    dates = np.array(sorted(rows), dtype="datetime64[D]")
    matrix = np.array([rows[str(d)] for d in dates])
    if np.isnan(matrix).any():
        raise ValueError(f"forecast CSV {path} has missing hours")
    return dates, matrix


def write_rmse_csv(reports: dict[str, dict[int, float]], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "year", "rmse"])
        for label, per_year in reports.items():
            for year in sorted(per_year):
                w.writerow([label, year, repr(float(per_year[year]))])


def read_rmse_csv(path) -> dict[str, dict[int, float]]:
    out: dict[str, dict[int, float]] = {}
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["method", "year", "rmse"]:
            raise ValueError(f"unexpected RMSE CSV header {header} in {path}")
        for label, year, val in r:
            out.setdefault(label, {})[int(year)] = float(val)
    return out


def write_rmse_json(reports: dict[str, dict[int, float]], path) -> None:
    payload = {label: {str(y): v for y, v in per.items()} for label, per in reports.items()}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_ksweep_csv(pairs: list[tuple[int, float]], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "rmse"])
        for k, v in pairs:
            w.writerow([k, repr(float(v))])


def read_ksweep_csv(path) -> list[tuple[int, float]]:
    out = []
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["k", "rmse"]:
            raise ValueError(f"unexpected k-sweep CSV header {header} in {path}")
        for k, v in r:
            out.append((int(k), float(v)))
    return out


def format_rmse_table(reports: dict[str, dict[int, float]]) -> str:
    """Per-year RMSE table, methods as rows and calendar years as columns."""
    years = sorted({y for per in reports.values() for y in per})
    width = max([len("Method")] + [len(lbl) for lbl in reports]) + 2
    lines = ["RMSE by year"]
    lines.append("Method".ljust(width) + "".join(f"{y:>10}" for y in years))
    for label, per in reports.items():
        cells = "".join(f"{per[y]:>10.4f}" if y in per else " " * 10 for y in years)
        lines.append(label.ljust(width) + cells)
    return "\n".join(lines)
