"""Battery-arbitrage evaluation of day-ahead forecasts.

One cycle per day at most: charge at hour h1, discharge at a strictly later
hour h2, both committed in the day-ahead auction from the forecast curve. The
spread accounts for round-trip efficiency on both legs. Orders execute at the
realized prices (price-taker), so profits can be negative when the forecast
errs. The crystal-ball strategy applies the same rule to realized prices and
upper-bounds every forecast-driven method.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class StrategyParams:
    efficiency: float = 0.9
    threshold: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.threshold < 0.0:
            raise ConfigError(f"threshold must be >= 0, got {self.threshold}")


@dataclass(frozen=True)
class TradeDecision:
    """Best pair and predicted spread; traded only when the spread clears the threshold."""

    traded: bool
    h1: int        # charge hour, 0-based
    h2: int        # discharge hour, 0-based, > h1
    spread: float  # predicted eta*P[h2] - P[h1]/eta


def spread_value(p1: float, p2: float, params: StrategyParams) -> float:
    return params.efficiency * p2 - p1 / params.efficiency


def choose_pair(day_forecast: np.ndarray, params: StrategyParams) -> tuple[int, int, float]:
    """Hour pair (h1 < h2) maximizing the efficiency-adjusted spread.

    Ties resolve to the smallest h1, then the smallest h2 (row-major argmax
    over the strictly-upper-triangular spread matrix).
    """
    p = np.asarray(day_forecast, dtype=np.float64)
    if p.shape != (24,) or not np.all(np.isfinite(p)):
        raise ValueError("day forecast must be 24 finite prices")
    eta = params.efficiency
    m = eta * p[None, :] - p[:, None] / eta
    m[np.tril_indices(24)] = -np.inf  # require h1 < h2
    flat = int(np.argmax(m))
    h1, h2 = divmod(flat, 24)
    return h1, h2, float(m[h1, h2])


def decide(day_forecast: np.ndarray, params: StrategyParams) -> TradeDecision:
    """Trade exactly when the predicted spread reaches the threshold (inclusive)."""
    h1, h2, spread = choose_pair(day_forecast, params)
    return TradeDecision(traded=spread >= params.threshold, h1=h1, h2=h2, spread=spread)


def realize(day_actual: np.ndarray, decision: TradeDecision, params: StrategyParams) -> float:
    """Realized profit of a pre-committed decision at the actual prices; 0 when not traded."""
    if not decision.traded:
        return 0.0
    p = np.asarray(day_actual, dtype=np.float64)
    return float(spread_value(p[decision.h1], p[decision.h2], params))


def crystal_ball(day_actual: np.ndarray, params: StrategyParams) -> tuple[TradeDecision, float]:
    """Perfect-foresight decision: the same rule applied to realized prices."""
    decision = decide(day_actual, params)
    return decision, realize(day_actual, decision, params)


@dataclass
class TradeLedger:
    """Per-day decisions and realized profits for one method over the test range."""

    label: str
    dates: np.ndarray       # datetime64[D]
    traded: np.ndarray      # bool
    h1: np.ndarray          # int, 0-based charge hour of the best pair
    h2: np.ndarray          # int, 0-based discharge hour
    spread: np.ndarray      # predicted spread of the best pair
    profit: np.ndarray      # realized profit, 0.0 on no-trade days

    @property
    def n_trades(self) -> int:
        return int(self.traded.sum())


def build_ledger(
    forecast_matrix: np.ndarray,
    actual_matrix: np.ndarray,
    dates: np.ndarray,
    params: StrategyParams,
    label: str,
) -> TradeLedger:
    """Decide on forecasts, realize on actuals, one row per test day."""
    n = len(dates)
    if forecast_matrix.shape != (n, 24) or actual_matrix.shape != (n, 24):
        raise ValueError("forecast/actual matrices must be (n_days, 24) aligned with dates")
    traded = np.zeros(n, dtype=bool)
    h1 = np.zeros(n, dtype=int)
    h2 = np.zeros(n, dtype=int)
    spread = np.zeros(n)
    profit = np.zeros(n)
    for i in range(n):
        dec = decide(forecast_matrix[i], params)
        traded[i] = dec.traded
        h1[i], h2[i], spread[i] = dec.h1, dec.h2, dec.spread
        profit[i] = realize(actual_matrix[i], dec, params)
    return TradeLedger(label, dates.copy(), traded, h1, h2, spread, profit)


def crystal_ledger(actual_matrix: np.ndarray, dates: np.ndarray, params: StrategyParams) -> TradeLedger:
    return build_ledger(actual_matrix, actual_matrix, dates, params, "Crystal ball")


@dataclass(frozen=True)
class EconRow:
    """Yearly economics: total profit, trade count, per-trade profit, Sharpe ratio.

    ``ppt`` and ``sharpe`` are NaN markers when undefined (no trades; fewer
    than two non-zero profits; zero dispersion).
    """

    year: int
    total_profit: float
    n_trades: int
    ppt: float
    sharpe: float


def econ_report(ledger: TradeLedger, years: np.ndarray) -> list[EconRow]:
    """Per-calendar-year economics. ``years`` aligns with the ledger days."""
    if years.shape != ledger.dates.shape:
        raise ValueError("years array must align with ledger dates")
    rows = []
    for y in np.unique(years):
        m = years == y
        profits = ledger.profit[m]
        traded = ledger.traded[m]
        tp = float(profits.sum())
        n_trades = int(traded.sum())
        if n_trades == 0:
            rows.append(EconRow(int(y), 0.0, 0, math.nan, math.nan))
            continue
        ppt = tp / n_trades
        nonzero = profits[profits != 0.0]
        if len(nonzero) >= 2:
            sigma = float(np.std(nonzero, ddof=1))
            sharpe = ppt / sigma if sigma > 0 else math.nan
        else:
            sharpe = math.nan
        rows.append(EconRow(int(y), tp, n_trades, float(ppt), float(sharpe)))
    return rows


def years_of(dates: np.ndarray) -> np.ndarray:
    return dates.astype("datetime64[Y]").astype(int) + 1970


# ---------------------------------------------------------------------------
# relative-change table for the statistical-vs-economic scatter

def relative_changes(
    rmse: dict[str, dict[int, float]],
    econ: dict[str, list[EconRow]],
    reference: str,
) -> list[dict]:
    """Percentage change of RMSE/TP/PPT/SR per (method, year) versus a reference method."""
    if reference not in rmse or reference not in econ:
        raise ConfigError(f"reference method '{reference}' not present in the reports")
    ref_rmse = rmse[reference]
    ref_econ = {r.year: r for r in econ[reference]}

    def pct(value: float, ref: float) -> float:
        if not (math.isfinite(value) and math.isfinite(ref)) or ref == 0:
            return math.nan
        return 100.0 * (value - ref) / abs(ref)

    out = []
    for label in rmse:
        if label == reference:
            continue
        econ_rows = {r.year: r for r in econ.get(label, [])}
        for year in sorted(rmse[label]):
            if year not in ref_rmse or year not in ref_econ or year not in econ_rows:
                continue
            er, rr = econ_rows[year], ref_econ[year]
            out.append(
                {
                    "method": label,
                    "year": year,
                    "rmse_pct_change": pct(rmse[label][year], ref_rmse[year]),
                    "total_profit_pct_change": pct(er.total_profit, rr.total_profit),
                    "ppt_pct_change": pct(er.ppt, rr.ppt),
                    "sharpe_pct_change": pct(er.sharpe, rr.sharpe),
                }
            )
    return out


# ---------------------------------------------------------------------------
# file emission

def _fmt(x: float) -> str:
    return "NA" if not math.isfinite(x) else repr(float(x))


def write_ledger_csv(ledger: TradeLedger, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "traded", "buy_hour", "sell_hour", "predicted_spread", "profit"])
        for i, date in enumerate(ledger.dates):
            w.writerow(
                [
                    str(date),
                    int(ledger.traded[i]),
                    int(ledger.h1[i]) + 1,
                    int(ledger.h2[i]) + 1,
                    repr(float(ledger.spread[i])),
                    repr(float(ledger.profit[i])),
                ]
            )


def read_ledger_csv(path, label: str = "") -> TradeLedger:
    dates, traded, h1, h2, spread, profit = [], [], [], [], [], []
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["date", "traded", "buy_hour", "sell_hour", "predicted_spread", "profit"]:
            raise ValueError(f"unexpected ledger CSV header {header} in {path}")
        for row in r:
            dates.append(row[0])
            traded.append(bool(int(row[1])))
            h1.append(int(row[2]) - 1)
            h2.append(int(row[3]) - 1)
            spread.append(float(row[4]))
            profit.append(float(row[5]))
    return TradeLedger(
        label or Path(path).stem,
        np.array(dates, dtype="datetime64[D]"),
        np.array(traded, dtype=bool),
        np.array(h1, dtype=int),
        np.array(h2, dtype=int),
        np.array(spread),
        np.array(profit),
    )


def write_econ_csv(reports: dict[str, list[EconRow]], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "year", "total_profit", "trades", "profit_per_trade", "sharpe_ratio"])
        for label, rows in reports.items():
            for r in rows:
                w.writerow([label, r.year, _fmt(r.total_profit), r.n_trades, _fmt(r.ppt), _fmt(r.sharpe)])


def read_econ_csv(path) -> dict[str, list[EconRow]]:
    def parse(tok: str) -> float:
        return math.nan if tok == "NA" else float(tok)

    out: dict[str, list[EconRow]] = {}
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["method", "year", "total_profit", "trades", "profit_per_trade", "sharpe_ratio"]:
            raise ValueError(f"unexpected econ CSV header {header} in {path}")
        for label, year, tp, trades, ppt, sr in r:
            out.setdefault(label, []).append(
                EconRow(int(year), parse(tp), int(trades), parse(ppt), parse(sr))
            )
    return out


def write_econ_json(reports: dict[str, list[EconRow]], path) -> None:
    payload = {
        label: [
            {
                "year": r.year,
                "total_profit": None if not math.isfinite(r.total_profit) else r.total_profit,
                "trades": r.n_trades,
                "profit_per_trade": None if not math.isfinite(r.ppt) else r.ppt,
                "sharpe_ratio": None if not math.isfinite(r.sharpe) else r.sharpe,
            }
            for r in rows
        ]
        for label, rows in reports.items()
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_scatter_csv(rows: list[dict], path) -> None:
    cols = ["method", "year", "rmse_pct_change", "total_profit_pct_change", "ppt_pct_change", "sharpe_pct_change"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row["method"], row["year"]] + [_fmt(row[c]) for c in cols[2:]])


def format_econ_table(reports: dict[str, list[EconRow]]) -> str:
    """Three stacked blocks (total profit, profit per trade, Sharpe) per year."""
    years = sorted({r.year for rows in reports.values() for r in rows})
    width = max([len("Method")] + [len(lbl) for lbl in reports]) + 2

    def block(title: str, getter) -> list[str]:
        lines = [title, "Method".ljust(width) + "".join(f"{y:>12}" for y in years)]
        for label, rows in reports.items():
            by_year = {r.year: r for r in rows}
            cells = ""
            for y in years:
                if y in by_year and math.isfinite(getter(by_year[y])):
                    cells += f"{getter(by_year[y]):>12.2f}"
                else:
                    cells += f"{'NA':>12}"
            lines.append(label.ljust(width) + cells)
        return lines

    lines = block("Total profit", lambda r: r.total_profit)
    lines += [""] + block("Profit per trade", lambda r: r.ppt)
    lines += [""] + block("Sharpe ratio", lambda r: r.sharpe)
    return "\n".join(lines)
