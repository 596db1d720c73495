"""Hourly market panels: CSV ingestion, residual load, normalization stats, split geometry.

A panel holds one market as a dense [n_days x 24] price matrix plus named
exogenous series. Hourly series are [n_days x 24] matrices, daily series are
[n_days] vectors. Day indices are 0-based throughout the code base; the CSV
schema uses hours 1-24 (mapped to matrix columns 0-23 on load).

CSV schema (one row per date and hour, sorted or not):

    date,hour,price,<exogenous columns>

    eu profile:    load_fc, wind_fc, solar_fc, coal, gas, eua
    isone profile: load_fc, temp_fc, gas

``coal``, ``gas`` and ``eua`` are daily series, repeated across the 24 rows of
a day; they may be empty on non-trading days and are forward-filled. All other
columns must be fully populated (up to DST-day repairs).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    ConstantSeriesError,
    InsufficientHistoryError,
    PanelDataError,
    PanelSchemaError,
)

DAY = np.timedelta64(1, "D")

# Short symbols used in data-description error messages.
SERIES_SYMBOLS = {
    "price": "P",
    "load_fc": "L",
    "wind_fc": "W",
    "solar_fc": "S",
    "residual_load": "RL",
    "temp_fc": "T",
    "coal": "C",
    "gas": "G",
    "eua": "EUA",
}

# profile -> (hourly exogenous columns, daily exogenous columns)
PROFILE_SCHEMAS = {
    "eu": (("load_fc", "wind_fc", "solar_fc"), ("coal", "gas", "eua")),
    "isone": (("load_fc", "temp_fc"), ("gas",)),
}

_CONST_TOL = 1e-12


def _symbol(name: str) -> str:
    return SERIES_SYMBOLS.get(name, name)


@dataclass(frozen=True)
class HourlyPanel:
    """Immutable aligned panel for one market.

    ``days`` are strictly consecutive calendar dates; every hourly matrix has
    exactly 24 columns and no missing values. ``dst_repairs`` flags the days
    whose rows were reconstructed (spring interpolation / fall averaging).
    """

    market_id: str
    days: np.ndarray                      # datetime64[D], shape (n_days,)
    prices: np.ndarray                    # float64, shape (n_days, 24)
    hourly_exog: dict[str, np.ndarray] = field(default_factory=dict)
    daily_exog: dict[str, np.ndarray] = field(default_factory=dict)
    dow: np.ndarray = None                # int, Monday=0, shape (n_days,)
    dst_repairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.dow is None:
            object.__setattr__(self, "dow", weekday_of(self.days))

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def years(self) -> np.ndarray:
        """Calendar year of each day."""
        return self.days.astype("datetime64[Y]").astype(int) + 1970

    def has_series(self, name: str) -> bool:
        return name == "price" or name in self.hourly_exog or name in self.daily_exog

    def series_values(self, name: str) -> np.ndarray:
        """Raw values of a named series (matrix for hourly, vector for daily)."""
        if name == "price":
            return self.prices
        if name in self.hourly_exog:
            return self.hourly_exog[name]
        if name in self.daily_exog:
            return self.daily_exog[name]
        raise KeyError(f"panel has no series '{name}'")

    def day_index(self, date) -> int:
        """0-based index of a calendar date."""
        d = np.datetime64(date, "D")
        idx = int((d - self.days[0]).astype(int))
        if idx < 0 or idx >= self.n_days or self.days[idx] != d:
            raise KeyError(f"date {d} not in panel range {self.days[0]}..{self.days[-1]}")
        return idx

    def slice_days(self, start: int, stop: int) -> "HourlyPanel":
        """Contiguous sub-panel over day indices [start, stop)."""
        if not (0 <= start < stop <= self.n_days):
            raise IndexError(f"invalid day slice [{start}, {stop}) for {self.n_days} days")
        kept = {str(self.days[i]) for i in range(start, stop)}
        return HourlyPanel(
            market_id=self.market_id,
            days=self.days[start:stop],
            prices=self.prices[start:stop],
            hourly_exog={k: v[start:stop] for k, v in self.hourly_exog.items()},
            daily_exog={k: v[start:stop] for k, v in self.daily_exog.items()},
            dow=self.dow[start:stop],
            dst_repairs=tuple(r for r in self.dst_repairs if r[0] in kept),
        )

    def with_hourly(self, name: str, values: np.ndarray) -> "HourlyPanel":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.prices.shape:
            raise ValueError(f"series '{name}' shape {values.shape} != {self.prices.shape}")
        exog = dict(self.hourly_exog)
        exog[name] = values
        return dataclasses.replace(self, hourly_exog=exog)


def weekday_of(days: np.ndarray) -> np.ndarray:
    """Day-of-week (Monday=0) for an array of datetime64[D]."""
    # 1970-01-01 was a Thursday.
    return ((days.astype("datetime64[D]").astype(int) + 3) % 7).astype(np.int64)


def _parse_numeric(df: pd.DataFrame, col: str, allow_empty: bool) -> np.ndarray:
    raw = df[col].str.strip()
    empty = raw == ""
    vals = pd.to_numeric(raw.mask(empty), errors="coerce")
    bad = vals.isna() & ~empty
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise PanelDataError(
            f"unparseable value {raw.iloc[i]!r} in column '{col}' at CSV line {i + 2}"
        )
    if not allow_empty and empty.any():
        i = int(np.flatnonzero(empty.to_numpy())[0])
        raise PanelDataError(f"missing value in column '{col}' at CSV line {i + 2}")
    return vals.to_numpy(dtype=np.float64)


def load_panel(path, profile: str) -> HourlyPanel:
    """Load and validate an hourly panel CSV for the given market profile.

    Repairs DST anomalies: a 23-hour day gets its missing hour linearly
    interpolated from the neighboring hours, a 25-hour day gets the duplicated
    hour averaged. Daily fuel/allowance series are forward-filled over
    non-trading days. Any other irregularity is rejected with a pointed error.

    Parameters
    ----------
    path : str or Path
        CSV file in the documented schema.
    profile : str
        ``"eu"`` or ``"isone"``; selects the required exogenous columns.

    Returns
    -------
    HourlyPanel
    """
    profile = profile.lower()
    if profile not in PROFILE_SCHEMAS:
        raise PanelSchemaError(f"unknown profile '{profile}'; expected one of {sorted(PROFILE_SCHEMAS)}")
    hourly_cols, daily_cols = PROFILE_SCHEMAS[profile]

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"panel file not found: {path}")

    df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    required = ["date", "hour", "price", *hourly_cols, *daily_cols]
    for col in required:
        if col not in df.columns:
            raise PanelSchemaError(
                f"missing required column '{col}' ({_symbol(col)}) for profile '{profile}'"
            )
    for col in df.columns:
        if col not in required:
            raise PanelSchemaError(f"unexpected column '{col}' for profile '{profile}'")
    if len(df) == 0:
        raise PanelDataError("panel file has no data rows")

    dates = pd.to_datetime(df["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    if dates.isna().any():
        i = int(np.flatnonzero(dates.isna().to_numpy())[0])
        raise PanelDataError(
            f"unparseable value {df['date'].iloc[i]!r} in column 'date' at CSV line {i + 2}"
        )
    hours = pd.to_numeric(df["hour"].str.strip(), errors="coerce")
    bad_hour = hours.isna() | (hours % 1 != 0)
    if bad_hour.any():
        i = int(np.flatnonzero(bad_hour.to_numpy())[0])
        raise PanelDataError(
            f"unparseable value {df['hour'].iloc[i]!r} in column 'hour' at CSV line {i + 2}"
        )
    hours = hours.astype(int)
    if ((hours < 1) | (hours > 24)).any():
        i = int(np.flatnonzero(((hours < 1) | (hours > 24)).to_numpy())[0])
        raise PanelDataError(f"hour {int(hours.iloc[i])} out of range 1-24 at CSV line {i + 2}")

    value_cols = ["price", *hourly_cols]
    parsed = {c: _parse_numeric(df, c, allow_empty=False) for c in value_cols}
    for c in daily_cols:
        parsed[c] = _parse_numeric(df, c, allow_empty=True)  # NaN marks missing, ffilled below

    work = pd.DataFrame({"date": dates.dt.normalize(), "hour": hours.to_numpy()})
    for c in value_cols + list(daily_cols):
        work[c] = parsed[c]
    work = work.sort_values(["date", "hour"], kind="stable").reset_index(drop=True)

    day_values = work["date"].unique()
    days = np.array(day_values, dtype="datetime64[D]")
    deltas = np.diff(days).astype("timedelta64[D]").astype(int)
    if (deltas <= 0).any():
        raise PanelDataError("dates are not strictly increasing after sorting")
    if (deltas > 1).any():
        gap = int(np.flatnonzero(deltas > 1)[0])
        missing = days[gap] + DAY
        raise PanelDataError(f"calendar gap: missing date {missing}")

    n_days = len(days)
    prices = np.full((n_days, 24), np.nan)
    hourly = {c: np.full((n_days, 24), np.nan) for c in hourly_cols}
    daily = {c: np.full(n_days, np.nan) for c in daily_cols}
    repairs: list[tuple[str, str]] = []

    grouped = work.groupby("date", sort=True)
    for di, (date, g) in enumerate(grouped):
        hrs = g["hour"].to_numpy()
        uniq, counts = np.unique(hrs, return_counts=True)
        date_str = str(days[di])
        if len(g) == 24 and len(uniq) == 24:
            pass
        elif len(g) == 23 and len(uniq) == 23:
            repairs.append((date_str, "spring"))
        elif len(g) == 25 and len(uniq) == 24 and counts.max() == 2:
            repairs.append((date_str, "fall"))
        else:
            raise PanelDataError(
                f"day {date_str}: expected 24 hourly rows, found {len(g)} "
                f"({len(uniq)} distinct hours)"
            )

        for c in value_cols:
            vals = g[c].to_numpy()
            # average duplicated hours (fall), leave missing hour NaN (spring)
            sums = np.zeros(24)
            cnts = np.zeros(24)
            np.add.at(sums, hrs - 1, vals)
            np.add.at(cnts, hrs - 1, 1.0)
            with np.errstate(invalid="ignore"):
                col = np.where(cnts > 0, sums / np.maximum(cnts, 1.0), np.nan)
            missing = np.flatnonzero(cnts == 0)
            if len(missing) == 1:
                h = int(missing[0])
                lo = col[h - 1] if h > 0 else col[h + 1]
                hi = col[h + 1] if h < 23 else col[h - 1]
                col[h] = 0.5 * (lo + hi)
            elif len(missing) > 1:
                raise PanelDataError(f"day {date_str}: multiple missing hours in column '{c}'")
            if c == "price":
                prices[di] = col
            else:
                hourly[c][di] = col

        for c in daily_cols:
            vals = g[c].to_numpy()
            finite = vals[np.isfinite(vals)]
            if len(finite):
                distinct = np.unique(finite)
                if len(distinct) > 1:
                    raise PanelDataError(
                        f"day {date_str}: daily column '{c}' has conflicting values {distinct[:3]}"
                    )
                daily[c][di] = distinct[0]

    for c in daily_cols:
        v = daily[c]
        if np.isnan(v[0]):
            raise PanelDataError(f"daily column '{c}' has no value on the first day {days[0]}")
        last = v[0]
        for i in range(1, n_days):
            if np.isnan(v[i]):
                v[i] = last
            else:
                last = v[i]

    return HourlyPanel(
        market_id=path.stem,
        days=days,
        prices=prices,
        hourly_exog=hourly,
        daily_exog=daily,
        dst_repairs=tuple(repairs),
    )


def save_panel(panel: HourlyPanel, path, profile: str) -> None:
    """Write a panel back to the CSV schema of the given profile (daily series repeated)."""
    profile = profile.lower()
    hourly_cols, daily_cols = PROFILE_SCHEMAS[profile]
    for c in hourly_cols:
        if c not in panel.hourly_exog:
            raise PanelSchemaError(f"panel lacks hourly series '{c}' required by profile '{profile}'")
    for c in daily_cols:
        if c not in panel.daily_exog:
            raise PanelSchemaError(f"panel lacks daily series '{c}' required by profile '{profile}'")
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(["date", "hour", "price", *hourly_cols, *daily_cols]) + "\n")
        for di in range(panel.n_days):
            date = str(panel.days[di])
            for h in range(24):
                cells = [date, str(h + 1), repr(float(panel.prices[di, h]))]
                cells += [repr(float(panel.hourly_exog[c][di, h])) for c in hourly_cols]
                cells += [repr(float(panel.daily_exog[c][di])) for c in daily_cols]
                fh.write(",".join(cells) + "\n")


def derive_residual_load(panel: HourlyPanel) -> HourlyPanel:
    """Add the residual-load matrix: system load forecast minus wind and solar forecasts."""
    for name in ("load_fc", "wind_fc", "solar_fc"):
        if name not in panel.hourly_exog:
            raise PanelSchemaError(
                f"cannot derive residual load: missing series '{name}' ({_symbol(name)})"
            )
    rl = panel.hourly_exog["load_fc"] - (panel.hourly_exog["wind_fc"] + panel.hourly_exog["solar_fc"])
    return panel.with_hourly("residual_load", rl)


@dataclass(frozen=True)
class NormStats:
    """Per-series mean/std (sample, n-1) fitted over a stated day range."""

    means: dict[str, float]
    stds: dict[str, float]
    day_range: tuple[int, int]

    def mean(self, name: str) -> float:
        return self.means[name]

    def std(self, name: str) -> float:
        return self.stds[name]

    def normalize(self, name: str, x):
        return (np.asarray(x, dtype=np.float64) - self.means[name]) / self.stds[name]

    def denormalize(self, name: str, z):
        return np.asarray(z, dtype=np.float64) * self.stds[name] + self.means[name]

    @classmethod
    def identity(cls, names) -> "NormStats":
        """Stats that leave values unchanged (mean 0, std 1); handy for controlled tests."""
        names = list(names)
        return cls({n: 0.0 for n in names}, {n: 1.0 for n in names}, (0, 0))


def fit_norm_stats(panel: HourlyPanel, day_range: tuple[int, int], series) -> NormStats:
    """Fit z-score statistics for the named series over day indices [start, stop).

    Hourly series pool all 24 hourly cells of the range; daily series use one
    value per day. A constant series is rejected, it cannot be used as a
    normalized regressor.
    """
    start, stop = int(day_range[0]), int(day_range[1])
    if not (0 <= start < stop <= panel.n_days):
        raise ValueError(f"empty or out-of-range day range [{start}, {stop})")
    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    for name in series:
        vals = panel.series_values(name)[start:stop].ravel()
        m = float(np.mean(vals))
        s = float(np.std(vals, ddof=1))
        if not np.isfinite(s) or s <= _CONST_TOL * max(1.0, abs(m)):
            raise ConstantSeriesError(name, f"series '{name}' ({_symbol(name)}) is constant over days [{start}, {stop})")
        means[name] = m
        stds[name] = s
    return NormStats(means, stds, (start, stop))


@dataclass(frozen=True)
class SplitGeometry:
    """Rolling train/validation/test index geometry.

    For a test day ``d`` the calibration window is the ``calibration_len`` days
    ending at ``d-1`` and the validation window the ``validation_len`` days
    ending at ``d-1``; normalization statistics are fitted on their union
    ``[d - calibration_len - validation_len, d)``. Windows roll forward one day
    per test day and never touch day ``d`` or later.
    """

    calibration_len: int
    validation_len: int
    test_days: np.ndarray  # 0-based day indices, consecutive

    @property
    def n_test_days(self) -> int:
        return len(self.test_days)

    @property
    def first_test_idx(self) -> int:
        return int(self.test_days[0])

    def calibration_window(self, d: int) -> np.ndarray:
        return np.arange(d - self.calibration_len, d)

    def validation_window(self, d: int) -> np.ndarray:
        return np.arange(d - self.validation_len, d)

    def stats_range(self, d: int) -> tuple[int, int]:
        return (d - self.calibration_len - self.validation_len, d)


def make_split(
    panel: HourlyPanel,
    calibration_len: int = 728,
    validation_len: int = 728,
    test_start=None,
    test_end=None,
) -> SplitGeometry:
    """Build the rolling split for a panel.

    ``test_start``/``test_end`` are calendar dates (inclusive); defaults place
    the test range right after the initial calibration+validation reservation
    and extend it to the last panel day. The deepest autoregressive lag spans 7
    days, so the earliest admissible test day index is
    ``calibration_len + max(validation_len, 7)``.
    """
    if calibration_len < 1 or validation_len < 0:
        raise ValueError("calibration_len must be >= 1 and validation_len >= 0")
    min_start = calibration_len + max(validation_len, 7)
    if test_start is None:
        start_idx = min_start
    else:
        start_idx = panel.day_index(test_start)
    end_idx = panel.n_days - 1 if test_end is None else panel.day_index(test_end)

    if start_idx < min_start:
        raise InsufficientHistoryError(
            f"insufficient history before test start: need {min_start} prior days "
            f"(calibration {calibration_len} + validation/lags {max(validation_len, 7)}), "
            f"have {start_idx}"
        )
    if start_idx >= panel.n_days:
        raise InsufficientHistoryError(
            f"insufficient data: need at least {min_start + 1} days for one test day, "
            f"panel has {panel.n_days}"
        )
    if start_idx > end_idx:
        raise InsufficientHistoryError(
            f"empty test range: start index {start_idx} is after end index {end_idx}"
        )
    return SplitGeometry(
        calibration_len=calibration_len,
        validation_len=validation_len,
        test_days=np.arange(start_idx, end_idx + 1),
    )
