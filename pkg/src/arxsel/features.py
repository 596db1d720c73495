"""Per-hour ARX regressor rows and similarity vectors.

Regressor layout (one row per target day ``d`` and hour ``h``, 0-based):

    cols 0-6   day-of-week dummies (Monday..Sunday, one-hot, no intercept)
    col  7     price lag 1      P[d-1, h]
    col  8     price lag 2      P[d-2, h]
    col  9     price lag 7      P[d-7, h]
    col  10    last known price P[d-1, 23]
    col  11    previous day min over 24 hours
    col  12    previous day max over 24 hours
    cols 13+   exogenous block, profile dependent:
        eu:    residual_load[d, h], coal[d-1], gas[d-1], eua[d-1]
        isone: load_fc[d, h],       gas[d-1],  mean-over-hours temp_fc[d]

Fuel/allowance indices enter at ``d-1``: the value attributed to an auction
day is the last one published strictly before it. Non-dummy columns are
z-scored with the stats of their source series; the regression target stays
on the original price scale.

The similarity vector used for nearest-neighbor selection is the subset
(lag-1 price, last known price, previous min, previous max, exogenous block),
normalized the same way: 8 entries for ``eu``, 7 for ``isone``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistoryError, PanelSchemaError
from .panel import HourlyPanel, NormStats

MIN_TARGET_DAY = 7  # deepest lag

DUMMY_NAMES = ("dow_mon", "dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_sat", "dow_sun")


@dataclass(frozen=True)
class Feature:
    """One non-dummy regressor column: how to compute it and which series normalizes it."""

    name: str
    kind: str          # price_lag | prev_last | prev_min | prev_max | hourly | daily_prev | daily_mean
    param: object      # lag depth or source series name
    series: str        # normalization series


_PRICE_FEATURES = (
    Feature("price_lag1", "price_lag", 1, "price"),
    Feature("price_lag2", "price_lag", 2, "price"),
    Feature("price_lag7", "price_lag", 7, "price"),
    Feature("price_prev_last", "prev_last", None, "price"),
    Feature("price_prev_min", "prev_min", None, "price"),
    Feature("price_prev_max", "prev_max", None, "price"),
)

_PROFILE_EXOG = {
    "eu": (
        Feature("residual_load", "hourly", "residual_load", "residual_load"),
        Feature("coal_prev", "daily_prev", "coal", "coal"),
        Feature("gas_prev", "daily_prev", "gas", "gas"),
        Feature("eua_prev", "daily_prev", "eua", "eua"),
    ),
    "isone": (
        Feature("load_fc", "hourly", "load_fc", "load_fc"),
        Feature("gas_prev", "daily_prev", "gas", "gas"),
        Feature("temp_day", "daily_mean", "temp_fc", "temp_fc"),
    ),
}

_SIM_FEATURE_NAMES = ("price_lag1", "price_prev_last", "price_prev_min", "price_prev_max")


@dataclass(frozen=True)
class ModelSpec:
    """Regressor and similarity-variable sets for one market profile."""

    profile: str
    features: tuple[Feature, ...]

    @classmethod
    def for_profile(cls, profile: str) -> "ModelSpec":
        profile = profile.lower()
        if profile not in _PROFILE_EXOG:
            raise PanelSchemaError(f"unknown profile '{profile}'")
        return cls(profile=profile, features=_PRICE_FEATURES + _PROFILE_EXOG[profile])

    @property
    def n_regressors(self) -> int:
        return len(DUMMY_NAMES) + len(self.features)

    @property
    def column_names(self) -> tuple[str, ...]:
        return DUMMY_NAMES + tuple(f.name for f in self.features)

    @property
    def column_series(self) -> tuple:
        """Normalization series per column (None for dummies)."""
        return (None,) * len(DUMMY_NAMES) + tuple(f.series for f in self.features)

    @property
    def norm_series(self) -> tuple[str, ...]:
        out: list[str] = ["price"]
        for f in self.features:
            if f.series not in out:
                out.append(f.series)
        return tuple(out)

    @property
    def sim_columns(self) -> tuple[int, ...]:
        names = self.column_names
        sim = list(_SIM_FEATURE_NAMES) + [f.name for f in self.features if f.kind in ("hourly", "daily_prev", "daily_mean")]
        return tuple(names.index(n) for n in sim)

    @property
    def n_sim(self) -> int:
        return len(self.sim_columns)


def raw_regressor_row(prices, hourly_exog, daily_exog, dow, d: int, h: int, spec: ModelSpec) -> np.ndarray:
    """Unnormalized regressor row assembled cell by cell from plain arrays.

    Reference implementation of the layout above; the vectorized Designer cube
    must agree with it exactly. Also used by the synthetic generator, which
    appends days incrementally.
    """
    if d < MIN_TARGET_DAY:
        raise InsufficientHistoryError(
            f"day index {d} has insufficient lag history; earliest usable day is {MIN_TARGET_DAY}"
        )
    row = np.zeros(spec.n_regressors)
    row[dow[d]] = 1.0
    prev = prices[d - 1]
    for j, f in enumerate(spec.features, start=len(DUMMY_NAMES)):
        if f.kind == "price_lag":
            row[j] = prices[d - f.param][h]
        elif f.kind == "prev_last":
            row[j] = prev[23]
        elif f.kind == "prev_min":
            row[j] = prev.min()
        elif f.kind == "prev_max":
            row[j] = prev.max()
        elif f.kind == "hourly":
            row[j] = hourly_exog[f.param][d][h]
        elif f.kind == "daily_prev":
            row[j] = daily_exog[f.param][d - 1]
        elif f.kind == "daily_mean":
            row[j] = np.mean(hourly_exog[f.param][d])
        else:  # pragma: no cover
            raise ValueError(f"unknown feature kind {f.kind}")
    return row


class Designer:
    """Precomputed raw feature cube for one (panel, spec) pair.

    Building the cube is linear in panel size and done once; every window
    extraction afterwards is a cheap slice plus a z-score broadcast. All
    methods are pure with respect to the panel, so one Designer can serve any
    number of rolling forecasts.
    """

    def __init__(self, panel: HourlyPanel, spec: ModelSpec):
        for f in spec.features:
            if f.kind in ("hourly", "daily_mean") and f.param not in panel.hourly_exog:
                raise PanelSchemaError(f"panel lacks hourly series '{f.param}' required by profile '{spec.profile}'")
            if f.kind == "daily_prev" and f.param not in panel.daily_exog:
                raise PanelSchemaError(f"panel lacks daily series '{f.param}' required by profile '{spec.profile}'")
        self.panel = panel
        self.spec = spec
        self._cube = self._build_cube()

    def _build_cube(self) -> np.ndarray:
        panel, spec = self.panel, self.spec
        n = panel.n_days
        p = spec.n_regressors
        cube = np.full((n, 24, p), np.nan)
        if n <= MIN_TARGET_DAY:
            return cube
        onehot = np.zeros((n, 7))
        onehot[np.arange(n), panel.dow] = 1.0
        cube[MIN_TARGET_DAY:, :, :7] = onehot[MIN_TARGET_DAY:, None, :]
        lo = MIN_TARGET_DAY
        prices = panel.prices
        for j, f in enumerate(spec.features, start=7):
            if f.kind == "price_lag":
                cube[lo:, :, j] = prices[lo - f.param : n - f.param]
            elif f.kind == "prev_last":
                cube[lo:, :, j] = prices[lo - 1 : n - 1, 23][:, None]
            elif f.kind == "prev_min":
                cube[lo:, :, j] = prices[lo - 1 : n - 1].min(axis=1)[:, None]
            elif f.kind == "prev_max":
                cube[lo:, :, j] = prices[lo - 1 : n - 1].max(axis=1)[:, None]
            elif f.kind == "hourly":
                cube[lo:, :, j] = panel.hourly_exog[f.param][lo:]
            elif f.kind == "daily_prev":
                cube[lo:, :, j] = panel.daily_exog[f.param][lo - 1 : n - 1][:, None]
            elif f.kind == "daily_mean":
                cube[lo:, :, j] = panel.hourly_exog[f.param][lo:].mean(axis=1)[:, None]
        return cube

    def norm_vectors(self, stats: NormStats) -> tuple[np.ndarray, np.ndarray]:
        """Column-aligned (mean, std) vectors; dummies pass through unchanged."""
        series = self.spec.column_series
        mu = np.array([0.0 if s is None else stats.mean(s) for s in series])
        sd = np.array([1.0 if s is None else stats.std(s) for s in series])
        return mu, sd

    def _check_days(self, days: np.ndarray) -> np.ndarray:
        days = np.atleast_1d(np.asarray(days, dtype=np.intp))
        if len(days) == 0:
            raise ValueError("empty day set")
        if days.min() < MIN_TARGET_DAY:
            raise InsufficientHistoryError(
                f"day index {int(days.min())} has insufficient lag history; "
                f"earliest usable day is {MIN_TARGET_DAY}"
            )
        if days.max() >= self.panel.n_days:
            raise IndexError(f"day index {int(days.max())} beyond panel ({self.panel.n_days} days)")
        return days

    def design(self, days, h: int, stats: NormStats) -> tuple[np.ndarray, np.ndarray]:
        """Stacked normalized regressor matrix and raw-scale targets for the given days."""
        days = self._check_days(days)
        mu, sd = self.norm_vectors(stats)
        X = (self._cube[days, h, :] - mu) / sd
        y = self.panel.prices[days, h]
        return X, y

    def row(self, d: int, h: int, stats: NormStats) -> tuple[np.ndarray, float]:
        """Normalized regressor row and raw target for one (day, hour)."""
        X, y = self.design(np.array([d]), h, stats)
        return X[0], float(y[0])

    def raw_row(self, d: int, h: int) -> np.ndarray:
        """Unnormalized regressor row (pre z-score scale)."""
        days = self._check_days(np.array([d]))
        return self._cube[days[0], h, :].copy()

    def sim_block(self, days, h: int, stats: NormStats) -> np.ndarray:
        """Normalized similarity vectors for the given days at hour h."""
        days = self._check_days(days)
        cols = np.asarray(self.spec.sim_columns, dtype=np.intp)
        mu, sd = self.norm_vectors(stats)
        return (self._cube[np.ix_(days, [h], cols)][:, 0, :] - mu[cols]) / sd[cols]

    def similarity(self, d: int, h: int, stats: NormStats) -> np.ndarray:
        return self.sim_block(np.array([d]), h, stats)[0]


def build_row(panel: HourlyPanel, d: int, h: int, spec: ModelSpec, stats: NormStats):
    """One-shot normalized row + target (constructs a throwaway Designer)."""
    return Designer(panel, spec).row(d, h, stats)


def build_design(panel: HourlyPanel, days, h: int, spec: ModelSpec, stats: NormStats):
    """One-shot design matrix + target vector in the given day order."""
    return Designer(panel, spec).design(days, h, stats)


def build_similarity(panel: HourlyPanel, d: int, h: int, spec: ModelSpec, stats: NormStats):
    """One-shot normalized similarity vector."""
    return Designer(panel, spec).similarity(d, h, stats)
