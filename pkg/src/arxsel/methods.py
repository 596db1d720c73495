"""Day-ahead forecasting strategies over a rolling calibration window.

Five methods share the same per-hour ARX regression and differ only in which
training observations they use and whether forecasts are combined:

* ``win``      one OLS fit on the most recent ``w`` days;
* ``avg``      mean of ``win`` forecasts over a set of window lengths;
* ``arhnn_k``  OLS on the ``k`` nearest neighbors of the target's similarity
               vector within the calibration window;
* ``arhnn``    per-observation best ``k`` voted on a validation window, then
               the ``arhnn_k`` forecasts for the voted values are averaged
               with multiplicity weights;
* ``wls``      weighted least squares on the whole calibration window with
               normalized inverse-distance weights.

The per-k validation scan is the expensive part (every validation observation
times every grid value). It runs through cumulative Gram matrices over the
distance-sorted candidate rows, so all grid values are solved in one batched
pass; the spec-level per-k path (`forecast_arhnn_k`) is used for the final
target forecasts and in tests as the reference the scan must agree with.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientHistoryError
from .estimators import WEIGHT_EPS, euclidean_distances, inv_dist_weights, knn_select, ols_fit, wls_fit
from .features import MIN_TARGET_DAY, Designer, ModelSpec

DEFAULT_K_GRID = tuple(range(28, 729, 7))
AVG6_WINDOWS = (56, 84, 112, 714, 721, 728)
AVG_ALL_WINDOWS = tuple(range(56, 729))
WINDOW_MIN, WINDOW_MAX = 56, 728

_FAST_AVG_MIN = 33   # below this many windows the plain member loop is just as fast
_T_CHUNK = 64        # validation observations per batched block (memory bound)

METHOD_IDS = ("win", "avg", "arhnn_k", "arhnn", "wls")


@dataclass(frozen=True)
class MethodConfig:
    """Identifier plus parameters for one forecasting method."""

    method: str
    window: int = 728
    windows: tuple[int, ...] = AVG6_WINDOWS
    k: int = 182
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    validation_len: int | None = None

    @property
    def label(self) -> str:
        if self.method == "win":
            return f"Win({self.window})"
        if self.method == "avg":
            ws = set(self.windows)
            if ws == set(AVG6_WINDOWS):
                return "Avg(6)"
            if ws == set(AVG_ALL_WINDOWS):
                return "Avg(All)"
            return f"Avg({len(ws)})"
        if self.method == "arhnn_k":
            return f"ARHNN({self.k})"
        if self.method == "arhnn":
            return "ARHNN"
        if self.method == "wls":
            return "WLS"
        return self.method

    def validate(self, spec: ModelSpec, calibration_len: int, validation_len: int) -> None:
        """Reject configurations that violate the method invariants."""
        if self.method not in METHOD_IDS:
            raise ConfigError(f"unknown method '{self.method}'; expected one of {METHOD_IDS}")
        k_floor = spec.n_regressors + 4
        w_max = min(WINDOW_MAX, calibration_len)
        if self.method == "win":
            if not WINDOW_MIN <= self.window <= w_max:
                raise ConfigError(f"window {self.window} outside [{WINDOW_MIN}, {w_max}]")
        elif self.method == "avg":
            if not self.windows:
                raise ConfigError("avg needs a non-empty window set")
            for w in self.windows:
                if not WINDOW_MIN <= w <= w_max:
                    raise ConfigError(f"window {w} outside [{WINDOW_MIN}, {w_max}]")
        elif self.method == "arhnn_k":
            if not k_floor <= self.k <= calibration_len:
                raise ConfigError(f"k={self.k} outside [{k_floor}, {calibration_len}]")
        elif self.method == "arhnn":
            if not self.k_grid:
                raise ConfigError("arhnn needs a non-empty k grid")
            for k in self.k_grid:
                if not k_floor <= k <= calibration_len:
                    raise ConfigError(f"grid value k={k} outside [{k_floor}, {calibration_len}]")
            v = self.validation_len if self.validation_len is not None else validation_len
            if not 1 <= v <= validation_len:
                raise ConfigError(
                    f"method validation length {v} outside [1, {validation_len}] reserved by the split"
                )


@dataclass(frozen=True)
class KSelectionRecord:
    """Best grid value for one validation observation at one hour."""

    day: int
    hour: int
    k: int
    abs_error: float


def _target_row(designer: Designer, stats, d: int, h: int) -> np.ndarray:
    x, _ = designer.row(d, h, stats)
    return x


def _window_days(d: int, length: int) -> np.ndarray:
    if d - length < MIN_TARGET_DAY:
        raise InsufficientHistoryError(
            f"window of {length} days before day {d} reaches day {d - length}; "
            f"earliest usable day is {MIN_TARGET_DAY}"
        )
    return np.arange(d - length, d)


def forecast_win(designer: Designer, stats, d: int, h: int, w: int) -> float:
    """OLS forecast from the w most recent days before d."""
    days = _window_days(d, w)
    X, y = designer.design(days, h, stats)
    b = ols_fit(X, y)
    return float(_target_row(designer, stats, d, h) @ b)


def forecast_avg(designer: Designer, stats, d: int, h: int, windows) -> float:
    """Mean of window forecasts over a set of calibration-window lengths."""
    ws = sorted({int(w) for w in windows})
    if not ws:
        raise ValueError("empty window set")
    if len(ws) >= _FAST_AVG_MIN:
        return _forecast_avg_fast(designer, stats, d, h, ws)
    vals = [forecast_win(designer, stats, d, h, w) for w in ws]
    return float(np.mean(vals))


def _forecast_avg_fast(designer: Designer, stats, d: int, h: int, ws: list[int]) -> float:
    """Shared-suffix Gram pass over nested windows; agrees with the member loop to ~1e-8."""
    days = _window_days(d, ws[-1])
    X, y = designer.design(days, h, stats)
    Xr, yr = X[::-1], y[::-1]  # most recent first: window w = first w reversed rows
    p = X.shape[1]
    G = np.zeros((p, p))
    c = np.zeros(p)
    Gs = np.empty((len(ws), p, p))
    cs = np.empty((len(ws), p))
    lo = 0
    for i, w in enumerate(ws):
        seg = Xr[lo:w]
        G += seg.T @ seg
        c += seg.T @ yr[lo:w]
        lo = w
        Gs[i] = G
        cs[i] = c
    x = _target_row(designer, stats, d, h)
    try:
        B = np.linalg.solve(Gs, cs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        return float(np.mean([forecast_win(designer, stats, d, h, w) for w in ws]))
    return float(np.mean(B @ x))


def forecast_arhnn_k(designer: Designer, stats, d: int, h: int, k: int, calib_len: int) -> float:
    """OLS forecast from the k nearest calibration days in similarity space.

    With ``k == calib_len`` the selection degenerates to the full window and
    the result is identical to ``forecast_win(calib_len)``.
    """
    days = _window_days(d, calib_len)
    S = designer.sim_block(days, h, stats)
    target = designer.similarity(d, h, stats)
    dist = euclidean_distances(target, S)
    sel = knn_select(dist, min(int(k), len(days)))
    X, y = designer.design(days[sel], h, stats)
    b = ols_fit(X, y)
    return float(_target_row(designer, stats, d, h) @ b)


def forecast_wls(designer: Designer, stats, d: int, h: int, calib_len: int, eps: float = WEIGHT_EPS) -> float:
    """Weighted least-squares forecast with normalized inverse-distance weights."""
    days = _window_days(d, calib_len)
    S = designer.sim_block(days, h, stats)
    target = designer.similarity(d, h, stats)
    dist = euclidean_distances(target, S)
    w = inv_dist_weights(dist, eps)
    X, y = designer.design(days, h, stats)
    b = wls_fit(X, y, w)
    return float(_target_row(designer, stats, d, h) @ b)


def _grid_bounds(k_grid, n_candidates: int) -> np.ndarray:
    grid = np.asarray(k_grid, dtype=np.intp)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("empty k grid")
    if (np.diff(grid) <= 0).any():
        grid = np.unique(grid)
    return np.minimum(grid, n_candidates), grid


def _prefix_solve(Xs: np.ndarray, ys: np.ndarray, bounds: np.ndarray):
    """Cumulative-Gram coefficient vectors at each candidate-count bound.

    ``Xs``/``ys`` are distance-sorted (nearest first). Returns an array of
    shape (len(bounds), p). Falls back to per-bound least squares when a Gram
    matrix is numerically singular.
    """
    p = Xs.shape[1]
    nb = len(bounds)
    G = np.zeros((p, p))
    c = np.zeros(p)
    Gs = np.empty((nb, p, p))
    cs = np.empty((nb, p))
    lo = 0
    for i, b in enumerate(bounds):
        if b > lo:
            seg = Xs[lo:b]
            G += seg.T @ seg
            c += seg.T @ ys[lo:b]
            lo = b
        Gs[i] = G
        cs[i] = c
    try:
        return np.linalg.solve(Gs, cs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        out = np.empty((nb, p))
        for i, b in enumerate(bounds):
            out[i] = np.linalg.lstsq(Xs[:b], ys[:b], rcond=None)[0]
        return out


def _order_later_first(dist: np.ndarray) -> np.ndarray:
    """Positions sorted by distance ascending, later candidates first on ties."""
    n = dist.shape[-1]
    if dist.ndim == 1:
        return np.lexsort((-np.arange(n), dist))
    rev = np.argsort(dist[:, ::-1], axis=1, kind="stable")
    return n - 1 - rev


def validate_k(
    designer: Designer,
    stats,
    d: int,
    h: int,
    k_grid,
    validation_len: int,
    calib_len: int,
) -> list[KSelectionRecord]:
    """Best k per validation observation at hour h, for the target day d.

    Every observation T in the ``validation_len`` days before ``d`` is
    forecast with each grid value of k from its own ``calib_len``-day
    candidate window, and the absolute-error-minimizing k is recorded (ties go
    to the smaller k). Candidate windows that would reach into the first 7
    panel days (no lag history) are truncated, and grid values larger than the
    candidate count are capped; this only happens for the earliest admissible
    test days.
    """
    if validation_len < 1:
        raise ValueError("validation_len must be >= 1")
    T_days = np.arange(d - validation_len, d)
    if T_days[0] - calib_len < 0 or T_days[0] < MIN_TARGET_DAY:
        raise InsufficientHistoryError(
            f"validation window reaching day {int(T_days[0])} needs {calib_len} prior days"
        )
    base = d - validation_len - calib_len
    if base >= MIN_TARGET_DAY:
        return _validate_k_batched(designer, stats, T_days, h, k_grid, calib_len, base)
    return _validate_k_truncated(designer, stats, T_days, h, k_grid, calib_len)


def _validate_k_batched(designer, stats, T_days, h, k_grid, calib_len, base) -> list[KSelectionRecord]:
    d_end = int(T_days[-1]) + 1
    days_all = np.arange(base, d_end)
    X_all, y_all = designer.design(days_all, h, stats)
    S_all = designer.sim_block(days_all, h, stats)
    p = X_all.shape[1]
    W = calib_len
    bounds, grid = _grid_bounds(k_grid, W)
    nk = len(grid)
    arange_w = np.arange(W)

    records: list[KSelectionRecord] = []
    for c0 in range(0, len(T_days), _T_CHUNK):
        chunk = T_days[c0 : c0 + _T_CHUNK]
        nT = len(chunk)
        offs = (chunk - base).astype(np.intp)
        lows = offs - W
        order = _order_later_first(
            np.sqrt(((S_all[lows[:, None] + arange_w] - S_all[offs][:, None, :]) ** 2).sum(-1))
        )
        gr = lows[:, None] + order
        Xs = X_all[gr]                      # (nT, W, p)
        ys = y_all[gr]                      # (nT, W)
        G = np.zeros((nT, p, p))
        c = np.zeros((nT, p))
        Gs = np.empty((nT, nk, p, p))
        cs = np.empty((nT, nk, p))
        lo = 0
        for i, b in enumerate(bounds):
            if b > lo:
                seg = Xs[:, lo:b, :]
                G += seg.transpose(0, 2, 1) @ seg
                c += (seg.transpose(0, 2, 1) @ ys[:, lo:b, None])[:, :, 0]
                lo = b
            Gs[:, i] = G
            cs[:, i] = c
        try:
            B = np.linalg.solve(Gs.reshape(-1, p, p), cs.reshape(-1, p, 1)).reshape(nT, nk, p)
        except np.linalg.LinAlgError:
            for T in chunk:
                records.extend(
                    _validate_k_truncated(designer, stats, np.array([T]), h, k_grid, calib_len)
                )
            continue
        preds = np.einsum("tkp,tp->tk", B, X_all[offs])
        errs = np.abs(preds - y_all[offs][:, None])
        best = np.argmin(errs, axis=1)  # first minimum = smallest k (grid ascending)
        for t in range(nT):
            records.append(
                KSelectionRecord(
                    day=int(chunk[t]), hour=h, k=int(grid[best[t]]), abs_error=float(errs[t, best[t]])
                )
            )
    return records


def _validate_k_truncated(designer, stats, T_days, h, k_grid, calib_len) -> list[KSelectionRecord]:
    records: list[KSelectionRecord] = []
    for T in T_days:
        T = int(T)
        lo_day = max(MIN_TARGET_DAY, T - calib_len)
        cand = np.arange(lo_day, T)
        if len(cand) == 0:
            raise InsufficientHistoryError(f"no usable candidate days before day {T}")
        Xc, yc = designer.design(cand, h, stats)
        Sc = designer.sim_block(cand, h, stats)
        sT = designer.similarity(T, h, stats)
        dist = euclidean_distances(sT, Sc)
        order = _order_later_first(dist)
        bounds, grid = _grid_bounds(k_grid, len(cand))
        B = _prefix_solve(Xc[order], yc[order], bounds)
        xT, yT = designer.row(T, h, stats)
        errs = np.abs(B @ xT - yT)
        best = int(np.argmin(errs))
        records.append(KSelectionRecord(day=T, hour=h, k=int(grid[best]), abs_error=float(errs[best])))
    return records


def forecast_arhnn(
    designer: Designer,
    stats,
    d: int,
    h: int,
    k_grid,
    validation_len: int,
    calib_len: int,
) -> float:
    """Validation-voted, multiplicity-weighted mean of nearest-neighbor forecasts."""
    records = validate_k(designer, stats, d, h, k_grid, validation_len, calib_len)
    counts = Counter(r.k for r in records)
    total = sum(counts.values())
    acc = 0.0
    for k in sorted(counts):  # deterministic reduction order
        acc += counts[k] * forecast_arhnn_k(designer, stats, d, h, k, calib_len)
    return float(acc / total)


def forecast_cell(designer: Designer, stats, split, cfg: MethodConfig, d: int, h: int) -> float:
    """Dispatch one (day, hour) forecast for a configured method."""
    if cfg.method == "win":
        return forecast_win(designer, stats, d, h, cfg.window)
    if cfg.method == "avg":
        return forecast_avg(designer, stats, d, h, cfg.windows)
    if cfg.method == "arhnn_k":
        return forecast_arhnn_k(designer, stats, d, h, cfg.k, split.calibration_len)
    if cfg.method == "arhnn":
        v = cfg.validation_len if cfg.validation_len is not None else split.validation_len
        return forecast_arhnn(designer, stats, d, h, cfg.k_grid, v, split.calibration_len)
    if cfg.method == "wls":
        return forecast_wls(designer, stats, d, h, split.calibration_len)
    raise ConfigError(f"unknown method '{cfg.method}'")
