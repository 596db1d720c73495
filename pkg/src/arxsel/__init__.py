"""Calibration-sample selection, forecast combination and trading evaluation
for day-ahead hourly electricity prices."""

from .backtest import ForecastRun, k_sweep, rmse_by_year, rmse_total, run_backtest
from .errors import (
    ArxselError,
    ConfigError,
    ConstantSeriesError,
    ForecastError,
    InsufficientHistoryError,
    PanelDataError,
    PanelSchemaError,
    SingularDesignError,
)
from .estimators import euclidean_distances, inv_dist_weights, knn_select, ols_fit, wls_fit
from .features import Designer, ModelSpec, build_design, build_row, build_similarity
from .methods import (
    AVG6_WINDOWS,
    AVG_ALL_WINDOWS,
    DEFAULT_K_GRID,
    KSelectionRecord,
    MethodConfig,
    forecast_arhnn,
    forecast_arhnn_k,
    forecast_avg,
    forecast_cell,
    forecast_wls,
    forecast_win,
    validate_k,
)
from .panel import (
    HourlyPanel,
    NormStats,
    SplitGeometry,
    derive_residual_load,
    fit_norm_stats,
    load_panel,
    make_split,
    save_panel,
)
from .synth import SynthConfig, generate_panel, write_synthetic
from .trading import (
    EconRow,
    StrategyParams,
    TradeDecision,
    TradeLedger,
    build_ledger,
    choose_pair,
    crystal_ball,
    crystal_ledger,
    decide,
    econ_report,
    realize,
)

__version__ = "0.1.0"
