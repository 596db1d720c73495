"""Exception types shared across the toolkit."""


class ArxselError(Exception):
    """Base class for all toolkit errors."""


class PanelSchemaError(ArxselError):
    """CSV does not match the documented panel schema (column-level problem)."""


class PanelDataError(ArxselError):
    """CSV matches the schema but carries bad data (gaps, bad values, bad day structure)."""


class ConstantSeriesError(ArxselError):
    """A series required as a regressor has zero variance over the fit range."""

    def __init__(self, series: str, message: str | None = None):
        self.series = series
        super().__init__(message or f"series '{series}' is constant over the requested range")


class InsufficientHistoryError(ArxselError):
    """Not enough prior days to build the requested window or lag."""


class SingularDesignError(ArxselError):
    """Design matrix is rank deficient beyond the condition limit."""

    def __init__(self, rank: int, n_cols: int, dependent_columns):
        self.rank = rank
        self.n_cols = n_cols
        self.dependent_columns = list(dependent_columns)
        super().__init__(
            f"singular design matrix: rank {rank} < {n_cols} columns; "
            f"dependent columns {self.dependent_columns}"
        )


class ConfigError(ArxselError):
    """Invalid run configuration (rejected before any computation)."""


class ForecastError(ArxselError):
    """A forecast failed inside a backtest; carries (method, day, hour) context."""

    def __init__(self, method: str, date, hour: int, cause: Exception):
        self.method = method
        self.date = date
        self.hour = hour
        self.cause = cause
        super().__init__(f"forecast failed for method={method}, day={date}, hour={hour + 1}: {cause}")
