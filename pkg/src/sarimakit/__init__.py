"""Seasonal ARIMA estimation by exact maximum likelihood, with forecasting,
residual diagnostics, order search and counterfactual impact measurement."""

__version__ = "0.1.0"

from .counterfactual import ImpactReport, impact, impact_summary_table
from .diagnostics import ResidualReport, acf, adf_test, box_pierce, ks_normality, ljung_box, pacf, residual_report
from .errors import DataError, NumericalError, SarimaError
from .estimation import FitConfig, FitResult, fit
from .forecasting import Forecast, forecast
from .kernel import ModelOrder, ParamVector, loglik, simulate
from .metrics import AccuracyReport, accuracy
from .search import Leaderboard, SearchConfig, SearchSpace, grid_search, select_final
from .series import DataSplits, MonthStamp, TimeSeries, difference, integrate, split

__all__ = [
    "AccuracyReport", "DataError", "DataSplits", "FitConfig", "FitResult", "Forecast", "ImpactReport",
    "Leaderboard", "ModelOrder", "MonthStamp", "NumericalError", "ParamVector", "ResidualReport",
    "SarimaError", "SearchConfig", "SearchSpace", "TimeSeries", "accuracy", "acf", "adf_test",
    "box_pierce", "difference", "fit", "forecast", "grid_search", "impact", "impact_summary_table",
    "integrate", "ks_normality", "ljung_box", "loglik", "pacf", "residual_report", "select_final",
    "simulate", "split",
]
