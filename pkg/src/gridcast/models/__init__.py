"""Forecasters: TFT, LSTM, ARIMA and the seasonal-naive baseline."""

from .arima import ArimaParameters, arima_fit, arima_forecast, fit_arima_values, forecast_values
from .baselines import seasonal_naive, seasonal_naive_values
from .common import (
    ArimaConfig,
    ForecastWindow,
    LSTMConfig,
    TFTConfig,
    TrainedModel,
    build_forecast_window,
    config_from_dict,
    config_to_dict,
)
from .io import config_hash, load_model, save_model
from .lstm import lstm_forecast, lstm_train
from .tft import tft_forecast, tft_train, tft_variable_importance

__all__ = [
    "ArimaConfig",
    "ArimaParameters",
    "ForecastWindow",
    "LSTMConfig",
    "TFTConfig",
    "TrainedModel",
    "arima_fit",
    "arima_forecast",
    "build_forecast_window",
    "config_from_dict",
    "config_hash",
    "config_to_dict",
    "fit_arima_values",
    "forecast_values",
    "load_model",
    "lstm_forecast",
    "lstm_train",
    "save_model",
    "seasonal_naive",
    "seasonal_naive_values",
    "tft_forecast",
    "tft_train",
    "tft_variable_importance",
]
