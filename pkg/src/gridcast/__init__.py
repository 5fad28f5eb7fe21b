"""Hierarchical short-term electricity load forecasting.

Substation-level forecasters (TFT, LSTM, ARIMA, seasonal naive) with
bottom-up aggregation to grid level, backtested over complete-day and
complete-week windows with RMSE/MAPE/SMAPE reporting and Welch-test
comparison.
"""

__version__ = "0.1.0"
