"""Published hyperparameter reference: tuning value ranges and the final
per-task configurations (both datasets, both horizons, grid and
hierarchical/substation levels). The TFT rows carry no learning rate; the
package default (1e-3) applies there.
"""

TFT_SEARCH_SPACE = {
    "attention_heads": [1, 4],
    "hidden_size": [16, 32, 64],
    "dropout": [0.1, 0.3],
    "batch_size": [32, 128],
    "lstm_layers": [1, 2, 4],
}

LSTM_SEARCH_SPACE = {
    "batch_size": [50, 10, 120, 150],
    "learning_rate": [0.001, 0.01, 0.1],
    "dropout": [0.1, 0.2, 0.3],
    "num_layers": [1, 2, 4],
    "hidden_size": [64, 128, 248, 496],
}

DAY_INPUT_WINDOWS = [24, 48, 72, 168, 336, 672]
WEEK_INPUT_WINDOWS = [168, 336, 504, 672]


def _tft(heads, hidden, layers, window, dropout, batch):
    return {"attention_heads": heads, "hidden_size": hidden,
            "lstm_layers": layers, "input_window": window,
            "dropout": dropout, "batch_size": batch}


def _lstm(hidden, layers, window, dropout, batch, lr):
    return {"hidden_size": hidden, "num_layers": layers,
            "input_window": window, "dropout": dropout,
            "batch_size": batch, "learning_rate": lr}


# keyed by (level, features, horizon, dataset); None where the source
# reports no configuration for that model
REFERENCE_CONFIGS = {
    ("grid", "calendar", "day", "DE"): {
        "tft": _tft(1, 64, 2, 24, 0.1, 32),
        "lstm": _lstm(64, 2, 48, 0.2, 10, 0.01),
    },
    ("grid", "calendar", "week", "DE"): {
        "tft": _tft(1, 64, 4, 504, 0.1, 32),
        "lstm": _lstm(64, 4, 336, 0.1, 10, 0.001),
    },
    ("grid", "calendar", "day", "US"): {
        "tft": _tft(1, 64, 2, 336, 0.3, 32),
        "lstm": _lstm(496, 1, 48, 0.2, 10, 0.001),
    },
    ("grid", "calendar", "week", "US"): {
        "tft": _tft(1, 64, 2, 336, 0.1, 32),
        "lstm": _lstm(248, 1, 504, 0.2, 10, 0.001),
    },
    ("grid", "weather_calendar", "day", "DE"): {
        "tft": _tft(4, 64, 2, 672, 0.3, 32),
        "lstm": _lstm(64, 4, 168, 0.1, 10, 0.01),
    },
    ("grid", "weather_calendar", "week", "DE"): {
        "tft": _tft(4, 64, 4, 672, 0.1, 32),
        "lstm": _lstm(128, 1, 504, 0.3, 10, 0.01),
    },
    ("grid", "weather_calendar", "day", "US"): {
        "tft": _tft(4, 64, 2, 168, 0.1, 32),
        "lstm": _lstm(128, 1, 168, 0.2, 10, 0.01),
    },
    ("grid", "weather_calendar", "week", "US"): {
        "tft": _tft(1, 64, 4, 168, 0.1, 32),
        "lstm": _lstm(64, 1, 672, 0.2, 10, 0.01),
    },
    ("grid", "weather_calendar_epidemic", "day", "DE"): {
        "tft": _tft(4, 32, 1, 48, 0.1, 32),
        "lstm": None,
    },
    ("grid", "weather_calendar_epidemic", "week", "DE"): {
        "tft": _tft(4, 64, 2, 168, 0.1, 32),
        "lstm": None,
    },
    ("hierarchical", "weather_calendar", "day", "DE"): {
        "tft": _tft(1, 32, 1, 336, 0.1, 128),
        "lstm": _lstm(128, 2, 72, 0.2, 120, 0.01),
    },
    ("hierarchical", "weather_calendar", "week", "DE"): {
        "tft": _tft(4, 64, 2, 168, 0.1, 128),
        "lstm": _lstm(248, 4, 672, 0.3, 10, 0.001),
    },
    ("hierarchical", "weather_calendar", "day", "US"): {
        "tft": _tft(4, 64, 2, 72, 0.1, 31),
        "lstm": _lstm(128, 2, 48, 0.1, 10, 0.001),
    },
    ("hierarchical", "weather_calendar", "week", "US"): {
        "tft": _tft(1, 16, 1, 672, 0.3, 32),
        "lstm": _lstm(64, 2, 168, 0.1, 50, 0.001),
    },
    ("hierarchical", "weather_calendar_epidemic", "day", "DE"): {
        "tft": _tft(4, 64, 2, 336, 0.3, 32),
        "lstm": None,
    },
    ("hierarchical", "weather_calendar_epidemic", "week", "DE"): {
        "tft": _tft(4, 32, 2, 336, 0.1, 32),
        "lstm": None,
    },
}
