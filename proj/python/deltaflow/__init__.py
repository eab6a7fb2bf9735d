"""Multivariate probabilistic forecasting of the hourly gap between intraday
and day-ahead electricity prices, backed by the C++ core."""

import json as _json

try:
    from ._core import (
        Dataset,
        Forecast,
        Model,
        energy_score,
        evaluate_json,
        explain,
        feature_groups,
        forecast,
        format_time,
        generate,
        load_data,
        load_forecast_csv,
        load_model,
        model_tags,
        parse_time,
        save_forecast_csv,
        train,
        variogram_score,
        winkler_score,
    )
except ImportError:  # build-tree layout: _core sits next to the package on sys.path
    from _core import (
        Dataset,
        Forecast,
        Model,
        energy_score,
        evaluate_json,
        explain,
        feature_groups,
        forecast,
        format_time,
        generate,
        load_data,
        load_forecast_csv,
        load_model,
        model_tags,
        parse_time,
        save_forecast_csv,
        train,
        variogram_score,
        winkler_score,
    )

__version__ = "0.1.0"


def evaluate(dataset, forecasts, gamma=0.5, vs_scaled=True, levels=(0.5, 0.9)):
    """Score forecasts against the dataset's realized prices.

    Returns a dict with per-metric five-number summaries (energy, variogram,
    winkler per level) and central-interval coverage.
    """
    return _json.loads(evaluate_json(dataset, forecasts, gamma, vs_scaled, list(levels)))


__all__ = [
    "Dataset",
    "Forecast",
    "Model",
    "energy_score",
    "evaluate",
    "evaluate_json",
    "explain",
    "feature_groups",
    "forecast",
    "format_time",
    "generate",
    "load_data",
    "load_forecast_csv",
    "load_model",
    "model_tags",
    "parse_time",
    "save_forecast_csv",
    "train",
    "variogram_score",
    "winkler_score",
]
