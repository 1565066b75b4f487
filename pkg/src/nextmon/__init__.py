"""Online multi-timescale prediction of raw sensor signals ("nexting").

Tile-coded features feed a bank of linear TD(lambda) learners, one per
prediction timescale, demonstrated on a simulated thermally-modeled building
with a hysteresis heater and hourly weather input. A batch harness
reproduces the experiments; a live service streams telemetry to a browser
dashboard for a human operator.
"""

from .features import CoderConfig, DimensionSpec, FeatureVector, HistoryCoder, TilingGroupSpec, encode
from .nexting import HorizonSpec, PredictionRecord, PredictorBank, gamma_from_tau
from .oracle import ReturnSeries, ideal_prediction, rmse

__all__ = [
    "CoderConfig",
    "DimensionSpec",
    "FeatureVector",
    "HistoryCoder",
    "HorizonSpec",
    "PredictionRecord",
    "PredictorBank",
    "ReturnSeries",
    "TilingGroupSpec",
    "encode",
    "gamma_from_tau",
    "ideal_prediction",
    "rmse",
]
