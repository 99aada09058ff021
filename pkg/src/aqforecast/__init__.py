"""Probabilistic air-quality forecasting with a small numpy autodiff engine."""

from .aggregation import PredictiveMixture, mix_moments, prediction_interval
from .autodiff import RngStream, Tensor, no_grad, parameter
from .data import SynthConfig, TimeSeriesFrame, WindowedDataset, build_windows, load_csv, synthesize
from .errors import (
    AqForecastError,
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    EmptyDatasetError,
    NumericDomainError,
    NumericError,
)
from .metrics import MetricReport, assemble_report
from .models import build_model, make_forecaster
from .training import TrainConfig, fit, train_ensemble, train_swag

__version__ = "0.1.0"
