"""Streaming anomaly detection with a recursive generalized ESD test."""

from .decompose import DecompositionModel, ForecastSeries, decompose, estimate_period, forecast
from .detector import AnomalyRecord, Detector, DetectorConfig, initialize, run_stream
from .esd import EsdConfig, EsdFlag, EsdOutcome, critical_value, grubbs_single, run_esd
from .evaluation import EvalReport, LabelSet, score
from .exceptions import (
    HorizonExhaustedError,
    InvalidConfigError,
    InvalidInputError,
    InvalidValueError,
    InvalidWindowError,
    ResdError,
)
from .shesd import ShesdConfig, shesd_detect
from .window import ResidualBuffer, WindowStats, init_stats, slide

__version__ = "0.1.0"
