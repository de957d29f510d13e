"""Streaming R-ESD detector.

Initial phase: fit a seasonal-trend model to the last ``train_window``
observations, forecast ahead, and seed a residual window of length ``window``
with the last training residuals. Streaming phase: each new observation
contributes its forecast error to the window (O(1) statistic update) and the
recursive ESD test runs over the window.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .decompose import TREND_METHODS, DecompositionModel, decompose, estimate_period, forecast
from .esd import ESD_MODES, ZERO_VARIANCE, EsdConfig, run_esd
from .exceptions import (
    HorizonExhaustedError,
    InvalidConfigError,
    InvalidInputError,
    InvalidValueError,
)
from .window import ResidualBuffer

#: Residual windows whose RMS is below this fraction of the training data's
#: magnitude are treated as zero variance (rounding noise, not signal).
RELATIVE_VARIANCE_FLOOR = 1e-9


def default_windows(n: int) -> tuple[int, int]:
    """Training and streaming window lengths (10% and 2% of ``n``)."""
    return math.ceil(0.10 * n), math.ceil(0.02 * n)


@dataclass
class DetectorConfig:
    train_window: int
    window: int
    k: int
    alpha: float = 0.05
    period: int | None = None
    max_period: int | None = None
    refit_interval: int = 0
    dedupe: bool = True
    esd_mode: str = "early-stop"
    horizon: int | None = None
    trend: str = "classical"
    loess_span: float = 0.3
    reanchor_every: int | None = None

    def __post_init__(self):
        self.validate()

    @classmethod
    def for_length(cls, n: int, k: int | None = None, **kw) -> "DetectorConfig":
        """Fill unset window lengths from a known series length ``n``."""
        tw, w = default_windows(n)
        kw.setdefault("train_window", tw)
        kw.setdefault("window", w)
        if k is None:
            k = max(1, math.ceil(0.02 * kw["window"]))
        return cls(k=k, **kw)

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidConfigError(f"k must be at least 1, got {self.k}")
        if self.window < self.k + 3:
            raise InvalidConfigError(
                f"window ({self.window}) must be at least k + 3 ({self.k + 3})"
            )
        if self.train_window < self.window:
            raise InvalidConfigError(
                f"train_window ({self.train_window}) must be at least window ({self.window})"
            )
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.period is not None:
            if self.period < 1:
                raise InvalidConfigError(f"period must be positive, got {self.period}")
            if self.train_window < 2 * self.period:
                raise InvalidConfigError(
                    f"period {self.period} needs train_window >= {2 * self.period}"
                )
        if self.refit_interval < 0:
            raise InvalidConfigError("refit_interval must be non-negative")
        if self.horizon is not None and self.horizon < 1:
            raise InvalidConfigError("horizon must be positive")
        if self.esd_mode not in ESD_MODES:
            raise InvalidConfigError(f"unknown esd_mode {self.esd_mode!r}")
        if self.trend not in TREND_METHODS:
            raise InvalidConfigError(f"unknown trend method {self.trend!r}")
        if not 0.0 < self.loess_span <= 1.0:
            raise InvalidConfigError("loess_span must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class AnomalyRecord:
    ts: object
    value: float
    forecast: float
    residual: float
    stat: float
    crit: float
    window_end: object

    def to_dict(self) -> dict:
        return {
            "ts": self.ts,
            "value": self.value,
            "forecast": self.forecast,
            "residual": self.residual,
            "stat": self.stat,
            "crit": self.crit,
            "window_end": self.window_end,
        }


@dataclass
class _Obs:
    ts: object
    value: float
    forecast: float
    flagged: bool = False


class Detector:
    """Mutable detector state for one series. Build with :func:`initialize`."""

    def __init__(self, cfg: DetectorConfig, train, timestamps):
        self.cfg = cfg
        self._esd = EsdConfig(alpha=cfg.alpha, k_max=cfg.k, mode=cfg.esd_mode)
        train = np.asarray(train, dtype=np.float64)
        scale = float(np.max(np.abs(train))) if train.size else 0.0
        self.min_sum_sq = max(
            ZERO_VARIANCE, cfg.window * (RELATIVE_VARIANCE_FLOOR * scale) ** 2
        )
        w = cfg.window
        self._ts = [None] * w
        self._value = np.zeros(w)
        self._forecast = np.zeros(w)
        self._reported = np.zeros(w, dtype=bool)
        self._recent: deque[_Obs] = deque(maxlen=cfg.train_window)
        self.steps = 0
        self.refits = 0
        self._fit(train, list(timestamps), reported=None)
        for t, x, f in zip(timestamps, train, self.model.fitted):
            self._recent.append(_Obs(t, float(x), float(f)))

    def _fit(self, train: np.ndarray, timestamps: list, reported) -> None:
        cfg = self.cfg
        period = cfg.period
        if period is None:
            period = estimate_period(train, cfg.max_period or cfg.train_window // 2)
        self.model: DecompositionModel = decompose(
            train, period, trend=cfg.trend, loess_span=cfg.loess_span
        )
        horizon = cfg.horizon or 10 * cfg.window
        horizon = max(horizon, cfg.refit_interval)
        self.forecasts = forecast(self.model, horizon, origin=timestamps[-1]).values
        self._cursor = 0

        w = cfg.window
        self.buffer = ResidualBuffer(
            self.model.residuals[-w:], timestamps[-w:], reanchor_every=cfg.reanchor_every
        )
        # buffer head is 0 after construction: logical index == slot
        self._ts[:] = timestamps[-w:]
        self._value[:] = train[-w:]
        self._forecast[:] = self.model.fitted[-w:]
        self._reported[:] = False if reported is None else reported

    @property
    def period(self) -> int | None:
        return self.model.period

    @property
    def stats(self):
        return self.buffer.stats

    @property
    def remaining_horizon(self) -> int:
        return self.forecasts.size - self._cursor

    def window_residuals(self) -> np.ndarray:
        return self.buffer.ordered()

    def window_timestamps(self) -> list:
        return self.buffer.timestamps()

    def step(self, x: float, ts=None) -> list[AnomalyRecord]:
        """Consume one observation and return newly flagged anomalies."""
        x = float(x)
        if not math.isfinite(x):
            raise InvalidValueError(f"non-finite observation {x!r} at {ts!r}")
        if self._cursor >= self.forecasts.size:
            raise HorizonExhaustedError(
                f"forecast horizon of {self.forecasts.size} steps exhausted at {ts!r}; "
                "increase the horizon or set a refit interval"
            )
        f = float(self.forecasts[self._cursor])
        self._cursor += 1
        resid = x - f
        slot = self.buffer.push(resid, ts)
        self._ts[slot] = ts
        self._value[slot] = x
        self._forecast[slot] = f
        self._reported[slot] = False
        self._recent.append(_Obs(ts, x, f))
        self.last_forecast = f
        self.last_residual = resid

        outcome = run_esd(self.buffer.ordered(), self.buffer.stats, self._esd, self.min_sum_sq)
        records = []
        if outcome.flagged:
            slots = self.buffer.slots()
            w = self.cfg.window
            n_recent = len(self._recent)
            for fl in outcome.flagged:
                s = int(slots[fl.index])
                if self.cfg.dedupe and self._reported[s]:
                    continue
                self._reported[s] = True
                self._recent[n_recent - w + fl.index].flagged = True
                records.append(AnomalyRecord(
                    ts=self._ts[s],
                    value=float(self._value[s]),
                    forecast=float(self._forecast[s]),
                    residual=fl.value,
                    stat=fl.statistic,
                    crit=fl.critical,
                    window_end=ts,
                ))
        self.steps += 1
        if self.cfg.refit_interval and self.steps % self.cfg.refit_interval == 0:
            self.refit()
        return records

    def refit(self) -> None:
        """Re-run the initial phase on the trailing observations.

        Values already flagged are replaced by the forecasts they were scored
        against, so the training window stays anomaly-free.
        """
        recent = list(self._recent)
        train = np.array([o.forecast if o.flagged else o.value for o in recent])
        timestamps = [o.ts for o in recent]
        w = self.cfg.window
        reported = self._reported[self.buffer.slots()].copy()
        values = np.array([o.value for o in recent[-w:]])
        self._fit(train, timestamps, reported=reported)
        self._value[:] = values
        for o, f in zip(recent, self.model.fitted):
            o.forecast = float(f)
        self.refits += 1


def initialize(history, cfg: DetectorConfig, timestamps=None) -> Detector:
    """Run the initial phase on the last ``cfg.train_window`` points of ``history``."""
    x = np.asarray(history, dtype=np.float64)
    if x.ndim != 1 or x.size < cfg.train_window:
        raise InvalidInputError(
            f"need at least {cfg.train_window} observations of history, got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidValueError("history contains NaN or infinite values")
    if timestamps is None:
        timestamps = list(range(x.size))
    elif len(timestamps) != x.size:
        raise InvalidInputError("timestamps and history differ in length")
    tw = cfg.train_window
    return Detector(cfg, x[-tw:], list(timestamps)[-tw:])


def run_stream(source: Iterable, cfg: DetectorConfig) -> Iterator[AnomalyRecord]:
    """Detect anomalies in a stream of ``(timestamp, value)`` pairs.

    The first ``cfg.train_window`` pairs train the model; every later pair is
    stepped and its anomalies yielded before the next pair is pulled.
    """
    it = iter(source)
    ts_hist, x_hist = [], []
    for ts, x in it:
        ts_hist.append(ts)
        x_hist.append(x)
        if len(x_hist) == cfg.train_window:
            break
    det = initialize(x_hist, cfg, ts_hist)
    del ts_hist, x_hist
    for ts, x in it:
        yield from det.step(x, ts)
