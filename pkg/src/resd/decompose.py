"""Additive seasonal-trend decomposition of a training window and forecasting.

The model is ``x_t = S_t + T_t + e_t``. The trend is a centred moving average
(or a LOESS smooth), the seasonal component is the per-phase mean of the
detrended series, and the residual is whatever is left. Forecasts extend the
seasonal pattern and extrapolate the trend linearly from its final period.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidConfigError, InvalidInputError

log = logging.getLogger(__name__)

#: Peak periodogram power must reach this multiple of the median power.
DOMINANCE_RATIO = 3.0
#: Training residuals beyond this many standard deviations trigger a warning.
TRAINING_OUTLIER_SIGMAS = 5.0

TREND_METHODS = ("classical", "loess")


def _ols_line(y: np.ndarray) -> tuple[float, float]:
    """Intercept and slope of the least-squares line through ``y`` on 0..n-1."""
    n = y.size
    if n == 1:
        return float(y[0]), 0.0
    t = np.arange(n, dtype=np.float64)
    tc = t - t.mean()
    slope = float(tc @ (y - y.mean()) / (tc @ tc))
    return float(y.mean() - slope * t.mean()), slope


def detrend_linear(x) -> np.ndarray:
    y = np.asarray(x, dtype=np.float64)
    a, b = _ols_line(y)
    return y - (a + b * np.arange(y.size))


def periodogram(x) -> tuple[np.ndarray, np.ndarray]:
    """Raw periodogram of ``x`` at Fourier bins ``k = 1 .. n // 2``.

    Returns ``(k, power)`` with ``power = |DFT_k|^2 / n``. No taper, no
    padding; the zero-frequency bin is omitted.
    """
    y = np.asarray(x, dtype=np.float64)
    coef = np.fft.rfft(y)
    k = np.arange(1, y.size // 2 + 1)
    return k, np.abs(coef[1:k.size + 1]) ** 2 / y.size


def estimate_period(x, max_period: int | None = None) -> int | None:
    """Dominant seasonal period in samples, or ``None`` if nothing stands out.

    The series is detrended by an OLS line first. Only periods in
    ``[2, max_period]`` compete; the winner must carry at least
    ``DOMINANCE_RATIO`` times the median periodogram power.
    """
    y = np.asarray(x, dtype=np.float64)
    n = y.size
    if max_period is None:
        max_period = n // 2
    if max_period < 2:
        raise InvalidInputError(f"max_period must be at least 2, got {max_period}")
    if n < 2 * max_period:
        raise InvalidInputError(
            f"series of length {n} is too short for max_period={max_period}"
        )
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("series contains NaN or infinite values")
    d = detrend_linear(y)
    scale = max(1.0, float(np.max(np.abs(y))))
    if float(np.std(d)) <= 1e-10 * scale:
        return None
    k, power = periodogram(d)
    eligible = (k * max_period >= n) & (2 * k <= n)
    if not eligible.any():
        return None
    cand = np.flatnonzero(eligible)
    best = cand[int(np.argmax(power[cand]))]
    if power[best] < DOMINANCE_RATIO * float(np.median(power)):
        return None
    return int(round(n / k[best]))


def _moving_average(y: np.ndarray, length: int) -> tuple[np.ndarray, int]:
    """Centred moving average; even lengths use the 2 x length weighting.

    Returns the interior values and the number of points lost at each end.
    """
    if length % 2:
        kernel = np.full(length, 1.0 / length)
    else:
        kernel = np.full(length + 1, 1.0 / length)
        kernel[0] = kernel[-1] = 0.5 / length
    half = kernel.size // 2
    return np.convolve(y, kernel, mode="valid"), half


def _extend_ends(interior: np.ndarray, half: int, span: int) -> np.ndarray:
    """Fill ``half`` points at each end by extrapolating edge OLS lines."""
    if half == 0:
        return interior.copy()
    span = max(2, min(span, interior.size))
    a, b = _ols_line(interior[:span])
    head = a + b * np.arange(-half, 0)
    a, b = _ols_line(interior[-span:])
    tail = a + b * np.arange(span, span + half)
    return np.concatenate((head, interior, tail))


@dataclass(frozen=True)
class DecompositionModel:
    """Fitted additive model of a training window.

    ``period`` is ``None`` for a trend-only model, in which case ``seasonal``
    is the single offset ``[0.0]``. ``trend_level`` and ``trend_slope`` drive
    the forecast; ``fitted + residuals`` reproduces the training data.
    """

    period: int | None
    seasonal: np.ndarray
    trend: np.ndarray
    residuals: np.ndarray
    trend_level: float
    trend_slope: float
    sigma2_hat: float

    @property
    def n_train(self) -> int:
        return self.residuals.size

    @property
    def fitted(self) -> np.ndarray:
        return self.trend + self.seasonal_at(np.arange(self.n_train))

    def seasonal_at(self, positions) -> np.ndarray:
        """Seasonal offsets at training-relative positions (may exceed n_train)."""
        p = self.seasonal.size
        return self.seasonal[np.asarray(positions) % p]


@dataclass(frozen=True)
class ForecastSeries:
    origin: object
    values: np.ndarray

    @property
    def horizon(self) -> int:
        return self.values.size


def decompose(x, period: int | None, trend: str = "classical",
              loess_span: float = 0.3, trend_window: int | None = None) -> DecompositionModel:
    """Fit the additive model to the training window ``x``.

    Parameters
    ----------
    x : array_like
        Training observations, oldest first.
    period : int or None
        Seasonal period in samples. ``None`` (or 1) fits a trend-only model.
    trend : {"classical", "loess"}
        Centred moving average, or a local-linear LOESS smooth.
    loess_span : float
        Fraction of the window used by each LOESS fit.
    trend_window : int, optional
        Moving-average length for trend-only models; defaults to a tenth of
        the window (at least 3).
    """
    y = np.asarray(x, dtype=np.float64)
    n = y.size
    if trend not in TREND_METHODS:
        raise InvalidConfigError(f"unknown trend method {trend!r}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("training window contains NaN or infinite values")
    if period is not None and period <= 1:
        period = None
    if period is not None and n < 2 * period:
        raise InvalidConfigError(
            f"training window of {n} points is shorter than twice the period {period}"
        )
    if period is None:
        ma_len = trend_window or max(3, n // 10)
        if n < 2 * ma_len:
            raise InvalidConfigError(f"training window of {n} points is too short")
    else:
        ma_len = period

    if trend == "loess":
        from statsmodels.nonparametric.smoothers_lowess import lowess

        t = np.arange(n, dtype=np.float64)
        tr = lowess(y, t, frac=loess_span, it=0, return_sorted=False)
        interior = np.ones(n, dtype=bool)
    else:
        inner, half = _moving_average(y, ma_len)
        tr = _extend_ends(inner, half, ma_len)
        interior = np.zeros(n, dtype=bool)
        interior[half:n - half] = True

    if period is None:
        seasonal = np.zeros(1)
    else:
        phase = np.arange(n) % period
        detr = y - tr
        sums = np.bincount(phase[interior], weights=detr[interior], minlength=period)
        counts = np.bincount(phase[interior], minlength=period)
        seasonal = sums / counts
        seasonal -= seasonal.mean()

    seas_full = seasonal[np.arange(n) % seasonal.size]
    resid = y - tr - seas_full
    # fold the residual level into the trend so the residuals are centred
    shift = resid.mean()
    tr = tr + shift
    resid = y - tr - seas_full

    span = max(2, min(ma_len, n))
    _, slope = _ols_line(tr[-span:])
    sigma2 = float(np.var(resid, ddof=1)) if n > 1 else 0.0
    if sigma2 > 0.0:
        worst = float(np.max(np.abs(resid)))
        if worst > TRAINING_OUTLIER_SIGMAS * np.sqrt(sigma2):
            log.warning(
                "training window residual of %.3g exceeds %g sigma; the training "
                "window is assumed anomaly-free", worst, TRAINING_OUTLIER_SIGMAS,
            )
    return DecompositionModel(
        period=period,
        seasonal=seasonal,
        trend=tr,
        residuals=resid,
        trend_level=float(tr[-1]),
        trend_slope=slope,
        sigma2_hat=sigma2,
    )


def forecast(model: DecompositionModel, horizon: int, origin=None) -> ForecastSeries:
    """Forecast ``horizon`` steps past the end of the training window."""
    if horizon <= 0:
        raise InvalidInputError(f"forecast horizon must be positive, got {horizon}")
    h = np.arange(1, horizon + 1)
    last = model.n_train - 1
    values = model.seasonal_at(last + h) + model.trend_level + model.trend_slope * h
    return ForecastSeries(origin, values)
