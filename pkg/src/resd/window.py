"""Rolling mean and centred sum of squares over a fixed-length window.

The window is initialised once in O(w) and then advanced one observation at a
time in O(1) by replacing the oldest value with the newest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidValueError, InvalidWindowError


@dataclass(frozen=True, slots=True)
class WindowStats:
    """Mean and centred sum of squares of a window of ``size`` values."""

    size: int
    mean: float
    sum_sq: float

    @property
    def variance(self) -> float:
        """Sample variance (``n - 1`` denominator)."""
        return self.sum_sq / (self.size - 1)


def init_stats(values) -> WindowStats:
    """Compute window statistics from scratch.

    Uses a corrected two-pass scheme: the second pass subtracts the residual
    drift ``(sum d)^2 / n`` left over from rounding the mean.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidWindowError(f"window needs at least 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidValueError("window contains NaN or infinite values")
    n = x.size
    mean = float(np.sum(x) / n)
    d = x - mean
    sum_sq = float(d @ d) - float(np.sum(d)) ** 2 / n
    mean += float(np.sum(d)) / n
    return WindowStats(n, mean, max(sum_sq, 0.0))


def slide(stats: WindowStats, x_out: float, x_in: float) -> WindowStats:
    """Replace ``x_out`` (the oldest value) by ``x_in`` and update in O(1)."""
    delta = x_in - x_out
    w = stats.size
    sum_sq = stats.sum_sq + delta * (x_in + x_out - 2.0 * stats.mean - delta / w)
    mean = stats.mean + delta / w
    return WindowStats(w, mean, sum_sq if sum_sq > 0.0 else 0.0)


class ResidualBuffer:
    """Ring buffer of the ``capacity`` most recent residuals and their stats.

    Physical slots are reused in place; :meth:`ordered` returns the contents
    oldest-to-newest and :meth:`slots` the matching physical indices so
    callers can keep parallel per-slot arrays.

    Parameters
    ----------
    residuals : array_like
        Initial contents, oldest first. Its length fixes the capacity.
    timestamps : sequence, optional
        Timestamps aligned with ``residuals``.
    reanchor_every : int, optional
        Recompute the statistics from scratch every this many slides to bound
        floating-point drift. ``None`` disables re-anchoring.
    """

    def __init__(self, residuals, timestamps=None, reanchor_every: int | None = None):
        data = np.array(residuals, dtype=np.float64)
        self.stats = init_stats(data)
        self.capacity = data.size
        self._data = data
        self._ts = list(timestamps) if timestamps is not None else [None] * data.size
        if len(self._ts) != data.size:
            raise InvalidWindowError("timestamps and residuals differ in length")
        self._head = 0  # physical slot of the oldest element
        if reanchor_every is not None and reanchor_every < 1:
            raise InvalidWindowError("reanchor_every must be positive")
        self.reanchor_every = reanchor_every
        self._since_anchor = 0

    def __len__(self) -> int:
        return self.capacity

    @property
    def oldest(self) -> float:
        return float(self._data[self._head])

    def push(self, residual: float, timestamp=None) -> int:
        """Drop the oldest residual, append ``residual``; return its slot."""
        if not math.isfinite(residual):
            raise InvalidValueError(f"non-finite residual {residual!r}")
        slot = self._head
        self.stats = slide(self.stats, float(self._data[slot]), residual)
        self._data[slot] = residual
        self._ts[slot] = timestamp
        self._head = (slot + 1) % self.capacity
        if self.reanchor_every is not None:
            self._since_anchor += 1
            if self._since_anchor >= self.reanchor_every:
                self.reanchor()
        return slot

    def reanchor(self) -> None:
        self.stats = init_stats(self._data)
        self._since_anchor = 0

    def ordered(self) -> np.ndarray:
        """Residuals oldest-to-newest (a copy)."""
        h = self._head
        if h == 0:
            return self._data.copy()
        return np.concatenate((self._data[h:], self._data[:h]))

    def slots(self) -> np.ndarray:
        """Physical slot indices oldest-to-newest."""
        return (np.arange(self.capacity) + self._head) % self.capacity

    def timestamps(self) -> list:
        h = self._head
        return self._ts[h:] + self._ts[:h]
