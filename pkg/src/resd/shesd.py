"""Seasonal Hybrid ESD baseline over non-overlapping windows.

Reimplementation for comparison purposes. Each window is deseasonalised with
the classical decomposition, its median is taken as a flat (stepwise) trend,
and observations are studentised by the median and MAD inside an ESD loop.
The trailing partial window is dropped. ``direction`` restricts the test to
upward (``pos``) or downward (``neg``) deviates; the published package
defaults to ``pos``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .decompose import decompose
from .detector import AnomalyRecord
from .esd import critical_value
from .exceptions import InvalidConfigError, InvalidInputError

MAD_SCALE = 1.4826
DIRECTIONS = ("both", "pos", "neg")
#: Scale factor turning a mean absolute deviation into a normal sigma.
MEAN_AD_SCALE = math.sqrt(math.pi / 2)


@dataclass(frozen=True)
class ShesdConfig:
    window: int
    period: int | None = None
    alpha: float = 0.05
    max_anoms: float = 0.02
    direction: str = "both"

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise InvalidConfigError(f"direction must be one of {DIRECTIONS}")
        if not 0.0 < self.max_anoms < 0.5:
            raise InvalidConfigError(f"max_anoms must lie in (0, 0.5), got {self.max_anoms}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.period is not None and self.period > 1 and self.window < 2 * self.period:
            # a single cycle leaves one observation per phase, which the
            # seasonal estimate would absorb completely
            raise InvalidConfigError(
                f"window ({self.window}) must hold at least two periods ({self.period})"
            )
        if self.window < self.k + 3:
            raise InvalidConfigError(f"window ({self.window}) too short for k={self.k}")

    @property
    def k(self) -> int:
        return max(1, math.ceil(self.max_anoms * self.window))


@dataclass
class ShesdWindow:
    start: int
    records: list[AnomalyRecord]
    zero_variance: bool = False


def _robust_scale(r: np.ndarray, centre: float) -> float:
    ad = np.abs(r - centre)
    mad = MAD_SCALE * float(np.median(ad))
    if mad > 0.0:
        return mad
    # MAD collapses when over half the values coincide; fall back to mean AD
    return MEAN_AD_SCALE * float(np.mean(ad))


def _seasonal(seg: np.ndarray, period: int | None) -> np.ndarray:
    if period is None or period <= 1:
        return np.zeros(seg.size)
    return decompose(seg, period).seasonal[np.arange(seg.size) % period]


def shesd_windows(x, cfg: ShesdConfig, timestamps=None) -> Iterator[ShesdWindow]:
    y = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("series contains NaN or infinite values")
    n_win = y.size // cfg.window
    if n_win < 1:
        raise InvalidInputError(
            f"series of length {y.size} is shorter than one window ({cfg.window})"
        )
    if timestamps is None:
        timestamps = range(y.size)
    L = cfg.window
    k = cfg.k
    # one-sided tests put the whole of alpha in one tail
    a_eff = cfg.alpha if cfg.direction == "both" else min(2.0 * cfg.alpha, 0.999)
    crit = [critical_value(L, l, a_eff) for l in range(k)]
    for w in range(n_win):
        a = w * L
        seg = y[a:a + L]
        expected = _seasonal(seg, cfg.period)
        expected = expected + float(np.median(seg - expected))
        resid = seg - expected

        alive = np.ones(L, dtype=bool)
        cands = []
        n_anoms = 0
        zero_var = False
        for i in range(k):
            r = resid[alive]
            centre = float(np.median(r))
            scale = _robust_scale(r, centre)
            if scale <= 0.0:
                zero_var = True
                break
            dev = resid - centre
            if cfg.direction == "both":
                dev = np.abs(dev)
            elif cfg.direction == "neg":
                dev = -dev
            dev[~alive] = -np.inf
            j = int(np.argmax(dev))
            stat = float(dev[j]) / scale
            if stat < 0.0:
                break
            cands.append((j, stat, crit[i]))
            alive[j] = False
            if stat > crit[i]:
                n_anoms = i + 1
        records = [
            AnomalyRecord(
                ts=timestamps[a + j],
                value=float(seg[j]),
                forecast=float(expected[j]),
                residual=float(resid[j]),
                stat=stat,
                crit=c,
                window_end=timestamps[a + L - 1],
            )
            for j, stat, c in sorted(cands[:n_anoms])
        ]
        yield ShesdWindow(a, records, zero_var)


def shesd_detect(x, cfg: ShesdConfig, timestamps=None) -> list[AnomalyRecord]:
    """Anomalies from every complete non-overlapping window, in time order."""
    out: list[AnomalyRecord] = []
    for win in shesd_windows(x, cfg, timestamps):
        out.extend(win.records)
    return out
