"""Generalized ESD outlier test with recursive sum-of-squares reduction.

Each round removes the most extreme deviate from the sample. Rather than
recomputing the variance of the reduced sample, the centred sum of squares is
reduced in O(1)::

    S_new = S - m / (m - 1) * (x* - mean)^2

and the studentised deviate is recovered from the Grubbs ratio ``S_new / S``::

    R = sqrt((1 - S_new / S) * (m - 1)^2 / m)

which equals ``|x* - mean| / s`` with ``s^2 = S / (m - 1)``. Only the argmax
scan is O(m) per round. A removal that cancels almost the whole sum of
squares falls back to recomputing the survivors' statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats as _st

from .exceptions import InvalidConfigError, InvalidValueError
from .window import WindowStats, init_stats

#: Sums of squares at or below this are treated as zero variance.
ZERO_VARIANCE = 1e-300

ESD_MODES = ("early-stop", "rosner")

#: When one removal wipes out all but this fraction of the sum of squares the
#: subtraction has lost most of its significant digits; recompute instead.
CANCELLATION_RATIO = 1e-6


@dataclass(frozen=True)
class EsdConfig:
    alpha: float = 0.05
    k_max: int = 1
    mode: str = "early-stop"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k_max < 1:
            raise InvalidConfigError(f"k_max must be at least 1, got {self.k_max}")
        if self.mode not in ESD_MODES:
            raise InvalidConfigError(f"unknown ESD mode {self.mode!r}")

    def check_window(self, n: int) -> None:
        if n < self.k_max + 3:
            raise InvalidConfigError(
                f"window of {n} values cannot test k_max={self.k_max} outliers "
                f"(need n >= k_max + 3)"
            )


@dataclass(frozen=True, slots=True)
class EsdFlag:
    index: int
    value: float
    statistic: float
    critical: float


@dataclass
class EsdOutcome:
    flagged: list[EsdFlag] = field(default_factory=list)
    tested_count: int = 0
    zero_variance: bool = False

    @property
    def indices(self) -> list[int]:
        return [f.index for f in self.flagged]


def critical_value(n: int, l: int, alpha: float) -> float:
    """Critical value for the ``l``-th (0-based) order statistic of ESD.

    ``t`` is the upper ``alpha / (2 (n - l))`` quantile of Student's t with
    ``n - l - 2`` degrees of freedom, and the critical value is
    ``t (n - l - 1) / sqrt((n - l - 2 + t^2) (n - l))``.
    """
    df = n - l - 2
    if df < 1:
        raise InvalidConfigError(f"n={n}, l={l} leaves {df} degrees of freedom")
    if not 0.0 < alpha < 1.0:
        raise InvalidConfigError(f"alpha must lie in (0, 1), got {alpha}")
    t = float(_st.t.isf(alpha / (2.0 * (n - l)), df))
    return t * (n - l - 1) / math.sqrt((df + t * t) * (n - l))


@lru_cache(maxsize=64)
def _critical_table(n: int, k: int, alpha: float) -> tuple[float, ...]:
    return tuple(critical_value(n, l, alpha) for l in range(k))


def critical_values(n: int, k: int, alpha: float) -> tuple[float, ...]:
    """Critical values for ``l = 0 .. k - 1`` (cached per ``(n, k, alpha)``)."""
    return _critical_table(int(n), int(k), float(alpha))


def run_esd(residuals, stats: WindowStats | None, cfg: EsdConfig,
            min_sum_sq: float = ZERO_VARIANCE) -> EsdOutcome:
    """Test up to ``cfg.k_max`` outliers in ``residuals``.

    ``stats`` must describe ``residuals``; pass ``None`` to compute it here.
    In ``early-stop`` mode the loop stops at the first non-rejection and flags
    every rejected deviate. In ``rosner`` mode all ``k_max`` rounds run and
    every deviate up to the last rejection is flagged. Ties on the absolute
    deviate go to the lowest index. Neither input is modified.
    """
    x = np.asarray(residuals, dtype=np.float64)
    n = x.size
    cfg.check_window(n)
    if not np.all(np.isfinite(x)):
        raise InvalidValueError("residual window contains NaN or infinite values")
    if stats is None:
        stats = init_stats(x)
    crit = critical_values(n, cfg.k_max, cfg.alpha)
    rosner = cfg.mode == "rosner"

    mean = stats.mean
    ss = stats.sum_sq
    m = n
    removed: list[int] = []
    candidates: list[EsdFlag] = []
    last_reject = 0
    out = EsdOutcome()

    for j in range(1, cfg.k_max + 1):
        if ss <= min_sum_sq:
            out.zero_variance = True
            break
        dev = np.abs(x - mean)
        if removed:
            dev[removed] = -1.0
        i = int(np.argmax(dev))
        xi = float(x[i])
        d = xi - mean
        m_new = m - 1
        ss_new = ss - m / m_new * d * d
        fresh = None
        if ss_new < CANCELLATION_RATIO * ss and m_new >= 2:
            keep = np.ones(n, dtype=bool)
            keep[removed + [i]] = False
            fresh = init_stats(x[keep])
            ss_new = fresh.sum_sq
        elif ss_new < 0.0:
            ss_new = 0.0
        r = math.sqrt(max(1.0 - ss_new / ss, 0.0) * (m - 1) * (m - 1) / m)
        gamma = crit[j - 1]
        out.tested_count = j
        reject = r > gamma
        if not reject and not rosner:
            break
        candidates.append(EsdFlag(i, xi, r, gamma))
        if reject:
            last_reject = j
        removed.append(i)
        mean = (m * mean - xi) / m_new if fresh is None else fresh.mean
        ss = ss_new
        m = m_new

    out.flagged = candidates[:last_reject]
    return out


def grubbs_single(residuals, stats: WindowStats | None, alpha: float = 0.05) -> EsdOutcome:
    """Two-sided Grubbs test for a single outlier."""
    return run_esd(residuals, stats, EsdConfig(alpha=alpha, k_max=1))
