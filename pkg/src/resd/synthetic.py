"""Seeded synthetic series shaped like the Yahoo A3 benchmark.

Hourly seasonal signal with a linear trend and Gaussian noise, plus isolated
point outliers and no change points. Outliers are kept out of the first
``clean_fraction`` of each series so the training window is anomaly-free.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

SEED_ENV = "RESD_SEED"
DEFAULT_SEED = 20200721


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else default


@dataclass
class SyntheticSeries:
    values: np.ndarray
    anomalies: np.ndarray  # sorted integer positions
    period: int
    sigma: float


def a3_like(rng: np.random.Generator, n: int = 1680, periods=(12, 24, 48),
            n_outliers=(4, 12), magnitude=(4.0, 8.0),
            clean_fraction: float = 0.1) -> SyntheticSeries:
    """Draw one series.

    ``magnitude`` bounds the outlier size in noise standard deviations.
    Outliers are at least ``period // 2`` samples apart.
    """
    period = int(rng.choice(periods))
    sigma = float(rng.uniform(0.5, 5.0))
    t = np.arange(n)
    amp = rng.uniform(3.0, 15.0) * sigma
    phase = rng.uniform(0, 2 * np.pi)
    seasonal = amp * np.sin(2 * np.pi * t / period + phase)
    seasonal += 0.3 * amp * np.sin(4 * np.pi * t / period + rng.uniform(0, 2 * np.pi))
    level = rng.uniform(-100.0, 100.0)
    slope = rng.uniform(-1.0, 1.0) * 5.0 * sigma / n
    x = level + slope * t + seasonal + rng.normal(0.0, sigma, n)

    lo = int(np.ceil(clean_fraction * n))
    gap = max(1, period // 2)
    want = int(rng.integers(n_outliers[0], n_outliers[1] + 1))
    # keep rejection sampling cheap on short series
    want = max(1, min(want, (n - lo) // (2 * gap)))
    chosen: list[int] = []
    while len(chosen) < want:
        p = int(rng.integers(lo, n))
        if all(abs(p - q) >= gap for q in chosen):
            chosen.append(p)
    chosen.sort()
    idx = np.array(chosen, dtype=int)
    sign = rng.choice([-1.0, 1.0], size=idx.size)
    x[idx] += sign * rng.uniform(*magnitude, size=idx.size) * sigma
    return SyntheticSeries(x, idx, period, sigma)


def a3_like_corpus(seed: int | None = None, count: int = 100, **kw) -> list[SyntheticSeries]:
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    return [a3_like(rng, **kw) for _ in range(count)]
