"""Independent reference implementations used only by the tests.

Nothing here imports from ``resd``; each oracle recomputes its answer from
scratch by the slowest obvious route.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np


def mean_sumsq_exact(values) -> tuple[float, float]:
    """Mean and centred sum of squares in exact rational arithmetic."""
    xs = [Fraction(float(v)) for v in values]
    n = len(xs)
    m = sum(xs, Fraction(0)) / n
    return float(m), float(sum(((x - m) ** 2 for x in xs), Fraction(0)))


def t_isf_mp(p: float, df: int, dps: int = 40) -> float:
    """Upper ``p`` quantile of Student's t via the regularised incomplete beta."""
    with mpmath.workdps(dps):
        p = mpmath.mpf(p)
        df = mpmath.mpf(df)

        def upper_tail(t):
            x = df / (df + t * t)
            return mpmath.betainc(df / 2, mpmath.mpf(1) / 2, 0, x, regularized=True) / 2

        lo, hi = mpmath.mpf(0), mpmath.mpf(1)
        while upper_tail(hi) > p:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if upper_tail(mid) > p:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def critical_value_mp(n: int, l: int, alpha: float) -> float:
    """ESD critical value (0-based ``l``) from the mpmath t quantile."""
    nl = n - l
    t = t_isf_mp(alpha / (2 * nl), nl - 2)
    return t * (nl - 1) / math.sqrt((nl - 2 + t * t) * nl)


def esd_bruteforce(x, k: int, alpha: float, crit=critical_value_mp, mode: str = "early-stop"):
    """Generalized ESD by recomputing mean and sd of the survivors each round.

    Returns ``(indices, statistics)`` of the flagged points in removal order.
    Ties go to the lowest index. ``mode="rosner"`` runs all ``k`` rounds and
    keeps everything up to the last rejection.
    """
    x = np.asarray(x, dtype=np.float64)
    alive = list(range(x.size))
    idx, stats = [], []
    last = 0
    for j in range(k):
        vals = x[alive]
        m = float(np.mean(vals))
        s = float(np.std(vals, ddof=1))
        if s == 0.0:
            break
        devs = np.abs(vals - m)
        pos = int(np.argmax(devs))
        r = float(devs[pos]) / s
        g = crit(x.size, j, alpha)
        if r <= g and mode == "early-stop":
            break
        idx.append(alive[pos])
        stats.append(r)
        if r > g:
            last = j + 1
        del alive[pos]
    return idx[:last], stats[:last]


def dft_power(x) -> np.ndarray:
    """Periodogram ``|X_k|^2 / n`` for ``k = 1 .. n // 2`` by the O(n^2) sum."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    t = np.arange(n)
    out = np.empty(n // 2)
    for k in range(1, n // 2 + 1):
        ang = 2 * np.pi * k * t / n
        re = float(np.sum(x * np.cos(ang)))
        im = float(np.sum(x * np.sin(ang)))
        out[k - 1] = (re * re + im * im) / n
    return out


def match_bruteforce(det_times, labels, tol):
    """Greedy label matching by exhaustive scan (labels as (start, end) pairs)."""
    dets = sorted(set(det_times))
    used = set()
    tp = 0
    for a, b in labels:
        for d in dets:
            if d not in used and a - tol <= d <= b + tol:
                used.add(d)
                tp += 1
                break
    return tp, len(dets) - tp, len(labels) - tp
