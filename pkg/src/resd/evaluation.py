"""Precision, recall and F1 of detections against labelled anomalies."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .exceptions import InvalidInputError


@dataclass(frozen=True)
class LabelSet:
    """Ground-truth anomalies as sorted, non-overlapping ``(start, end)`` ranges.

    Point labels are ranges with ``start == end``. Times are numeric (the
    same units as detection timestamps and the matching tolerance).
    """

    ranges: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev_end = None
        for a, b in self.ranges:
            if b < a:
                raise InvalidInputError(f"label range ends before it starts: {a} > {b}")
            if prev_end is not None and a <= prev_end:
                raise InvalidInputError("label ranges must be sorted and non-overlapping")
            prev_end = b

    @classmethod
    def from_points(cls, points) -> "LabelSet":
        return cls(tuple((float(p), float(p)) for p in sorted(points)))

    @classmethod
    def from_ranges(cls, ranges) -> "LabelSet":
        return cls(tuple((float(a), float(b)) for a, b in sorted(ranges)))

    def __len__(self) -> int:
        return len(self.ranges)


@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    #: ``(label_start, label_end, matched_detection_or_None)`` per label.
    matches: list[tuple[float, float, float | None]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall and F1, each 0 when undefined."""
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def _time(d) -> float:
    return float(getattr(d, "ts", d))


def score(detections, labels: LabelSet, tolerance: float = 0.0) -> EvalReport:
    """Match detections to labels.

    A detection within ``tolerance`` of a label range (inclusive) can credit
    that label. Each label is credited at most once, by the earliest eligible
    detection not already used by an earlier label; all other detections are
    false positives.
    """
    if tolerance < 0:
        raise InvalidInputError(f"tolerance must be non-negative, got {tolerance}")
    times = sorted({_time(d) for d in detections})
    used = [False] * len(times)
    matches = []
    tp = 0
    for a, b in labels.ranges:
        i = bisect.bisect_left(times, a - tolerance)
        hit = None
        while i < len(times) and times[i] <= b + tolerance:
            if not used[i]:
                used[i] = True
                hit = times[i]
                break
            i += 1
        if hit is not None:
            tp += 1
        matches.append((a, b, hit))
    fp = len(times) - tp
    fn = len(labels) - tp
    p, r, f = prf(tp, fp, fn)
    return EvalReport(tp, fp, fn, p, r, f, matches)
