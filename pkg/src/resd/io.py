"""Reading and writing series, labels and anomaly records.

Input CSV has the header ``timestamp,value``; NDJSON objects carry the same
two keys. Timestamps are ISO-8601 strings (naive ones are taken as UTC) or
integer epoch seconds and must be strictly increasing.
"""

from __future__ import annotations

import csv
import json
import math
import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator

import numpy as np

from .evaluation import LabelSet
from .exceptions import InvalidInputError

FORMATS = ("csv", "ndjson")
_INT_RE = re.compile(r"^[+-]?\d+$")


def parse_timestamp(raw) -> tuple[object, float]:
    """Return ``(token, epoch_seconds)`` for an ISO-8601 string or integer.

    ``token`` is what gets echoed in output: an ``int`` for epoch input and
    the original string otherwise.
    """
    if isinstance(raw, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(raw, int):
        return raw, float(raw)
    if not isinstance(raw, str):
        raise ValueError(f"unsupported timestamp {raw!r}")
    s = raw.strip()
    if _INT_RE.match(s):
        v = int(s)
        return v, float(v)
    iso = s[:-1] + "+00:00" if s.endswith(("Z", "z")) else s
    dt = datetime.fromisoformat(iso)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return s, dt.timestamp()


def _parse_value(raw) -> float:
    if isinstance(raw, bool):
        raise ValueError("boolean is not a value")
    v = float(raw)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {raw!r}")
    return v


@dataclass(frozen=True, slots=True)
class InputRecord:
    line: int
    ts: object
    time: float
    value: float
    value_text: str


def _csv_rows(lines: Iterable[str]) -> Iterator[tuple[int, object, object]]:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInputError("empty input", line=1) from None
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    if [h.strip() for h in header] != ["timestamp", "value"]:
        raise InvalidInputError(
            f"expected header 'timestamp,value', got {','.join(header)!r}", line=1
        )
    for row in reader:
        if not row:
            continue
        if len(row) != 2:
            raise InvalidInputError(f"expected 2 fields, got {len(row)}", line=reader.line_num)
        yield reader.line_num, row[0], row[1]


def _ndjson_rows(lines: Iterable[str]) -> Iterator[tuple[int, object, object]]:
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid JSON: {exc.msg}", line=n) from None
        if not isinstance(obj, dict) or "timestamp" not in obj or "value" not in obj:
            raise InvalidInputError("object needs 'timestamp' and 'value' keys", line=n)
        yield n, obj["timestamp"], obj["value"]


def iter_records(lines: Iterable[str], fmt: str = "csv") -> Iterator[InputRecord]:
    """Parse records lazily, one input line at a time."""
    if fmt not in FORMATS:
        raise InvalidInputError(f"unknown input format {fmt!r}")
    rows = _csv_rows(lines) if fmt == "csv" else _ndjson_rows(lines)
    prev = None
    for line, ts_raw, val_raw in rows:
        try:
            token, t = parse_timestamp(ts_raw)
        except (ValueError, TypeError) as exc:
            raise InvalidInputError(f"bad timestamp {ts_raw!r}: {exc}", line=line) from None
        try:
            v = _parse_value(val_raw)
        except (ValueError, TypeError) as exc:
            raise InvalidInputError(f"bad value {val_raw!r}: {exc}", line=line) from None
        if prev is not None and t <= prev:
            raise InvalidInputError(
                f"timestamp {ts_raw!r} does not follow the previous one", line=line
            )
        prev = t
        text = val_raw.strip() if isinstance(val_raw, str) else repr(v)
        yield InputRecord(line, token, t, v, text)


@dataclass
class Series:
    ts: list = field(default_factory=list)
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    value_text: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ts)

    @classmethod
    def from_records(cls, records: Iterable[InputRecord]) -> "Series":
        recs = list(records)
        return cls(
            ts=[r.ts for r in recs],
            times=np.array([r.time for r in recs], dtype=np.float64),
            values=np.array([r.value for r in recs], dtype=np.float64),
            value_text=[r.value_text for r in recs],
        )

    @property
    def step(self) -> float:
        """Median sampling interval (1.0 for fewer than two points)."""
        if self.times.size < 2:
            return 1.0
        return float(np.median(np.diff(self.times)))


@contextmanager
def open_text(path, mode: str = "r") -> Iterator[IO[str]]:
    """Open ``path`` as text; ``None`` or ``"-"`` selects stdin/stdout."""
    if path is None or str(path) == "-":
        yield sys.stdin if "r" in mode else sys.stdout
        return
    with open(path, mode, encoding="utf-8", newline="") as fh:
        yield fh


def ingest(path=None, fmt: str = "csv") -> Series:
    """Read a whole series from a file (``None``/``"-"`` for stdin)."""
    with open_text(path) as fh:
        series = Series.from_records(iter_records(fh, fmt))
    if not len(series):
        raise InvalidInputError("empty input")
    return series


def write_csv(series: Series, fh: IO[str]) -> None:
    """Write ``series`` with the ``timestamp,value`` header, LF line ends."""
    fh.write("timestamp,value\n")
    for ts, text in zip(series.ts, series.value_text):
        fh.write(f"{ts},{text}\n")


def read_labels(path) -> LabelSet:
    """Labels from a CSV with a ``timestamp`` column or ``start,end`` columns."""
    with open_text(path) as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        rows = list(reader)

    def t(raw, line):
        try:
            return parse_timestamp(raw)[1]
        except (ValueError, TypeError) as exc:
            raise InvalidInputError(f"bad label timestamp {raw!r}: {exc}", line=line) from None

    if "timestamp" in fields:
        return LabelSet.from_points(t(r["timestamp"], i) for i, r in enumerate(rows, 2))
    if "start" in fields and "end" in fields:
        return LabelSet.from_ranges(
            (t(r["start"], i), t(r["end"], i)) for i, r in enumerate(rows, 2)
        )
    raise InvalidInputError("label file needs a 'timestamp' or 'start,end' header", line=1)


def record_json(rec) -> str:
    return json.dumps(rec.to_dict(), separators=(",", ":"))
