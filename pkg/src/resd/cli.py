"""Command-line interface: ``resd detect``, ``resd bench`` and ``resd generate``.

Anomalies are written as NDJSON, one record per line, flushed as soon as the
step that found them completes. Evaluation reports and run manifests go to
stderr (or ``--manifest``) as single-line JSON.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .detector import DetectorConfig, default_windows, initialize
from .esd import ESD_MODES
from .evaluation import score
from .exceptions import InvalidConfigError, InvalidInputError, ResdError
from .io import FORMATS, InputRecord, iter_records, open_text, read_labels
from .shesd import DIRECTIONS, ShesdConfig, shesd_windows
from .synthetic import a3_like_corpus, seed_from_env

log = logging.getLogger("resd")


class _HashingLines:
    """Iterate text lines while hashing them, one line at a time."""

    def __init__(self, fh):
        self._fh = fh
        self.sha = hashlib.sha256()

    def __iter__(self):
        return self

    def __next__(self):
        line = self._fh.readline()
        if not line:
            raise StopIteration
        self.sha.update(line.encode("utf-8"))
        return line


def _timing(samples: list[float]) -> dict:
    if not samples:
        return {"steps": 0}
    a = np.asarray(samples)
    total = float(a.sum())
    return {
        "steps": int(a.size),
        "min": float(a.min()),
        "mean": float(a.mean()),
        "p50": float(np.median(a)),
        "p99": float(np.percentile(a, 99)),
        "max": float(a.max()),
        "total": total,
        "samples_per_sec": a.size / total if total > 0 else None,
    }


def _record_line(rec) -> str:
    d = rec.to_dict()
    d["ts"] = rec.ts.ts
    d["window_end"] = rec.window_end.ts
    return json.dumps(d, separators=(",", ":")) + "\n"


def _resd_config(args, n: int | None) -> DetectorConfig:
    w, tw = args.window, args.train_window
    if w is None or tw is None:
        if n is None:
            raise InvalidConfigError("--window and --train-window are required for unbounded input")
        dtw, dw = default_windows(n)
        tw = dtw if tw is None else tw
        w = dw if w is None else w
    k = args.k if args.k is not None else max(1, math.ceil(0.02 * w))
    horizon = args.horizon
    if horizon is None and n is not None:
        horizon = max(1, n - tw)
    return DetectorConfig(
        train_window=tw,
        window=w,
        k=k,
        alpha=args.alpha,
        period=args.period,
        max_period=args.max_period,
        refit_interval=args.refit_interval,
        dedupe=not args.no_dedupe,
        esd_mode=args.esd_mode,
        horizon=horizon,
        trend=args.trend,
        loess_span=args.loess_span,
    )


class DetectionRun:
    """One detector pass over one input, writing records as they appear."""

    def __init__(self, args, source: str | None):
        self.args = args
        self.source = source
        self.step_times: list[float] = []
        self.anomalies = []
        self.plot_rows: list[tuple] = []
        self.flagged: set[int] = set()
        self.times: list[float] = []
        self.config: dict = {}
        self.checksum = None

    def run(self, out) -> None:
        with open_text(self.source) as fh:
            lines = _HashingLines(fh)
            records = iter_records(lines, self.args.format)
            lazy = (
                self.args.detector == "resd"
                and self.args.window is not None
                and self.args.train_window is not None
                and (self.source in (None, "-"))
            )
            if lazy:
                self._run_resd(records, None, out)
            else:
                recs = list(records)
                if not recs:
                    raise InvalidInputError("empty input")
                if self.args.detector == "resd":
                    self._run_resd(iter(recs), len(recs), out)
                else:
                    self._run_shesd(recs, out)
            self.checksum = lines.sha.hexdigest()

    def _emit(self, recs, out) -> None:
        for r in recs:
            out.write(_record_line(r))
            self.flagged.add(r.ts.line)
        if recs:
            out.flush()
        self.anomalies.extend(recs)

    def _run_resd(self, records, n, out) -> None:
        cfg = _resd_config(self.args, n)
        self.config = {"detector": "resd", **cfg.to_dict()}
        plot = self.args.plot_data is not None
        history: list[InputRecord] = []
        for rec in records:
            history.append(rec)
            if len(history) == cfg.train_window:
                break
        if len(history) < cfg.train_window:
            raise InvalidInputError(
                f"need {cfg.train_window} observations to train, got {len(history)}"
            )
        det = initialize([r.value for r in history], cfg, history)
        self.config["period_used"] = det.period
        self.times.extend(r.time for r in history)
        if plot:
            fitted = det.model.fitted
            for r, f, e in zip(history, fitted, det.model.residuals):
                self.plot_rows.append((r, float(f), float(e)))
        del history
        perf = time.perf_counter
        for rec in records:
            t0 = perf()
            found = det.step(rec.value, rec)
            self.step_times.append(perf() - t0)
            self.times.append(rec.time)
            if plot:
                self.plot_rows.append((rec, det.last_forecast, det.last_residual))
            self._emit(found, out)
        self.tolerance_samples = (
            self.args.tolerance if self.args.tolerance is not None else cfg.window
        )

    def _run_shesd(self, recs: list[InputRecord], out) -> None:
        a = self.args
        window = a.window if a.window is not None else default_windows(len(recs))[0]
        cfg = ShesdConfig(
            window=window, period=a.period, alpha=a.alpha,
            max_anoms=a.max_anoms, direction=a.direction,
        )
        self.config = {"detector": "shesd", "window": cfg.window, "period": cfg.period,
                       "alpha": cfg.alpha, "max_anoms": cfg.max_anoms,
                       "direction": cfg.direction, "k": cfg.k}
        values = np.array([r.value for r in recs])
        self.times = [r.time for r in recs]
        found = []
        windows = shesd_windows(values, cfg, recs)
        while True:
            t0 = time.perf_counter()
            win = next(windows, None)
            if win is None:
                break
            self.step_times.append(time.perf_counter() - t0)
            self._emit(win.records, out)
            found.extend(win.records)
        if a.plot_data is not None:
            byline = {r.ts.line: r for r in found}
            for rec in recs:
                hit = byline.get(rec.line)
                self.plot_rows.append((rec, hit.forecast if hit else math.nan,
                                       hit.residual if hit else math.nan))
        self.tolerance_samples = a.tolerance if a.tolerance is not None else cfg.window

    def write_plot(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("timestamp,value,forecast,residual,flagged\n")
            for rec, f, e in self.plot_rows:
                flag = 1 if rec.line in self.flagged else 0
                fh.write(f"{rec.ts},{rec.value_text},{f!r},{e!r},{flag}\n")

    def evaluate(self, labels_path):
        labels = read_labels(labels_path)
        step = float(np.median(np.diff(self.times))) if len(self.times) > 1 else 1.0
        tol = self.tolerance_samples * step
        report = score([r.ts.time for r in self.anomalies], labels, tol)
        d = report.to_dict()
        d["tolerance_seconds"] = tol
        return d

    def manifest(self) -> dict:
        return {
            "version": __version__,
            "input": self.source or "-",
            "dataset_sha256": self.checksum,
            "config": self.config,
            "anomalies": len(self.anomalies),
            "timing": _timing(self.step_times),
        }


def _detect_one(args, source, out_path, summary) -> dict:
    run = DetectionRun(args, source)
    with open_text(out_path, "w") as out:
        run.run(out)
    if args.plot_data:
        run.write_plot(args.plot_data)
    result = {"manifest": run.manifest()}
    if args.labels:
        result["report"] = run.evaluate(args.labels)
    return result


def _detect_worker(payload):
    args, source, out_path = payload
    return _detect_one(args, source, out_path, None)


def _write_summary(result: dict, args) -> None:
    if "report" in result:
        print(json.dumps({"report": result["report"]}), file=sys.stderr, flush=True)
    line = json.dumps({"manifest": result["manifest"]})
    if args.manifest:
        with open(args.manifest, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
    else:
        print(line, file=sys.stderr, flush=True)


def cmd_detect(args) -> int:
    inputs = args.inputs or ["-"]
    if len(inputs) == 1:
        _write_summary(_detect_one(args, inputs[0], args.out, None), args)
        return 0
    if not args.out or args.out == "-":
        raise InvalidConfigError("--out must name a directory when several inputs are given")
    if args.plot_data:
        raise InvalidConfigError("--plot-data supports a single input only")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = [(args, src, str(outdir / (Path(src).stem + ".ndjson"))) for src in inputs]
    if args.parallel_series and args.parallel_series > 1:
        with ProcessPoolExecutor(max_workers=args.parallel_series) as pool:
            results = list(pool.map(_detect_worker, jobs))
    else:
        results = [_detect_worker(j) for j in jobs]
    for r in results:
        _write_summary(r, args)
    return 0


def cmd_bench(args) -> int:
    if args.repeat < 1:
        raise InvalidConfigError("--repeat must be at least 1")
    if not args.inputs or len(args.inputs) != 1 or args.inputs[0] == "-":
        raise InvalidConfigError("bench needs exactly one input file")
    repeats = []
    digests = set()
    all_steps: list[float] = []
    manifest = None
    for _ in range(args.repeat):
        sink = _DigestSink()
        run = DetectionRun(args, args.inputs[0])
        t0 = time.perf_counter()
        run.run(sink)
        wall = time.perf_counter() - t0
        digests.add(sink.sha.hexdigest())
        repeats.append({"wall_seconds": wall, "timing": _timing(run.step_times)})
        all_steps.extend(run.step_times)
        manifest = run.manifest()
    manifest["timing"] = _timing(all_steps)
    manifest["repeats"] = repeats
    manifest["output_sha256"] = sorted(digests)
    manifest["deterministic"] = len(digests) == 1
    text = json.dumps(manifest)
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


class _DigestSink:
    def __init__(self):
        self.sha = hashlib.sha256()

    def write(self, s: str) -> None:
        self.sha.update(s.encode("utf-8"))

    def flush(self) -> None:
        pass


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else seed_from_env()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    corpus = a3_like_corpus(seed=seed, count=args.count, n=args.length)
    start = 1_420_070_400  # 2015-01-01T00:00:00Z, hourly sampling
    for i, s in enumerate(corpus):
        stem = outdir / f"a3like_{i:03d}"
        with open(f"{stem}.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("timestamp,value\n")
            for j, v in enumerate(s.values):
                fh.write(f"{start + 3600 * j},{float(v)!r}\n")
        with open(f"{stem}_labels.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("timestamp\n")
            for j in s.anomalies:
                fh.write(f"{start + 3600 * int(j)}\n")
    print(json.dumps({"seed": seed, "count": args.count, "out": str(outdir)}))
    return 0


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _add_detect_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="*", help="input files ('-' or none for stdin)")
    p.add_argument("--format", choices=FORMATS, default="csv", help="input format")
    p.add_argument("--detector", choices=("resd", "shesd"), default="resd")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k", type=_positive_int, help="max anomalies tested per window")
    p.add_argument("--window", type=_positive_int,
                   help="streaming window (resd) or non-overlapping window (shesd)")
    p.add_argument("--train-window", type=_positive_int, help="initial training window")
    p.add_argument("--period", type=_positive_int, help="seasonal period override")
    p.add_argument("--max-period", type=_positive_int)
    p.add_argument("--refit-interval", type=int, default=0,
                   help="refit every N observations (0 = never)")
    p.add_argument("--horizon", type=_positive_int, help="forecast horizon")
    p.add_argument("--esd-mode", choices=ESD_MODES, default="early-stop")
    p.add_argument("--trend", choices=("classical", "loess"), default="classical")
    p.add_argument("--loess-span", type=float, default=0.3)
    p.add_argument("--no-dedupe", action="store_true",
                   help="report a point again each time a window flags it")
    p.add_argument("--max-anoms", type=float, default=0.02, help="shesd only")
    p.add_argument("--direction", choices=DIRECTIONS, default="both", help="shesd only")
    p.add_argument("--tolerance", type=float,
                   help="label matching tolerance in samples (default: one window)")
    p.add_argument("--labels", help="ground-truth labels CSV")
    p.add_argument("--out", help="anomaly NDJSON output (default stdout)")
    p.add_argument("--plot-data", help="write per-observation CSV for plotting")
    p.add_argument("--manifest", help="append run manifests here instead of stderr")
    p.add_argument("--parallel-series", type=int, default=0,
                   help="worker processes when several inputs are given")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect anomalies in one or more series")
    _add_detect_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="time repeated detection runs")
    _add_detect_args(p)
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a seeded A3-like synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=_positive_int, default=100)
    p.add_argument("--length", type=_positive_int, default=1680)
    p.add_argument("--seed", type=int, help="overrides $RESD_SEED")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ResdError as exc:
        print(f"resd: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"resd: error: {exc}", file=sys.stderr)
        return InvalidInputError.exit_code


def main_entry() -> None:
    sys.exit(main())
