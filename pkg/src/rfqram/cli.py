"""Command-line front end: ``rfqram run | compare | validate``.

Output files (schema version 1):

``series.csv``
    ``run_id,t,metric,task_type,value``; one row per epoch per metric.
``summary.json``
    ``schema_version``, ``command``, ``seeds``, ``epoch``, ``duration`` and a
    ``modes`` mapping of per-mode aggregates (see :func:`mode_summary`).
``compare.csv``
    one row per mode with the columns in :data:`COMPARE_COLUMNS`.
``error_over_time.csv``, ``sar_window.csv``, ``utility_totals.csv``
    plot-ready tables written by ``compare``.

Floats are written with ``repr`` so they round-trip exactly. NaN appears as
``nan`` in CSV and ``null`` in JSON.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .concurrency import Mode
from .config import REFERENCE_CONFIG, LoadedConfig, load_config
from .errors import RfqramError
from .sim import MetricsSeries, aggregate_runs, run_scenario

SCHEMA_VERSION = 1
SERIES_COLUMNS = ("run_id", "t", "metric", "task_type", "value")
COMPARE_COLUMNS = (
    "mode",
    "runs",
    "track_error_median",
    "track_error_q3",
    "track_error_std",
    "sar_window_error_mean",
    "sar_window_error_median",
    "sar_window_error_q3",
    "utility_median",
    "utility_q3",
    "utility_std",
    "sar_stretch_mean",
    "drops",
    "element_violations",
    "duty_violations",
    "time_violations",
    "emcon_violations",
)
MODE_ORDER = (Mode.STANDARD, Mode.INTERLEAVED, Mode.MULTIFUNCTION, Mode.MULTIOPERATION)


def _num(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if math.isnan(x) else float(x)
    return x


def run_id(mode: Mode, seed: int) -> str:
    return f"{mode.value}-{seed}"


def mode_summary(series: Sequence[MetricsSeries]) -> dict:
    """Aggregate of one mode: box statistics of run totals, health counters,
    per-run totals and per-epoch median/q3/std of the mean track error and
    the total utility."""
    agg = aggregate_runs(series)
    return {
        "runs": agg["runs"],
        "totals": agg["totals"],
        "health": agg["health"],
        "per_run": [{"run_id": s.run_id, "seed": s.seed, **s.totals()} for s in series],
        "track_error_mean": {k: v.tolist() for k, v in agg["track_error_mean"].items()},
        "utility_total": {k: v.tolist() for k, v in agg["utility_total"].items()},
    }


def compare_row(mode: Mode, summary: dict) -> dict:
    tot = summary["totals"]
    return {
        "mode": mode.value,
        "runs": summary["runs"],
        "track_error_median": tot["total_track_error"]["median"],
        "track_error_q3": tot["total_track_error"]["q3"],
        "track_error_std": tot["total_track_error"]["std"],
        "sar_window_error_mean": tot["sar_window_error"]["mean"],
        "sar_window_error_median": tot["sar_window_error"]["median"],
        "sar_window_error_q3": tot["sar_window_error"]["q3"],
        "utility_median": tot["cumulative_utility"]["median"],
        "utility_q3": tot["cumulative_utility"]["q3"],
        "utility_std": tot["cumulative_utility"]["std"],
        "sar_stretch_mean": tot["sar_stretch"]["mean"],
        **summary["health"],
    }


# --------------------------------------------------------------------------
# writers
# --------------------------------------------------------------------------

def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_series(path: Path, series: Sequence[MetricsSeries]) -> None:
    def rows():
        for s in series:
            for t, metric, kind, value in s.rows():
                yield s.run_id, float(t), metric, kind, float(value)

    _write_csv(path, SERIES_COLUMNS, rows())


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n")


class _Staging:
    """Write into a scratch directory and move the files into place only on success."""

    def __init__(self, out: Path):
        self.out = out

    def __enter__(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".rfqram-", dir=self.out))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                for f in sorted(self.tmp.iterdir()):
                    f.replace(self.out / f.name)
        finally:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _overrides(args) -> dict:
    return {
        "mode": getattr(args, "mode", None),
        "seeds": args.seeds,
        "mcts_iterations": args.mcts_iterations,
        "epoch": args.epoch,
    }


def _load(args, out=None) -> LoadedConfig | None:
    out = out or sys.stderr
    overrides = {k: v for k, v in _overrides(args).items() if v is not None}
    loaded = load_config(args.config, overrides)
    for issue in loaded.issues:
        print(f"{args.config}: {issue}", file=out)
    if loaded.issues or loaded.config is None:
        n = len(loaded.issues)
        print(f"{n} issue{'s' if n != 1 else ''}", file=out)
        return None
    return loaded


def _run_mode(loaded: LoadedConfig, mode: Mode, progress: bool) -> list[MetricsSeries]:
    config = loaded.config.with_mode(mode)
    out = []
    for seed in loaded.seeds:
        out.append(run_scenario(config, seed, run_id=run_id(mode, seed), keep_log=False))
        if progress:
            print(f"  {mode.value} seed {seed} done", file=sys.stderr)
    return out


def _header(loaded: LoadedConfig, command: str) -> dict:
    cfg = loaded.config
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seeds": list(loaded.seeds),
        "epoch": cfg.system.epoch,
        "duration": cfg.scenario.duration,
        "mcts_iterations": cfg.mcts_iterations,
    }


def cmd_run(args) -> int:
    loaded = _load(args)
    if loaded is None:
        return 1
    mode = loaded.config.mode
    series = _run_mode(loaded, mode, args.verbose)
    summary = {**_header(loaded, "run"), "modes": {mode.value: mode_summary(series)}}
    with _Staging(Path(args.out)) as tmp:
        write_series(tmp / "series.csv", series)
        write_json(tmp / "summary.json", summary)
    _print_table([compare_row(mode, summary["modes"][mode.value])])
    return 0


def cmd_compare(args) -> int:
    loaded = _load(args)
    if loaded is None:
        return 1
    runs = {mode: _run_mode(loaded, mode, args.verbose) for mode in MODE_ORDER}
    summaries = {mode: mode_summary(series) for mode, series in runs.items()}
    table = [compare_row(mode, summaries[mode]) for mode in MODE_ORDER]
    doc = {**_header(loaded, "compare"), "modes": {m.value: s for m, s in summaries.items()}}
    t = runs[Mode.STANDARD][0].t
    with _Staging(Path(args.out)) as tmp:
        write_series(tmp / "series.csv", [s for mode in MODE_ORDER for s in runs[mode]])
        write_json(tmp / "summary.json", doc)
        _write_csv(tmp / "compare.csv", COMPARE_COLUMNS, ([row[c] for c in COMPARE_COLUMNS] for row in table))
        _write_csv(
            tmp / "error_over_time.csv",
            ("mode", "t", "median", "q3", "std"),
            (
                (m.value, float(t[k]), *(float(summaries[m]["track_error_mean"][s][k]) for s in ("median", "q3", "std")))
                for m in MODE_ORDER
                for k in range(len(t))
            ),
        )
        _write_csv(
            tmp / "sar_window.csv",
            ("mode", "run_id", "seed", "sar_window_error"),
            ((m.value, s.run_id, s.seed, s.sar_window_error) for m in MODE_ORDER for s in runs[m]),
        )
        _write_csv(
            tmp / "utility_totals.csv",
            ("mode", "run_id", "seed", "cumulative_utility", "total_track_error"),
            ((m.value, s.run_id, s.seed, s.cumulative_utility, s.total_track_error) for m in MODE_ORDER for s in runs[m]),
        )
    _print_table(table)
    return 0


def cmd_validate(args) -> int:
    loaded = _load(args, out=sys.stdout)
    if loaded is None:
        return 1
    print("0 issues")
    return 0


def _print_table(rows: Sequence[dict]) -> None:
    cols = ("mode", "runs", "track_error_median", "sar_window_error_mean", "utility_median", "utility_std")
    print("  ".join(f"{c:>22}" for c in cols))
    for row in rows:
        print("  ".join(f"{row[c]:>22.6g}" if isinstance(row[c], float) else f"{row[c]:>22}" for c in cols))


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError("must be a positive number")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfqram", description="Radar resource management with concurrent operation modes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, mode: bool, out: bool):
        p.add_argument("--config", default=str(REFERENCE_CONFIG), help="scenario file (default: the shipped reference scenario)")
        if mode:
            p.add_argument("--mode", choices=[m.value for m in Mode], help="concurrency mode (overrides run.mode)")
        p.add_argument("--seeds", help="seed count n (seeds 0..n-1) or comma-separated list")
        p.add_argument("--mcts-iterations", type=_positive_int, help="tree-search iterations per epoch")
        p.add_argument("--epoch", type=_positive_float, help="allocation epoch in s")
        if out:
            p.add_argument("--out", default="out", help="output directory (default: ./out)")
            p.add_argument("-v", "--verbose", action="store_true", help="report each finished run on stderr")

    common(sub.add_parser("run", help="run one mode over a seed batch"), mode=True, out=True)
    common(sub.add_parser("compare", help="run all four modes on the same seeds"), mode=False, out=True)
    common(sub.add_parser("validate", help="check a scenario file"), mode=True, out=False)
    return parser


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except RfqramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
