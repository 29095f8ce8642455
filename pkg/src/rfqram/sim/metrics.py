"""Run metrics, safety scans and Monte Carlo aggregation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..models import Emcon

_TOL = 1e-9

HEALTH_KEYS = ("drops", "element_violations", "duty_violations", "time_violations", "emcon_violations")


@dataclass(frozen=True)
class EpochRecord:
    """What was put on the timeline in one epoch; kept for post-hoc safety scans."""

    t: float
    emcon: Emcon
    entries: tuple
    dropped: tuple[str, ...] = ()


def scan_epoch(record: EpochRecord, epoch: float, duty_limit: float) -> dict[str, int]:
    """Count invariant breaches in one epoch's timeline."""
    out = dict.fromkeys(HEALTH_KEYS, 0)
    out["drops"] = len(record.dropped)
    entries = record.entries
    for e in entries:
        if e.start < -_TOL or e.end > epoch * (1 + _TOL) + _TOL:
            out["time_violations"] += 1
        if e.transmit and e.duty > duty_limit + 1e-12:
            out["duty_violations"] += 1
        if record.emcon is Emcon.BRAVO and e.radar:
            out["emcon_violations"] += 1
    # element load is piecewise constant and changes only at entry starts
    for probe in entries:
        load = sum(e.element_fraction for e in entries if e.start <= probe.start + _TOL and e.end > probe.start + _TOL)
        if load > 1.0 + 1e-9:
            out["element_violations"] += 1
            break
    return out


def scan_safety(records: Iterable[EpochRecord], epoch: float, duty_limit: float) -> dict[str, int]:
    total = dict.fromkeys(HEALTH_KEYS, 0)
    for rec in records:
        for k, v in scan_epoch(rec, epoch, duty_limit).items():
            total[k] += v
    return total


@dataclass
class MetricsSeries:
    """Raw per-epoch series of one run."""

    run_id: int | str
    mode: str
    seed: int
    t: np.ndarray
    track_error_mean: np.ndarray  # m, NaN while no track exists
    track_errors: dict[str, np.ndarray]
    utility_by_type: dict[str, np.ndarray]
    utility_total: np.ndarray
    predicted_utility: np.ndarray
    sar_active: np.ndarray
    sar_stretch: float = 0.0
    health: dict[str, int] = field(default_factory=dict)
    log: list[EpochRecord] | None = None

    @property
    def total_track_error(self) -> float:
        return _nanmean(self.track_error_mean)

    @property
    def sar_window_error(self) -> float:
        return _nanmean(self.track_error_mean[self.sar_active])

    @property
    def cumulative_utility(self) -> float:
        return float(np.sum(self.utility_total))

    def totals(self) -> dict[str, float]:
        return {
            "total_track_error": self.total_track_error,
            "sar_window_error": self.sar_window_error,
            "cumulative_utility": self.cumulative_utility,
            "sar_stretch": self.sar_stretch,
        }

    def rows(self):
        """``(t, metric, task_type, value)`` tuples in a stable order."""
        for k, t in enumerate(self.t):
            yield t, "track_error_mean", "track", self.track_error_mean[k]
            for kind in sorted(self.utility_by_type):
                yield t, "utility", kind, self.utility_by_type[kind][k]
            yield t, "utility_total", "all", self.utility_total[k]
            yield t, "predicted_utility", "all", self.predicted_utility[k]
            yield t, "sar_active", "sar", float(self.sar_active[k])


def _nanmean(x) -> float:
    x = np.asarray(x, dtype=float)
    x = x[~np.isnan(x)]
    return float(x.mean()) if x.size else float("nan")


def box_stats(values: Sequence[float]) -> dict[str, float]:
    """Box-plot statistics with whiskers at 1.5 IQR (linear-interpolated quartiles)."""
    v = np.asarray(values, dtype=float)
    v = np.sort(v[~np.isnan(v)])
    if v.size == 0:
        nan = float("nan")
        return dict(n=0, mean=nan, std=nan, min=nan, q1=nan, median=nan, q3=nan, max=nan, whisker_low=nan, whisker_high=nan, outliers=0)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
    return dict(
        n=int(v.size),
        mean=float(v.mean()),
        std=float(v.std()),
        min=float(v[0]),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(v[-1]),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=int(v.size - inside.size),
    )


def _bins(stack: np.ndarray) -> dict[str, np.ndarray]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return {
            "median": np.nanmedian(stack, axis=0),
            "q3": np.nanpercentile(stack, 75, axis=0),
            "std": np.nanstd(stack, axis=0),
        }


def aggregate_runs(series: Sequence[MetricsSeries]) -> dict:
    """Per-time-bin median, third quartile and standard deviation plus box statistics of run totals."""
    if not series:
        raise ValueError("aggregate_runs needs at least one run")
    t = series[0].t
    for s in series[1:]:
        if s.t.shape != t.shape or not np.array_equal(s.t, t):
            raise ValueError("runs do not share a time axis")
    kinds = sorted(series[0].utility_by_type)
    totals = [s.totals() for s in series]
    health = {k: int(sum(s.health.get(k, 0) for s in series)) for k in HEALTH_KEYS}
    return {
        "runs": len(series),
        "t": t,
        "track_error_mean": _bins(np.stack([s.track_error_mean for s in series])),
        "utility_total": _bins(np.stack([s.utility_total for s in series])),
        "utility_by_type": {k: _bins(np.stack([s.utility_by_type[k] for s in series])) for k in kinds},
        "totals": {key: box_stats([tot[key] for tot in totals]) for key in totals[0]},
        "health": health,
    }
