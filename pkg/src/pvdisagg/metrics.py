"""Error scores of reconstructed series against ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .timeseries import DaytimeMask, PowerSeries, check_aligned


@dataclass(frozen=True)
class DayScore:
    day: int
    rmse_kw: float
    mae_kw: float
    n: int


@dataclass(frozen=True)
class ScoreReport:
    rmse_kw: float
    mae_kw: float
    mean_error_kw: float
    rmse_pct_capacity: float
    n: int
    per_day: tuple[DayScore, ...]
    rmse_2sigma_kw: float
    mae_2sigma_kw: float


def rmse(err) -> float:
    err = np.asarray(err, dtype=float)
    return float(np.sqrt(np.mean(err * err)))


def mae(err) -> float:
    return float(np.mean(np.abs(np.asarray(err, dtype=float))))


def two_sigma(values) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    return float(2.0 * np.std(values, ddof=1))


def score(estimate: PowerSeries, truth: PowerSeries, capacity_kw: float | None = None,
          mask: DaytimeMask | None = None) -> ScoreReport:
    """RMSE/MAE of ``estimate.active_kw`` against ``truth.active_kw``.

    Only samples flagged by ``mask`` are scored (all samples when omitted);
    the estimate must be finite on every scored sample. Per-day scores use
    UTC days and feed the two-sigma bands.
    """
    check_aligned(estimate, truth)
    flags = np.ones(len(truth), bool) if mask is None else np.asarray(mask.flags, bool)
    if len(flags) != len(truth):
        raise ValueError("mask and series differ in length")
    if not flags.any():
        raise ValueError("no samples selected for scoring")
    err = estimate.active_kw[flags] - truth.active_kw[flags]
    if not np.all(np.isfinite(err)):
        raise ValueError("estimate or truth is undefined on scored samples")
    days = truth.day_index()[flags]
    per_day = tuple(
        DayScore(int(d), rmse(err[days == d]), mae(err[days == d]), int(np.sum(days == d)))
        for d in np.unique(days)
    )
    r = rmse(err)
    return ScoreReport(
        rmse_kw=r,
        mae_kw=mae(err),
        mean_error_kw=float(np.mean(err)),
        rmse_pct_capacity=100.0 * r / capacity_kw if capacity_kw else float("nan"),
        n=int(flags.sum()),
        per_day=per_day,
        rmse_2sigma_kw=two_sigma([d.rmse_kw for d in per_day]),
        mae_2sigma_kw=two_sigma([d.mae_kw for d in per_day]),
    )


def format_report(name: str, report: ScoreReport) -> str:
    pct = "" if np.isnan(report.rmse_pct_capacity) else f" ({report.rmse_pct_capacity:.2f}% of capacity)"
    lines = [f"{name}: RMSE {report.rmse_kw:.1f} kW{pct}, MAE {report.mae_kw:.1f} kW, n={report.n}"]
    for d in report.per_day:
        date = datetime.fromtimestamp(d.day * 86400, tz=timezone.utc).strftime("%Y-%m-%d")
        lines.append(f"  {date}: RMSE {d.rmse_kw:.1f} kW, MAE {d.mae_kw:.1f} kW, n={d.n}")
    if len(report.per_day) > 1:
        lines.append(f"  +/-2 sigma across days: RMSE {report.rmse_2sigma_kw:.1f} kW, MAE {report.mae_2sigma_kw:.1f} kW")
    return "\n".join(lines)
