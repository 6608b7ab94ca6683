"""Capacitor-bank switching detection and compensation on reactive power.

A switching event is any step-to-step drop or rise in Q whose magnitude
reaches the threshold. The running compensation accumulates the steps and is
added back to Q; once the accumulated value falls below the threshold (the
bank returned to its earlier state) it is reset to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import PowerSeries, interval_average_downsample


@dataclass(frozen=True)
class CapBankConfig:
    threshold_kvar_per_phase: float = 90.0
    detection_step_seconds: int = 1

    def __post_init__(self):
        if not self.threshold_kvar_per_phase > 0:
            raise ValueError("threshold must be positive")
        if self.detection_step_seconds <= 0:
            raise ValueError("detection step must be positive")

    def threshold_for(self, series: PowerSeries) -> float:
        """Per-phase threshold, tripled for an aggregate of three phases."""
        scale = 3.0 if series.phase_label == "aggregate" else 1.0
        return scale * self.threshold_kvar_per_phase


@dataclass(frozen=True, eq=False)
class CapBankReport:
    compensated: PowerSeries
    compensation_trace: np.ndarray
    events: list[tuple[int, float]]
    threshold_kvar: float


def detect_and_compensate(series: PowerSeries, config: CapBankConfig = CapBankConfig()) -> CapBankReport:
    if series.step_seconds != config.detection_step_seconds:
        raise ValueError(
            f"series step {series.step_seconds} s differs from the detection step "
            f"{config.detection_step_seconds} s; resample first"
        )
    q = series.reactive_kvar
    if len(q) < 2:
        raise ValueError("at least two samples are required")
    threshold = config.threshold_for(series)
    delta = np.empty_like(q)
    delta[0] = 0.0
    delta[1:] = q[:-1] - q[1:]

    steps = np.flatnonzero(np.abs(delta) >= threshold)
    levels = np.empty(len(steps))
    comp = 0.0
    for i, t in enumerate(steps):
        comp += delta[t]
        if abs(comp) < threshold:
            comp = 0.0
        levels[i] = comp
    # the compensation is piecewise constant, changing only at detected steps
    segment = np.searchsorted(steps, np.arange(len(q)), side="right") - 1
    trace = np.where(segment >= 0, levels[np.maximum(segment, 0)] if len(steps) else 0.0, 0.0)
    events = [(int(series.times[t]), float(delta[t])) for t in steps]
    compensated = series._with_values((series.active_kw, q + trace))
    return CapBankReport(compensated, trace, events, threshold)


def suggest_threshold(series: PowerSeries, bins: int = 50):
    """Histogram of step-to-step ``|dQ|`` for choosing a threshold by inspection.

    Returns ``(counts, bin_edges)`` as from :func:`numpy.histogram`.
    """
    dq = np.abs(np.diff(series.reactive_kvar))
    return np.histogram(dq, bins=bins)


def compensate_and_downsample(series: PowerSeries, config: CapBankConfig = CapBankConfig(),
                              target_step_seconds: int = 60) -> tuple[PowerSeries, CapBankReport]:
    """Compensate at the detection step, then interval-average to ``target_step_seconds``."""
    if series.step_seconds != config.detection_step_seconds:
        series = interval_average_downsample(series, config.detection_step_seconds)
    report = detect_and_compensate(series, config)
    return interval_average_downsample(report.compensated, target_step_seconds), report
