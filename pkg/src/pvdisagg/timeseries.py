"""Uniform time-series containers and the resampling/filtering/alignment
operations shared by every estimator.

All series are regularly sampled: a start timestamp (integer epoch seconds,
UTC), a positive integer step, and equal-length value arrays. Arrays are
stored read-only so the containers behave as immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, TypeVar, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SECONDS_PER_DAY = 86400
PHASE_LABELS = ("1", "2", "3", "aggregate")


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_step(step_seconds: int) -> int:
    if int(step_seconds) != step_seconds or step_seconds <= 0:
        raise ValueError(f"step_seconds must be a positive integer, got {step_seconds!r}")
    step_seconds = int(step_seconds)
    if SECONDS_PER_DAY % step_seconds:
        raise ValueError(f"step_seconds={step_seconds} does not divide 86400")
    return step_seconds


class _Regular:
    """Shared time-axis behaviour for the regular series types."""

    start: int
    step_seconds: int

    def __len__(self) -> int:
        return len(self._values()[0])

    def _values(self) -> tuple[np.ndarray, ...]:
        raise NotImplementedError

    @property
    def end(self) -> int:
        """Timestamp of the last sample."""
        return self.start + (len(self) - 1) * self.step_seconds

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step_seconds * np.arange(len(self), dtype=np.int64)

    def day_index(self) -> np.ndarray:
        """Integer UTC day number of every sample."""
        return self.times // SECONDS_PER_DAY


@dataclass(frozen=True, eq=False)
class PowerSeries(_Regular):
    """Active (kW) and reactive (kVAR) power, positive = consumption.

    Estimator outputs may carry NaN where a quantity is undefined (for
    example nighttime samples of the linear estimator, or the reactive part
    of an active-power-only reconstruction); ingestion never does.
    """

    start: int
    step_seconds: int
    active_kw: np.ndarray
    reactive_kvar: np.ndarray
    phase_label: str = "aggregate"

    def __post_init__(self):
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "step_seconds", _check_step(self.step_seconds))
        object.__setattr__(self, "active_kw", _frozen(self.active_kw, "active_kw"))
        object.__setattr__(self, "reactive_kvar", _frozen(self.reactive_kvar, "reactive_kvar"))
        if len(self.active_kw) != len(self.reactive_kvar):
            raise ValueError(
                f"active_kw and reactive_kvar differ in length "
                f"({len(self.active_kw)} != {len(self.reactive_kvar)})"
            )
        label = str(self.phase_label)
        if label not in PHASE_LABELS:
            raise ValueError(f"phase_label must be one of {PHASE_LABELS}, got {label!r}")
        object.__setattr__(self, "phase_label", label)

    def _values(self):
        return self.active_kw, self.reactive_kvar

    def _with_values(self, arrays, start=None, step_seconds=None) -> "PowerSeries":
        return replace(
            self,
            start=self.start if start is None else start,
            step_seconds=self.step_seconds if step_seconds is None else step_seconds,
            active_kw=arrays[0],
            reactive_kvar=arrays[1],
        )

    def scaled(self, factor: float) -> "PowerSeries":
        return self._with_values((self.active_kw * factor, self.reactive_kvar * factor))

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.active_kw)) and np.all(np.isfinite(self.reactive_kvar)))


@dataclass(frozen=True, eq=False)
class IrradianceProxy(_Regular):
    """Active power of a nearby, separately metered PV plant (kW, >= 0)."""

    start: int
    step_seconds: int
    power_kw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "step_seconds", _check_step(self.step_seconds))
        object.__setattr__(self, "power_kw", _frozen(self.power_kw, "power_kw"))

    def _values(self):
        return (self.power_kw,)

    def _with_values(self, arrays, start=None, step_seconds=None) -> "IrradianceProxy":
        return replace(
            self,
            start=self.start if start is None else start,
            step_seconds=self.step_seconds if step_seconds is None else step_seconds,
            power_kw=arrays[0],
        )


@dataclass(frozen=True, eq=False)
class DaytimeMask:
    flags: np.ndarray

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool, copy=True)
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)

    def __len__(self) -> int:
        return len(self.flags)

    def __invert__(self) -> "DaytimeMask":
        return DaytimeMask(~self.flags)

    def __and__(self, other: "DaytimeMask") -> "DaytimeMask":
        return DaytimeMask(self.flags & np.asarray(getattr(other, "flags", other), dtype=bool))

    @property
    def count(self) -> int:
        return int(self.flags.sum())


Series = Union[PowerSeries, IrradianceProxy]
S = TypeVar("S", PowerSeries, IrradianceProxy)


def _step_ratio(coarse: int, fine: int, what: str) -> int:
    if coarse <= 0 or fine <= 0 or coarse % fine:
        raise ValueError(f"{what}: {coarse} s is not a positive multiple of {fine} s")
    return coarse // fine


def interval_average_downsample(series: S, target_step_seconds: int) -> S:
    """Average consecutive non-overlapping windows down to ``target_step_seconds``.

    A trailing partial window is dropped. The output starts at the input start
    timestamp, i.e. each output sample is labelled by the left edge of its
    window.
    """
    ratio = _step_ratio(int(target_step_seconds), series.step_seconds, "interval_average_downsample")
    n_out = len(series) // ratio
    if n_out == 0:
        raise ValueError(f"series of {len(series)} samples is shorter than one {target_step_seconds} s window")
    out = [v[: n_out * ratio].reshape(n_out, ratio).mean(axis=1) for v in series._values()]
    return series._with_values(out, step_seconds=int(target_step_seconds))


def pad_hold_upsample(series: S, target_step_seconds: int) -> S:
    """Repeat every sample until the next one arrives (zero-order hold)."""
    ratio = _step_ratio(series.step_seconds, int(target_step_seconds), "pad_hold_upsample")
    out = [np.repeat(v, ratio) for v in series._values()]
    return series._with_values(out, step_seconds=int(target_step_seconds))


def trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean with a growing window over the first ``window - 1`` samples."""
    values = np.asarray(values, dtype=float)
    padded = np.concatenate((np.zeros(window - 1), values))
    sums = sliding_window_view(padded, window).sum(axis=1)
    return sums / np.minimum(np.arange(1, len(values) + 1), window)


def _centered_mean(values: np.ndarray, window: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    n = len(values)
    before = window // 2
    after = window - 1 - before
    padded = np.concatenate((np.zeros(before), values, np.zeros(after)))
    sums = sliding_window_view(padded, window).sum(axis=1)
    i = np.arange(n)
    counts = np.minimum(i + after, n - 1) - np.maximum(i - before, 0) + 1
    return sums / counts


def moving_average(series: IrradianceProxy, window_seconds: int, centered: bool = False) -> IrradianceProxy:
    """Moving-average filter of ``window_seconds`` (trailing by default).

    Warm-up samples average over the history that is available, so the output
    has the same length as the input.
    """
    if window_seconds < series.step_seconds:
        raise ValueError(f"window of {window_seconds} s is shorter than one {series.step_seconds} s step")
    window = _step_ratio(int(window_seconds), series.step_seconds, "moving_average")
    smooth = _centered_mean if centered else trailing_mean
    return series._with_values([smooth(v, window) for v in series._values()])


def align(series_list: Sequence[S]) -> list[S]:
    """Trim every series to the common time range so they align sample for sample."""
    if not series_list:
        return []
    step = series_list[0].step_seconds
    for s in series_list:
        if s.step_seconds != step:
            raise ValueError(f"cannot align series with steps {step} s and {s.step_seconds} s")
        if (s.start - series_list[0].start) % step:
            raise ValueError("series start times are not on a common sampling grid")
    lo = max(s.start for s in series_list)
    hi = min(s.end for s in series_list)
    if hi < lo:
        raise ValueError("series time ranges do not intersect")
    out = []
    for s in series_list:
        i0 = (lo - s.start) // step
        i1 = (hi - s.start) // step + 1
        out.append(s._with_values([v[i0:i1] for v in s._values()], start=lo))
    return out


def check_aligned(*series: Series) -> None:
    """Raise ValueError unless all series share start, step and length."""
    first = series[0]
    for s in series[1:]:
        if (s.start, s.step_seconds, len(s)) != (first.start, first.step_seconds, len(first)):
            raise ValueError(
                "series are not aligned: "
                f"(start, step, n) = {(first.start, first.step_seconds, len(first))} "
                f"vs {(s.start, s.step_seconds, len(s))}"
            )


def daytime_mask(proxy: IrradianceProxy, threshold_kw: float = 0.0) -> DaytimeMask:
    """Flag samples where the proxy strictly exceeds ``threshold_kw``."""
    return DaytimeMask(proxy.power_kw > threshold_kw)


def clock_window_mask(series: Series, start_hour: float = 0.0, end_hour: float = 5.0,
                      utc_offset_hours: float = 0.0) -> DaytimeMask:
    """Flag samples whose local clock time falls in ``[start_hour, end_hour)``.

    Windows that wrap midnight (``start_hour > end_hour``) are supported.
    """
    local = (series.times + utc_offset_hours * 3600.0) % SECONDS_PER_DAY / 3600.0
    if start_hour <= end_hour:
        flags = (local >= start_hour) & (local < end_hour)
    else:
        flags = (local >= start_hour) | (local < end_hour)
    return DaytimeMask(flags)


def sum_phases(phases: Sequence[PowerSeries]) -> PowerSeries:
    """Aggregate per-phase series into a single feeder-level series."""
    check_aligned(*phases)
    p = np.sum([s.active_kw for s in phases], axis=0)
    q = np.sum([s.reactive_kvar for s in phases], axis=0)
    return PowerSeries(phases[0].start, phases[0].step_seconds, p, q, "aggregate")


def split_phases(series: PowerSeries, weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3)) -> list[PowerSeries]:
    """Split an aggregate series into per-phase series with fixed shares."""
    if not np.isclose(sum(weights), 1.0):
        raise ValueError("phase weights must sum to 1")
    return [
        PowerSeries(series.start, series.step_seconds, series.active_kw * w, series.reactive_kvar * w, str(i + 1))
        for i, w in enumerate(weights)
    ]


def fill_gaps(timestamps, values, step_seconds: int, max_gap_seconds: int):
    """Linearly interpolate an irregular record onto a regular grid.

    ``values`` may be 1-D or 2-D (samples x channels). Gaps longer than
    ``max_gap_seconds`` raise ValueError instead of being bridged. Returns
    ``(start, filled_values)``.
    """
    t = np.asarray(timestamps, dtype=np.int64)
    v = np.asarray(values, dtype=float)
    if len(t) == 0:
        raise ValueError("no samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    if (t[-1] - t[0]) % step_seconds or np.any((t - t[0]) % step_seconds):
        raise ValueError("timestamps are not on a regular grid of the requested step")
    gaps = np.diff(t) - step_seconds
    if np.any(gaps > max_gap_seconds):
        worst = int(gaps.max())
        raise ValueError(f"gap of {worst} s exceeds max_gap_seconds={max_gap_seconds}")
    grid = np.arange(t[0], t[-1] + 1, step_seconds)
    if v.ndim == 1:
        return int(t[0]), np.interp(grid, t, v)
    return int(t[0]), np.column_stack([np.interp(grid, t, v[:, j]) for j in range(v.shape[1])])
