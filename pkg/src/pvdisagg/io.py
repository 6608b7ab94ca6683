"""CSV ingestion and emission for power series, proxies, events and tables.

Formats::

    timestamp,active_kw,reactive_kvar          (single series)
    timestamp,phase,active_kw,reactive_kvar    (per-phase file)
    timestamp,power_kw                         (irradiance proxy)

Timestamps are ISO-8601 UTC (``2020-01-01T00:00:00Z``). Ingestion rejects
gaps, irregular sampling and non-finite values; use
:func:`pvdisagg.timeseries.fill_gaps` on the raw columns to repair a record
explicitly.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .timeseries import IrradianceProxy, PowerSeries


class IngestError(ValueError):
    """A CSV file does not satisfy the series invariants."""


def parse_timestamp(text: str) -> int:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(epoch_seconds: int) -> str:
    return datetime.fromtimestamp(int(epoch_seconds), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _format_value(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def _regular(path, times: list[int]) -> tuple[int, int]:
    if len(times) < 1:
        raise IngestError(f"{path}: no data rows")
    if len(times) == 1:
        raise IngestError(f"{path}: a single row does not define a sampling step")
    t = np.asarray(times, dtype=np.int64)
    steps = np.diff(t)
    step = int(steps[0])
    if step <= 0 or np.any(steps != step):
        bad = int(np.argmax(steps != step)) + 1 if np.any(steps != step) else 1
        raise IngestError(f"{path}: irregular sampling or gap near row {bad + 1}")
    return int(t[0]), step


def _floats(path, rows, column: str, allow_missing: bool = False) -> np.ndarray:
    try:
        values = np.array([float(r[column]) if (r[column] or not allow_missing) else math.nan
                           for r in rows])
    except (KeyError, ValueError, TypeError) as exc:
        raise IngestError(f"{path}: bad or missing column {column!r}: {exc}") from None
    if allow_missing:
        values[np.isinf(values)] = math.nan
    elif not np.all(np.isfinite(values)):
        raise IngestError(f"{path}: non-finite value in column {column!r}")
    return values


def read_phases_csv(path, allow_missing: bool = False) -> dict[str, PowerSeries]:
    """Read a power CSV and return one series per phase label.

    ``allow_missing`` reads empty fields as NaN instead of rejecting them; it
    is meant for estimator output, which leaves nighttime samples undefined.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise IngestError(f"{path}: empty file")
    groups: dict[str, list[dict]] = {}
    for r in rows:
        groups.setdefault(r.get("phase") or "aggregate", []).append(r)
    out = {}
    for label, group in groups.items():
        start, step = _regular(path, [parse_timestamp(r["timestamp"]) for r in group])
        p = _floats(path, group, "active_kw", allow_missing)
        q = _floats(path, group, "reactive_kvar", allow_missing)
        try:
            out[label] = PowerSeries(start, step, p, q, label)
        except ValueError as exc:
            raise IngestError(f"{path}: {exc}") from None
    return out


def read_power_csv(path, phase: str | None = None, allow_missing: bool = False) -> PowerSeries:
    phases = read_phases_csv(path, allow_missing)
    if phase is not None:
        if phase not in phases:
            raise IngestError(f"{path}: phase {phase!r} not present (have {sorted(phases)})")
        return phases[phase]
    if len(phases) > 1:
        raise IngestError(f"{path}: file holds phases {sorted(phases)}; choose one")
    return next(iter(phases.values()))


def write_power_csv(path, series: PowerSeries | Sequence[PowerSeries]) -> None:
    many = not isinstance(series, PowerSeries)
    items = list(series) if many else [series]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "phase", "active_kw", "reactive_kvar"] if many
                   else ["timestamp", "active_kw", "reactive_kvar"])
        for s in items:
            for t, p, q in zip(s.times, s.active_kw, s.reactive_kvar):
                row = [format_timestamp(t)]
                if many:
                    row.append(s.phase_label)
                w.writerow(row + [_format_value(p), _format_value(q)])


def read_proxy_csv(path) -> IrradianceProxy:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    start, step = _regular(path, [parse_timestamp(r["timestamp"]) for r in rows])
    try:
        return IrradianceProxy(start, step, _floats(path, rows, "power_kw"))
    except ValueError as exc:
        raise IngestError(f"{path}: {exc}") from None


def write_proxy_csv(path, proxy: IrradianceProxy) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "power_kw"])
        for t, v in zip(proxy.times, proxy.power_kw):
            w.writerow([format_timestamp(t), _format_value(v)])


def write_events_csv(path, events: Iterable[tuple[int, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "delta_kvar"])
        for t, dq in events:
            w.writerow([format_timestamp(t), repr(float(dq))])


def write_table_csv(path, rows: Sequence) -> None:
    """Write dataclass rows, header named after the fields, to a path or open text stream."""
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in dataclasses.fields(rows[0])]

    def emit(fh):
        w = csv.writer(fh)
        w.writerow(names)
        for r in rows:
            w.writerow([getattr(r, n) for n in names])

    if hasattr(path, "write"):
        emit(path)
    else:
        with open(path, "w", newline="") as fh:
            emit(fh)
