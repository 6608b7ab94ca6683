"""Power-factor-based estimator.

Each sample is split by solving the 2x2 apparent-power balance::

    [cos L  cos V] [|S_load|]   [P]
    [sin L  sin V] [|S_pv|  ] = [Q]

with a constant load angle L learned overnight and a fixed PV angle V
(180 degrees, active power only, by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .timeseries import DaytimeMask, PowerSeries, check_aligned, clock_window_mask

DET_TOLERANCE = 1e-12


class SingularPowerFactorError(ValueError):
    """The balance matrix is not invertible (load angle at 90 or 270 degrees
    relative to the PV angle)."""


@dataclass(frozen=True)
class PowerFactorEstimate:
    cos_phi_load: float
    sin_phi_load: float
    source_window: tuple[int, int] = (0, 0)
    per_phase: bool = True

    def __post_init__(self):
        if not -1.0 < self.cos_phi_load <= 1.0:
            raise ValueError(f"cos_phi_load must lie in (-1, 1], got {self.cos_phi_load}")
        if abs(self.cos_phi_load ** 2 + self.sin_phi_load ** 2 - 1.0) > 1e-12:
            raise ValueError("cos^2 + sin^2 must equal 1")

    @classmethod
    def from_cos(cls, cos_phi: float, q_sign: float = 1.0, **kw) -> "PowerFactorEstimate":
        sin = math.copysign(math.sqrt(max(0.0, 1.0 - cos_phi * cos_phi)), q_sign)
        return cls(float(cos_phi), sin, **kw)


@dataclass(frozen=True)
class PfbeAssumptions:
    """Load power factor plus the PV power factor.

    The PV reactive part takes the consumption sign (``sin >= 0``), so
    ``cos_phi_pv = -1`` is a pure active-power injection.
    """

    pf_load: PowerFactorEstimate
    cos_phi_pv: float = -1.0
    sin_phi_pv: float = field(init=False)

    def __post_init__(self):
        if abs(self.cos_phi_pv) > 1.0:
            raise ValueError(f"|cos_phi_pv| must not exceed 1, got {self.cos_phi_pv}")
        object.__setattr__(self, "sin_phi_pv", math.sqrt(max(0.0, 1.0 - self.cos_phi_pv ** 2)))


@dataclass(frozen=True, eq=False)
class PfbeResult:
    load: PowerSeries
    pv: PowerSeries
    assumptions: PfbeAssumptions


@dataclass(frozen=True, eq=False)
class PfbeErrorBreakdown:
    times: np.ndarray
    total: np.ndarray
    pv_pf_error: np.ndarray
    load_pf_error: np.ndarray


def estimate_night_power_factor(series: PowerSeries, window: DaytimeMask | None = None,
                                start_hour: float = 0.0, end_hour: float = 5.0,
                                utc_offset_hours: float = 0.0) -> PowerFactorEstimate:
    """Median per-sample power factor over a nighttime clock window.

    The sign of the load angle follows the median sign of Q in the window.
    Samples with ``P = Q = 0`` are skipped.
    """
    if window is None:
        window = clock_window_mask(series, start_hour, end_hour, utc_offset_hours)
    if len(window) != len(series):
        raise ValueError("window mask and series differ in length")
    rows = np.flatnonzero(window.flags)
    if len(rows) == 0:
        raise ValueError("night window contains no samples")
    p = series.active_kw[rows]
    q = series.reactive_kvar[rows]
    s = np.hypot(p, q)
    keep = s > 0
    if not keep.any():
        raise ValueError("every sample in the night window has P = Q = 0")
    cos = float(np.median(p[keep] / s[keep]))
    q_sign = 1.0 if np.median(np.sign(q[keep])) >= 0 else -1.0
    times = series.times
    return PowerFactorEstimate.from_cos(
        min(cos, 1.0), q_sign,
        source_window=(int(times[rows[0]]), int(times[rows[-1]])),
        per_phase=series.phase_label != "aggregate",
    )


def solve_balance(P, Q, cos_load, sin_load, cos_pv, sin_pv):
    """Elementwise solution of the 2x2 balance; returns (|S_load|, |S_pv|).

    Angle arguments may be scalars or per-sample arrays.
    """
    det = np.asarray(cos_load * sin_pv - cos_pv * sin_load, dtype=float)
    if np.any(np.abs(det) < DET_TOLERANCE):
        raise SingularPowerFactorError(
            "power-factor matrix is singular: the load angle must differ from 90/270 degrees "
            "(sin(phi_load) != 0 when the PV injects active power only)"
        )
    s_load = (P * sin_pv - Q * cos_pv) / det
    s_pv = (cos_load * Q - sin_load * P) / det
    return s_load, s_pv


def disaggregate_pfbe(series: PowerSeries, assumptions: PfbeAssumptions) -> PfbeResult:
    pf = assumptions.pf_load
    cv, sv = assumptions.cos_phi_pv, assumptions.sin_phi_pv
    P, Q = series.active_kw, series.reactive_kvar
    s_load, s_pv = solve_balance(P, Q, pf.cos_phi_load, pf.sin_phi_load, cv, sv)
    pv = series._with_values((s_pv * cv, s_pv * sv))
    # the load part is the remainder so the balance holds to rounding
    load = series._with_values((P - pv.active_kw, Q - pv.reactive_kvar))
    return PfbeResult(load, pv, assumptions)


def _angles(series: PowerSeries, fallback_cos: float, fallback_sin: float):
    s = np.hypot(series.active_kw, series.reactive_kvar)
    ok = s > 1e-9
    cos = np.where(ok, series.active_kw / np.where(ok, s, 1.0), fallback_cos)
    sin = np.where(ok, series.reactive_kvar / np.where(ok, s, 1.0), fallback_sin)
    return cos, sin


def decompose_pfbe_error(series: PowerSeries, truth_pv: PowerSeries, truth_load: PowerSeries,
                         assumptions: PfbeAssumptions) -> PfbeErrorBreakdown:
    """PV active-power error under each power-factor assumption on its own.

    ``total`` keeps both assumptions; ``pv_pf_error`` uses the true per-sample
    load power factor with the assumed PV power factor; ``load_pf_error`` uses
    the true per-sample PV power factor with the assumed load power factor.
    Errors are ``truth - estimate``. Where PV apparent power is zero the
    assumed PV angle stands in for the undefined true angle.
    """
    check_aligned(series, truth_pv, truth_load)
    pf = assumptions.pf_load
    P, Q = series.active_kw, series.reactive_kvar
    cv, sv = assumptions.cos_phi_pv, assumptions.sin_phi_pv
    cl_true, sl_true = _angles(truth_load, pf.cos_phi_load, pf.sin_phi_load)
    cv_true, sv_true = _angles(truth_pv, cv, sv)

    def pv_estimate(cl, sl, cvv, svv):
        _, s_pv = solve_balance(P, Q, cl, sl, cvv, svv)
        return s_pv * cvv

    truth = truth_pv.active_kw
    return PfbeErrorBreakdown(
        times=series.times,
        total=truth - pv_estimate(pf.cos_phi_load, pf.sin_phi_load, cv, sv),
        pv_pf_error=truth - pv_estimate(cl_true, sl_true, cv, sv),
        load_pf_error=truth - pv_estimate(pf.cos_phi_load, pf.sin_phi_load, cv_true, sv_true),
    )


def calibrate_load_pf(series: PowerSeries, timestamp: int, true_pv_kw: float,
                      cos_phi_pv: float = -1.0) -> PowerFactorEstimate:
    """Load power factor that reproduces a known PV output at one timestamp.

    With the PV angle fixed, the known PV active power fixes the PV reactive
    power, and the remainder of the measured (P, Q) defines the load angle.
    """
    times = series.times
    hit = np.flatnonzero(times == int(timestamp))
    if len(hit) == 0:
        raise ValueError(f"timestamp {timestamp} is not a sample of the series")
    i = int(hit[0])
    sin_pv = math.sqrt(max(0.0, 1.0 - cos_phi_pv ** 2))
    pv_q = 0.0 if cos_phi_pv == 0 else true_pv_kw * sin_pv / cos_phi_pv
    p_load = series.active_kw[i] - true_pv_kw
    q_load = series.reactive_kvar[i] - pv_q
    s = math.hypot(p_load, q_load)
    if s == 0.0:
        raise ValueError("load apparent power is zero at the calibration point")
    return PowerFactorEstimate(p_load / s, q_load / s, (int(timestamp), int(timestamp)),
                               series.phase_label != "aggregate")
