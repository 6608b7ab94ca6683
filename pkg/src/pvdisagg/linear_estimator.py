"""Linear estimator: the daytime aggregate regression with every residual
assigned to PV.

    load_hat = R + k_eff * Q
    pv_hat   = P - load_hat

Both are defined only on daytime samples; nighttime samples are NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regression import LinearModelFit, fit_day_aggregate_model
from .timeseries import DaytimeMask, IrradianceProxy, PowerSeries, check_aligned


@dataclass(frozen=True, eq=False)
class LeResult:
    load_hat: PowerSeries
    pv_hat: PowerSeries
    fit: LinearModelFit
    mask: DaytimeMask

    @property
    def load(self) -> PowerSeries:
        return self.load_hat

    @property
    def pv(self) -> PowerSeries:
        return self.pv_hat


def load_model_prediction(series: PowerSeries, fit: LinearModelFit) -> np.ndarray:
    return fit["R"] + fit["k_eff"] * series.reactive_kvar


def active_only(template: PowerSeries, active_kw: np.ndarray) -> PowerSeries:
    """A series carrying only active power; reactive power is NaN."""
    return PowerSeries(template.start, template.step_seconds, active_kw,
                       np.full(len(active_kw), np.nan), template.phase_label)


def disaggregate_le(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                    fit_mask: DaytimeMask | None = None) -> LeResult:
    """Reconstruct load and PV on ``mask``.

    ``fit_mask`` restricts the regression to a subset of the daytime samples
    (e.g. a training day) for holdout evaluation; reconstruction always covers
    the full ``mask``.
    """
    check_aligned(series, proxy)
    fit_on = mask if fit_mask is None else mask & fit_mask
    fit = fit_day_aggregate_model(series, proxy, fit_on)
    day = mask.flags
    load = np.where(day, load_model_prediction(series, fit), np.nan)
    pv = np.where(day, series.active_kw - load, np.nan)
    return LeResult(active_only(series, load), active_only(series, pv), fit, mask)
