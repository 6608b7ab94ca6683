"""Contextually supervised generation estimation with squared-error losses.

The separation problem on the daytime samples is::

    minimise   alpha * ||P_load - (R + k_eff Q)||^2 + beta * ||P_pv - C_eff phi||^2
    subject to P_load + P_pv = P

For fixed coefficients the optimum assigns every source its model prediction
plus a fixed share of the aggregate residual, the share of source j being
``(1/w_j) / sum_i (1/w_i)``. The optimal coefficients do not depend on the
weights and equal the ordinary least squares fit of the aggregate model, so
they are fitted once; :func:`solve_separation_kkt` re-solves the joint problem
directly to check this.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import sparse

from . import metrics
from .linear_estimator import active_only, load_model_prediction
from .qp import solve_eqp
from .regression import LinearModelFit, fit_day_aggregate_model, fit_night_load_model
from .timeseries import (
    DaytimeMask,
    IrradianceProxy,
    PowerSeries,
    check_aligned,
    daytime_mask,
    interval_average_downsample,
    pad_hold_upsample,
)


class VarianceClampWarning(UserWarning):
    """Daytime aggregate variance does not exceed the nighttime load variance."""


@dataclass(frozen=True)
class CsgeWeights:
    alpha: float
    beta: float
    provenance: str = "manual"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0) or not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError(f"weights must be positive and finite, got alpha={self.alpha}, beta={self.beta}")
        if self.provenance not in ("star", "manual"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def ratio(self) -> float:
        return self.alpha / self.beta

    @classmethod
    def from_ratio(cls, ratio: float) -> "CsgeWeights":
        return cls(float(ratio), 1.0, "manual")


@dataclass(frozen=True)
class VarianceEstimate:
    var_load: float
    var_total: float
    var_pv: float
    clamped: bool = False


@dataclass(frozen=True, eq=False)
class CsgeResult:
    load_star: PowerSeries
    pv_star: PowerSeries
    theta: LinearModelFit
    weights: CsgeWeights
    residual_share_load: float
    residual_share_pv: float
    mask: DaytimeMask

    @property
    def load(self) -> PowerSeries:
        return self.load_star

    @property
    def pv(self) -> PowerSeries:
        return self.pv_star


def residual_shares(weights) -> np.ndarray:
    """Fraction of the aggregate residual assigned to each source."""
    w = np.asarray(weights, dtype=float)
    if np.any(~(w > 0)):
        raise ValueError("weights must be positive")
    inv = 1.0 / w
    return inv / inv.sum()


def closed_form_sources(predictions, aggregate, weights) -> np.ndarray:
    """Optimal source signals given their model predictions.

    Parameters
    ----------
    predictions : array (N, T)
        Model prediction of every source.
    aggregate : array (T,)
        Observed sum of the sources.
    weights : array (N,)
        Positive loss weights.

    Returns
    -------
    array (N, T)
        Reconstructed sources; their column sums equal ``aggregate``.
    """
    pred = np.atleast_2d(np.asarray(predictions, dtype=float))
    shares = residual_shares(weights)
    if len(shares) != pred.shape[0]:
        raise ValueError("one weight per source is required")
    residual = np.asarray(aggregate, dtype=float) - pred.sum(axis=0)
    out = pred + shares[:, None] * residual[None, :]
    # put the rounding left over by the sum constraint on the largest share
    j = int(np.argmax(shares))
    out[j] += np.asarray(aggregate, dtype=float) - out.sum(axis=0)
    return out


def estimate_weights(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                     theta: LinearModelFit | None = None) -> tuple[VarianceEstimate, CsgeWeights]:
    """Inverse-variance weights from the night load fit and the day aggregate fit.

    When the daytime aggregate variance does not exceed the nighttime load
    variance by at least ``max(1% of var_total, 1 kW^2)``, the PV variance is
    clamped to that floor and a :class:`VarianceClampWarning` is issued.
    """
    night = fit_night_load_model(series, mask)
    day = theta if theta is not None else fit_day_aggregate_model(series, proxy, mask)
    var_load = night.residual_variance
    var_total = day.residual_variance
    floor = max(0.01 * var_total, 1.0)
    var_pv = var_total - var_load
    clamped = var_pv < floor
    if clamped:
        warnings.warn(
            f"daytime aggregate variance {var_total:.4g} kW^2 does not exceed nighttime load "
            f"variance {var_load:.4g} kW^2; PV variance clamped to {floor:.4g} kW^2",
            VarianceClampWarning,
            stacklevel=2,
        )
        var_pv = floor
    var_load_w = max(var_load, 1e-12)
    est = VarianceEstimate(var_load, var_total, var_pv, clamped)
    return est, CsgeWeights(1.0 / var_load_w, 1.0 / var_pv, "star")


def disaggregate_csge(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                      weights: CsgeWeights, theta: LinearModelFit | None = None) -> CsgeResult:
    """Closed-form reconstruction of load and PV on the daytime samples."""
    check_aligned(series, proxy)
    if len(mask) != len(series):
        raise ValueError("mask and series differ in length")
    if theta is None:
        theta = fit_day_aggregate_model(series, proxy, mask)
    day = mask.flags
    load_model = load_model_prediction(series, theta)[day]
    pv_model = theta["C_eff"] * proxy.power_kw[day]
    sources = closed_form_sources(np.vstack([load_model, pv_model]), series.active_kw[day],
                                  [weights.alpha, weights.beta])
    load = np.full(len(series), np.nan)
    pv = np.full(len(series), np.nan)
    load[day], pv[day] = sources
    s_load, s_pv = residual_shares([weights.alpha, weights.beta])
    return CsgeResult(active_only(series, load), active_only(series, pv), theta, weights,
                      float(s_load), float(s_pv), mask)


# --- direct solve of the joint problem -------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointSolution:
    theta: np.ndarray  # (R, k_eff, C_eff)
    load: np.ndarray
    pv: np.ndarray
    kkt_residual: float


def solve_separation_kkt(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                         alpha: float, beta: float) -> JointSolution:
    """Solve the weighted separation problem jointly over signals and coefficients.

    The signals are written as model plus deviation, ``P_load = R + k_eff Q + u``
    and ``P_pv = C_eff phi + v``, so the variables are ``[u (T), v (T), R,
    k_eff, C_eff]``, the objective is ``alpha |u|^2 + beta |v|^2`` and the
    constraint reads ``u + v + R + k_eff Q + C_eff phi = P``. Nothing here
    presumes the OLS answer; the coefficients enter the constraint directly,
    which keeps them well determined even for extreme weight ratios. The
    objective is scaled by ``1/max(alpha, beta)``, which leaves the minimiser
    unchanged.
    """
    day = mask.flags
    P = series.active_kw[day]
    Q = series.reactive_kvar[day]
    phi = proxy.power_kw[day]
    T = len(P)
    a, b = np.array([alpha, beta], float) / max(alpha, beta)
    M = np.column_stack([np.ones(T), Q, phi])
    H = sparse.block_diag([2.0 * a * sparse.identity(T), 2.0 * b * sparse.identity(T),
                           sparse.csc_matrix((3, 3))], format="csc")
    eye = sparse.identity(T, format="csc")
    A = sparse.hstack([eye, eye, sparse.csc_matrix(M)], format="csc")
    sol = solve_eqp(H, np.zeros(2 * T + 3), A, P)
    u, v, theta = sol.x[:T], sol.x[T:2 * T], sol.x[2 * T:]
    load = theta[0] + theta[1] * Q + u
    pv = theta[2] * phi + v
    return JointSolution(theta, load, pv, sol.kkt_residual)


@dataclass(frozen=True)
class ThetaCheckRow:
    alpha: float
    beta: float
    R: float
    k_eff: float
    C_eff: float
    max_rel_dev: float
    kkt_residual: float


@dataclass(frozen=True)
class ThetaIndependenceReport:
    ok: bool
    tolerance: float
    ols: tuple[float, float, float]
    rows: tuple[ThetaCheckRow, ...]
    message: str

    @property
    def max_rel_dev(self) -> float:
        return max(r.max_rel_dev for r in self.rows)


def verify_theta_weight_independence(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                                     weight_pairs: Sequence[tuple[float, float]],
                                     tolerance: float = 1e-6,
                                     max_kkt_residual: float = 1e-8) -> ThetaIndependenceReport:
    """Re-solve the joint problem per weight pair and compare coefficients with OLS."""
    pairs = [(float(a), float(b)) for a, b in weight_pairs]
    if not pairs:
        raise ValueError("at least one weight pair is required")
    ols = fit_day_aggregate_model(series, proxy, mask)
    ref = np.array([ols["R"], ols["k_eff"], ols["C_eff"]])
    rows, problems = [], []
    for a, b in pairs:
        CsgeWeights(a, b)
        sol = solve_separation_kkt(series, proxy, mask, a, b)
        dev = float(np.max(np.abs(sol.theta - ref) / np.abs(ref)))
        rows.append(ThetaCheckRow(a, b, *map(float, sol.theta), dev, sol.kkt_residual))
        if not sol.kkt_residual <= max_kkt_residual:
            problems.append(f"KKT solve for (alpha={a:g}, beta={b:g}) did not converge "
                            f"(relative residual {sol.kkt_residual:.2e})")
        elif dev > tolerance:
            problems.append(f"theta for (alpha={a:g}, beta={b:g}) deviates from OLS by {dev:.2e}")
    ok = not problems
    msg = "theta agrees with OLS for all weight pairs" if ok else "; ".join(problems)
    return ThetaIndependenceReport(ok, tolerance, tuple(map(float, ref)), tuple(rows), msg)


# --- sensitivity sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class WeightSweepRow:
    ratio: float
    rmse_pv: float
    rmse_load: float
    mae_load: float
    mae_pv: float
    is_star: bool


def weight_sensitivity_sweep(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                             truth_pv: PowerSeries, truth_load: PowerSeries,
                             ratios: Sequence[float], include_star: bool = True) -> list[WeightSweepRow]:
    """Score reconstructions for a range of ``alpha/beta`` plus the variance-derived ratio.

    Rows are sorted by ratio; the variance-derived row has ``is_star=True``.
    With ``include_star=False`` only the requested ratios are scored.
    """
    ratios = [float(r) for r in ratios]
    if not ratios:
        raise ValueError("empty ratio list")
    theta = fit_day_aggregate_model(series, proxy, mask)
    _, star = estimate_weights(series, proxy, mask, theta)
    cells = [(r, False) for r in ratios] + ([(star.ratio, True)] if include_star else [])
    rows = []
    for ratio, is_star in cells:
        res = disaggregate_csge(series, proxy, mask, CsgeWeights.from_ratio(ratio), theta)
        pv = metrics.score(res.pv_star, truth_pv, mask=mask)
        load = metrics.score(res.load_star, truth_load, mask=mask)
        rows.append(WeightSweepRow(ratio, pv.rmse_kw, load.rmse_kw, load.mae_kw, pv.mae_kw, is_star))
    rows.sort(key=lambda r: (r.ratio, r.is_star))
    return rows


@dataclass(frozen=True)
class SamplingSweepRow:
    rate_per_min: float
    window_minutes: float
    rmse_pv: float
    mae_pv: float
    rmse_pv_2sigma: float
    mae_pv_2sigma: float
    rmse_load: float
    mae_load: float
    mae_load_2sigma: float
    alpha_over_beta: float


def _window_steps(rate_per_min, step_seconds: int) -> int:
    rate = Fraction(rate_per_min).limit_denominator(10_000)
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate_per_min}")
    window = Fraction(60) / rate / step_seconds
    if abs(float(rate) - float(rate_per_min)) > 1e-9 * float(rate) or window.denominator != 1:
        raise ValueError(f"rate {rate_per_min}/min is not an integer downsampling of the {step_seconds} s base")
    return int(window)


def resample_hold(series, steps: int):
    """Interval-average over ``steps`` base samples, then hold back to the base step."""
    if steps == 1:
        return series
    coarse = interval_average_downsample(series, series.step_seconds * steps)
    return pad_hold_upsample(coarse, series.step_seconds)


def sampling_rate_sweep(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                        truth_pv: PowerSeries, truth_load: PowerSeries | None = None,
                        rates: Sequence[float] = (1 / 15, 1 / 10, 1 / 5, 1 / 2, 1.0),
                        threshold_kw: float = 0.0) -> list[SamplingSweepRow]:
    """Re-estimate and score CSGE on inputs observed at coarser sampling rates.

    For each rate (samples per minute) the substation series and the proxy are
    interval-averaged, held back to the base step, the weights are
    re-estimated, and the reconstruction is scored at the base resolution on
    ``mask``. Two-sigma bands are taken across UTC days.
    """
    check_aligned(series, proxy, truth_pv)
    if not rates:
        raise ValueError("empty rate list")
    windows = [(float(r), _window_steps(r, series.step_seconds)) for r in rates]
    rows = []
    for rate, steps in windows:
        s = resample_hold(series, steps)
        p = resample_hold(proxy, steps)
        n = len(s)
        est_mask = daytime_mask(p, threshold_kw)
        _, w = estimate_weights(s, p, est_mask)
        res = disaggregate_csge(s, p, est_mask, w)
        score_mask = DaytimeMask(mask.flags[:n] & est_mask.flags)
        pv = metrics.score(res.pv_star, _head(truth_pv, n), mask=score_mask)
        if truth_load is not None:
            load = metrics.score(res.load_star, _head(truth_load, n), mask=score_mask)
            load_vals = (load.rmse_kw, load.mae_kw, load.mae_2sigma_kw)
        else:
            load_vals = (math.nan, math.nan, math.nan)
        rows.append(SamplingSweepRow(rate, steps * series.step_seconds / 60.0, pv.rmse_kw, pv.mae_kw,
                                     pv.rmse_2sigma_kw, pv.mae_2sigma_kw, *load_vals, w.ratio))
    return rows


def _head(series: PowerSeries, n: int) -> PowerSeries:
    if len(series) == n:
        return series
    return series._with_values([v[:n] for v in series._values()])
