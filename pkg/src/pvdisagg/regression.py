"""Ordinary least squares for the load and aggregate feeder models.

Two models are fitted on substation data::

    night:  P = R + k_eff * Q + e_load                 (proxy <= threshold)
    day:    P = R + k_eff * Q + C_eff * phi + e_total  (proxy >  threshold)

Coefficients are solved with a QR factorisation of the design matrix; the
covariance and the classical standard errors come from the triangular factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .timeseries import DaytimeMask, IrradianceProxy, PowerSeries, check_aligned

CONDITION_LIMIT = 1e10
MIN_SAMPLES = 10


class SingularDesignError(ValueError):
    """The design matrix is rank deficient or too ill-conditioned to solve."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Named regressor columns; the intercept, if any, comes first."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[1] != len(self.names):
            raise ValueError(f"design of shape {values.shape} does not match {len(self.names)} names")
        if not np.all(np.isfinite(values)):
            raise ValueError("design matrix contains non-finite entries")
        if values.shape[0] <= values.shape[1]:
            raise ValueError(f"need more observations than columns, got n={values.shape[0]}, p={values.shape[1]}")
        values.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)

    @classmethod
    def with_intercept(cls, intercept_name: str = "R", **columns) -> "DesignMatrix":
        cols = [np.asarray(c, dtype=float) for c in columns.values()]
        n = len(cols[0]) if cols else 0
        return cls((intercept_name, *columns), np.column_stack([np.ones(n), *cols]))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LinearModelFit:
    names: tuple[str, ...]
    coefficients: tuple[float, ...]
    standard_errors: tuple[float, ...]
    residual_variance: float
    r_squared: float
    adjusted_r_squared: float
    n: int

    def __getitem__(self, name: str) -> float:
        return self.coefficients[self.names.index(name)]

    def se(self, name: str) -> float:
        return self.standard_errors[self.names.index(name)]

    @property
    def params(self) -> dict[str, float]:
        return dict(zip(self.names, self.coefficients))

    @property
    def p_values(self) -> tuple[float, ...]:
        dof = self.n - len(self.names)
        out = []
        for b, s in zip(self.coefficients, self.standard_errors):
            if s == 0.0:
                out.append(0.0 if b != 0.0 else 1.0)
            else:
                out.append(float(2 * stats.t.sf(abs(b / s), dof)))
        return tuple(out)

    def predict(self, design: DesignMatrix) -> np.ndarray:
        if design.names != self.names:
            raise ValueError(f"design columns {design.names} do not match fit {self.names}")
        return design.values @ np.asarray(self.coefficients)


def _stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.10 else ""


def normal_condition(X: np.ndarray) -> float:
    """Condition number of the column-equilibrated normal matrix X'X."""
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0.0):
        return np.inf
    s = np.linalg.svd(X / norms, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float((s[0] / s[-1]) ** 2)


def ols_fit(X: DesignMatrix, y) -> LinearModelFit:
    """Least-squares fit of ``y`` on the columns of ``X``.

    Raises
    ------
    SingularDesignError
        If any column is identically zero or the equilibrated normal matrix
        has a condition number above ``CONDITION_LIMIT``.
    """
    y = np.asarray(y, dtype=float)
    A = X.values
    if y.shape != (X.n,):
        raise ValueError(f"response of shape {y.shape} does not match {X.n} observations")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")
    zero = [name for name, col in zip(X.names, A.T) if not np.any(col)]
    if zero:
        raise SingularDesignError(f"regressor column(s) {zero} are identically zero", np.inf)
    cond = normal_condition(A)
    if not cond < CONDITION_LIMIT:
        raise SingularDesignError(
            f"normal matrix is singular or ill-conditioned (condition ~ {cond:.3g} >= {CONDITION_LIMIT:g}); "
            f"columns {X.names} are (nearly) collinear",
            cond,
        )

    Qm, Rm = linalg.qr(A, mode="economic")
    beta = linalg.solve_triangular(Rm, Qm.T @ y)
    resid = y - A @ beta
    n, p = X.n, X.p
    ssr = float(resid @ resid)
    sigma2 = ssr / (n - p)
    Rinv = linalg.solve_triangular(Rm, np.eye(p))
    cov = sigma2 * (Rinv @ Rinv.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 0.0 if sst == 0.0 else 1.0 - ssr / sst
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p)
    return LinearModelFit(
        names=X.names,
        coefficients=tuple(float(b) for b in beta),
        standard_errors=tuple(float(s) for s in se),
        residual_variance=sigma2,
        r_squared=r2,
        adjusted_r_squared=min(adj, r2),
        n=n,
    )


def night_design(series: PowerSeries, rows: np.ndarray) -> DesignMatrix:
    return DesignMatrix.with_intercept(k_eff=series.reactive_kvar[rows])


def day_design(series: PowerSeries, proxy: IrradianceProxy, rows: np.ndarray) -> DesignMatrix:
    return DesignMatrix.with_intercept(k_eff=series.reactive_kvar[rows], C_eff=proxy.power_kw[rows])


def _rows(flags: np.ndarray, what: str, min_samples: int) -> np.ndarray:
    rows = np.flatnonzero(flags)
    if len(rows) < min_samples:
        raise ValueError(f"{what}: {len(rows)} samples, at least {min_samples} required")
    return rows


def fit_night_load_model(series: PowerSeries, mask: DaytimeMask, min_samples: int = MIN_SAMPLES) -> LinearModelFit:
    """Fit ``P = R + k_eff Q`` on the samples the mask marks as night."""
    if len(mask) != len(series):
        raise ValueError("mask and series differ in length")
    rows = _rows(~mask.flags, "night load model", min_samples)
    return ols_fit(night_design(series, rows), series.active_kw[rows])


def fit_day_aggregate_model(series: PowerSeries, proxy: IrradianceProxy, mask: DaytimeMask,
                            min_samples: int = MIN_SAMPLES) -> LinearModelFit:
    """Fit ``P = R + k_eff Q + C_eff phi`` on the daytime samples."""
    check_aligned(series, proxy)
    if len(mask) != len(series):
        raise ValueError("mask and series differ in length")
    rows = _rows(mask.flags, "day aggregate model", min_samples)
    return ols_fit(day_design(series, proxy, rows), series.active_kw[rows])


def summary_table(fits: Sequence[LinearModelFit], titles: Sequence[str] | None = None) -> str:
    """Plain-text coefficient table, standard errors in parentheses below."""
    titles = list(titles) if titles else [f"model {i + 1}" for i in range(len(fits))]
    names: list[str] = []
    for f in fits:
        names += [n for n in f.names if n not in names]
    width = max(14, *(len(t) + 2 for t in titles))
    lines = ["Coefficients".ljust(14) + "".join(t.rjust(width) for t in titles), "-" * (14 + width * len(fits))]
    for name in names:
        est, err = [], []
        for f in fits:
            if name in f.names:
                i = f.names.index(name)
                est.append(f"{f.coefficients[i]:.4g}{_stars(f.p_values[i])}")
                err.append(f"({f.standard_errors[i]:.4g})")
            else:
                est.append("")
                err.append("")
        lines.append(name.ljust(14) + "".join(e.rjust(width) for e in est))
        lines.append("".ljust(14) + "".join(e.rjust(width) for e in err))
    lines.append("-" * (14 + width * len(fits)))
    lines.append("Adjusted R^2".ljust(14) + "".join(f"{f.adjusted_r_squared:.3f}".rjust(width) for f in fits))
    lines.append("Observations".ljust(14) + "".join(str(f.n).rjust(width) for f in fits))
    lines.append("*, **, *** : significant at the 90%, 95%, 99% level")
    return "\n".join(lines)


def summary_rows(fit: LinearModelFit) -> list[dict]:
    """Machine-readable rows: one per coefficient plus fit statistics."""
    rows = [
        {"term": n, "estimate": b, "std_error": s, "p_value": pv, "stars": _stars(pv)}
        for n, b, s, pv in zip(fit.names, fit.coefficients, fit.standard_errors, fit.p_values)
    ]
    rows.append({"term": "residual_variance", "estimate": fit.residual_variance, "std_error": "", "p_value": "", "stars": ""})
    rows.append({"term": "r_squared", "estimate": fit.r_squared, "std_error": "", "p_value": "", "stars": ""})
    rows.append({"term": "adjusted_r_squared", "estimate": fit.adjusted_r_squared, "std_error": "", "p_value": "", "stars": ""})
    rows.append({"term": "n", "estimate": fit.n, "std_error": "", "p_value": "", "stars": ""})
    return rows
