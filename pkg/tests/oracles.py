"""Independent reference implementations used to check the package.

Each oracle takes the most literal route available (explicit loops, dense
linear algebra, textbook formulas) and shares no code with ``pvdisagg``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg


def window_means(values, ratio: int) -> list[float]:
    out = []
    for start in range(0, len(values) - ratio + 1, ratio):
        chunk = values[start:start + ratio]
        out.append(sum(float(v) for v in chunk) / ratio)
    return out


def hold(values, ratio: int) -> list[float]:
    out = []
    for v in values:
        out.extend([float(v)] * ratio)
    return out


def trailing_mean(values, window: int) -> list[float]:
    out = []
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        chunk = values[lo:i + 1]
        out.append(sum(float(v) for v in chunk) / len(chunk))
    return out


def centered_mean(values, window: int) -> list[float]:
    before = window // 2
    after = window - 1 - before
    out = []
    for i in range(len(values)):
        chunk = values[max(0, i - before):min(len(values), i + after + 1)]
        out.append(sum(float(v) for v in chunk) / len(chunk))
    return out


def capbank_literal(q, threshold: float):
    """Step detection and compensation, one sample at a time."""
    compensation = 0.0
    filtered = [float(q[0])]
    trace = [0.0]
    events = []
    for t in range(1, len(q)):
        dq = float(q[t - 1]) - float(q[t])
        if abs(dq) >= threshold:
            compensation += dq
            if abs(compensation) < threshold:
                compensation = 0.0
            events.append((t, dq))
        filtered.append(float(q[t]) + compensation)
        trace.append(compensation)
    return filtered, trace, events


def pfbe_per_sample(P, Q, cos_load, sin_load, cos_pv, sin_pv):
    """Solve the 2x2 apparent-power balance separately at every sample."""
    A = np.array([[cos_load, cos_pv], [sin_load, sin_pv]], dtype=float)
    s_load, s_pv = [], []
    for p, q in zip(P, Q):
        x = np.linalg.solve(A, np.array([p, q], dtype=float))
        s_load.append(x[0])
        s_pv.append(x[1])
    return np.array(s_load), np.array(s_pv)


def ols_classical(X, y):
    """Textbook OLS: lstsq coefficients, s^2 (X'X)^-1 covariance, centred R^2."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    resid = y - X @ beta
    s2 = float(resid @ resid) / (n - p)
    cov = s2 * np.linalg.inv(X.T @ X)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / sst
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p)
    return beta, np.sqrt(np.diag(cov)), s2, r2, adj


def eqp_null_space(H, c, A, b):
    """Minimise 1/2 x'Hx + c'x subject to Ax = b by the null-space method."""
    H = np.asarray(H, dtype=float)
    A = np.asarray(A, dtype=float)
    x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    Z = linalg.null_space(A)
    reduced = Z.T @ H @ Z
    g = Z.T @ (H @ x0 + c)
    y = np.linalg.solve(reduced, -g)
    return x0 + Z @ y


def separation_oracle(predictions, aggregate, weights):
    """Weighted source separation posed as a dense equality-constrained QP.

    Minimises sum_j w_j ||s_j - m_j||^2 subject to sum_j s_j = aggregate.
    """
    M = np.atleast_2d(np.asarray(predictions, dtype=float))
    N, T = M.shape
    w = np.asarray(weights, dtype=float)
    H = np.kron(np.diag(2.0 * w), np.eye(T))
    c = -2.0 * (w[:, None] * M).ravel()
    A = np.kron(np.ones((1, N)), np.eye(T))
    x = eqp_null_space(H, c, A, np.asarray(aggregate, dtype=float))
    return x.reshape(N, T)


def power_factor(p: float, q: float) -> float:
    return p / math.hypot(p, q)
