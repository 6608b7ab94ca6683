from __future__ import annotations

import numpy as np
import pytest

from pvdisagg.metrics import format_report, mae, rmse, score, two_sigma
from pvdisagg.timeseries import DaytimeMask, PowerSeries

T0 = 1577836800


def s(p, step=3600):
    p = np.asarray(p, dtype=float)
    return PowerSeries(T0, step, p, np.zeros_like(p))


def test_perfect_estimate():
    r = score(s([1.0, 2.0, 3.0]), s([1.0, 2.0, 3.0]))
    assert (r.rmse_kw, r.mae_kw, r.mean_error_kw) == (0.0, 0.0, 0.0)


def test_constant_offset():
    r = score(s([4.0, 5.0, 6.0]), s([1.0, 2.0, 3.0]))
    assert r.rmse_kw == pytest.approx(3.0) and r.mae_kw == pytest.approx(3.0)
    assert r.mean_error_kw == pytest.approx(3.0)


def test_capacity_percentage():
    truth = np.zeros(4)
    est = np.array([450.0, -450.0, 450.0, -450.0])
    assert score(s(est), s(truth), capacity_kw=7500).rmse_pct_capacity == pytest.approx(6.0)


def test_mask_and_undefined_samples():
    est = s([np.nan, 2.0, 5.0])
    truth = s([0.0, 1.0, 1.0])
    r = score(est, truth, mask=DaytimeMask(np.array([False, True, True])))
    assert r.n == 2 and r.rmse_kw == pytest.approx(np.sqrt((1 + 16) / 2))
    with pytest.raises(ValueError):
        score(est, truth)
    with pytest.raises(ValueError):
        score(est, truth, mask=DaytimeMask(np.zeros(3, bool)))


def test_per_day_and_bands():
    est = np.concatenate([np.full(24, 1.0), np.full(24, 3.0)])
    r = score(s(est), s(np.zeros(48)))
    assert [d.rmse_kw for d in r.per_day] == [1.0, 3.0]
    assert r.rmse_2sigma_kw == pytest.approx(2 * np.std([1.0, 3.0], ddof=1))
    text = format_report("pv", r)
    assert "2020-01-01: RMSE 1.0 kW" in text and "2 sigma" in text


def test_helpers():
    assert rmse([3, -4]) == pytest.approx(np.sqrt(12.5))
    assert mae([3, -4]) == 3.5
    assert two_sigma([5.0]) == 0.0


def test_misaligned_rejected():
    with pytest.raises(ValueError):
        score(s([1.0, 2.0]), s([1.0, 2.0, 3.0]))
