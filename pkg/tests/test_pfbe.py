from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from pvdisagg import simulator as sim
from pvdisagg.pfbe import (
    PfbeAssumptions,
    PowerFactorEstimate,
    SingularPowerFactorError,
    calibrate_load_pf,
    decompose_pfbe_error,
    disaggregate_pfbe,
    estimate_night_power_factor,
    solve_balance,
)
from pvdisagg.timeseries import PowerSeries, split_phases

T0 = 1577836800


def const(p, q, n=24, step=3600):
    return PowerSeries(T0, step, np.full(n, float(p)), np.full(n, float(q)), "1")


def test_purely_active_night():
    assert estimate_night_power_factor(const(1000, 0)).cos_phi_load == pytest.approx(1.0)


def test_three_four_five():
    pf = estimate_night_power_factor(const(300, 400))
    assert pf.cos_phi_load == pytest.approx(oracles.power_factor(300, 400))
    assert pf.cos_phi_load == pytest.approx(0.6) and pf.sin_phi_load == pytest.approx(0.8)
    assert pf.source_window == (T0, T0 + 4 * 3600) and pf.per_phase


def test_leading_night_gives_negative_sine():
    assert estimate_night_power_factor(const(300, -400)).sin_phi_load == pytest.approx(-0.8)


def test_empty_window_rejected():
    with pytest.raises(ValueError):
        estimate_night_power_factor(const(1, 1, n=2, step=3600), start_hour=10, end_hour=11)


def test_hand_solved_balance():
    a = PfbeAssumptions(PowerFactorEstimate.from_cos(0.6))
    r = disaggregate_pfbe(PowerSeries(T0, 60, [-1000.0], [800.0], "1"), a)
    assert r.load.active_kw[0] == pytest.approx(600.0)
    assert r.pv.active_kw[0] == pytest.approx(-1600.0)
    s_load, s_pv = solve_balance(-1000.0, 800.0, 0.6, 0.8, -1.0, 0.0)
    assert s_load == pytest.approx(1000.0) and s_pv == pytest.approx(1600.0)


def test_unity_load_pf_is_singular():
    a = PfbeAssumptions(PowerFactorEstimate(1.0, 0.0))
    with pytest.raises(SingularPowerFactorError):
        disaggregate_pfbe(PowerSeries(T0, 60, [100.0], [0.0], "1"), a)


def test_invalid_pf_rejected():
    with pytest.raises(ValueError):
        PowerFactorEstimate(0.6, 0.6)
    with pytest.raises(ValueError):
        PfbeAssumptions(PowerFactorEstimate.from_cos(0.9), cos_phi_pv=-1.5)


def test_balance_matches_per_sample_solve():
    rng = np.random.default_rng(4)
    P, Q = rng.normal(1000, 800, 50), rng.normal(300, 100, 50)
    cl, cv = 0.95, -0.98
    sl, sv = math.sqrt(1 - cl ** 2), math.sqrt(1 - cv ** 2)
    ours = solve_balance(P, Q, cl, sl, cv, sv)
    ref = oracles.pfbe_per_sample(P, Q, cl, sl, cv, sv)
    np.testing.assert_allclose(ours[0], ref[0], rtol=1e-10)
    np.testing.assert_allclose(ours[1], ref[1], rtol=1e-10)


def test_zero_pv_scenario_gives_pf_noise_only():
    # With no PV the estimate is P (1 - tan(phi_true) / tan(phi_assumed)):
    # exactly zero at the assumed PF, and the PF jitter otherwise.
    rng = np.random.default_rng(2)
    p = rng.uniform(1500, 3000, 200)
    cos = 0.97 + rng.normal(0, 0.002, 200)
    q = p * np.sqrt(1 - cos ** 2) / cos
    s = PowerSeries(T0, 60, p, q, "1")
    r = disaggregate_pfbe(s, PfbeAssumptions(PowerFactorEstimate.from_cos(0.97)))
    expected = p * (1 - np.tan(np.arccos(cos)) / np.tan(np.arccos(0.97)))
    np.testing.assert_allclose(r.pv.active_kw, expected, rtol=1e-9, atol=1e-9)
    exact = PowerSeries(T0, 60, p, p * np.tan(np.arccos(0.97)), "1")
    r = disaggregate_pfbe(exact, PfbeAssumptions(PowerFactorEstimate.from_cos(0.97)))
    np.testing.assert_allclose(r.pv.active_kw, 0.0, atol=1e-9)


def test_additivity():
    s = PowerSeries(T0, 60, [-500.0, 1200.0], [300.0, 350.0], "1")
    r = disaggregate_pfbe(s, PfbeAssumptions(PowerFactorEstimate.from_cos(0.9), cos_phi_pv=-0.95))
    np.testing.assert_allclose(r.load.active_kw + r.pv.active_kw, s.active_kw, atol=1e-9)
    np.testing.assert_allclose(r.load.reactive_kvar + r.pv.reactive_kvar, s.reactive_kvar, atol=1e-9)


def _truth(cos_load, pv_p, pv_q, load_p):
    load_q = load_p * math.sqrt(1 - cos_load ** 2) / cos_load
    load = PowerSeries(T0, 60, load_p, np.full(len(load_p), load_q) if np.isscalar(load_q) else load_q, "1")
    pv = PowerSeries(T0, 60, pv_p, pv_q, "1")
    agg = PowerSeries(T0, 60, load.active_kw + pv.active_kw, load.reactive_kvar + pv.reactive_kvar, "1")
    return agg, load, pv


def test_decomposition_zero_when_assumptions_hold():
    load_p = np.linspace(1000, 2000, 30)
    agg, load, pv = _truth(0.95, -np.linspace(0, 900, 30), np.zeros(30), load_p)
    b = decompose_pfbe_error(agg, pv, load, PfbeAssumptions(PowerFactorEstimate.from_cos(0.95)))
    for e in (b.total, b.pv_pf_error, b.load_pf_error):
        np.testing.assert_allclose(e, 0.0, atol=1e-8)


def test_pv_reactive_draw_overestimates_generation():
    load_p = np.full(20, 1500.0)
    pv_p = -np.linspace(100, 900, 20)
    agg, load, pv = _truth(0.95, pv_p, 0.1 * -pv_p, load_p)
    b = decompose_pfbe_error(agg, pv, load, PfbeAssumptions(PowerFactorEstimate.from_cos(0.95)))
    assert np.all(b.pv_pf_error > 0)  # truth - estimate > 0: estimate more negative
    np.testing.assert_allclose(b.load_pf_error, 0.0, atol=1e-8)


def test_pf_shift_makes_load_error_dominate():
    g = sim.generate(sim.calibrate_to_paper(0))
    pf = estimate_night_power_factor(g.aggregate)
    b = decompose_pfbe_error(g.aggregate, g.pv, g.load, PfbeAssumptions(pf))
    day = g.daylight
    assert np.sum(np.abs(b.load_pf_error[day])) > np.sum(np.abs(b.pv_pf_error[day]))


def test_night_pf_on_phase_balanced_output():
    g = sim.generate(sim.calibrate_to_paper(0))
    for phase in split_phases(g.aggregate):
        pf = estimate_night_power_factor(phase)
        assert pf.cos_phi_load == pytest.approx(0.999, abs=5e-4)


def test_calibrate_load_pf_reproduces_known_pv():
    agg, load, pv = _truth(0.93, np.full(5, -700.0), np.zeros(5), np.full(5, 2000.0))
    pf = calibrate_load_pf(agg, T0 + 120, -700.0)
    assert pf.cos_phi_load == pytest.approx(0.93)
    r = disaggregate_pfbe(agg, PfbeAssumptions(pf))
    np.testing.assert_allclose(r.pv.active_kw, -700.0)
    with pytest.raises(ValueError):
        calibrate_load_pf(agg, T0 + 1, -700.0)
