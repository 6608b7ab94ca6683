from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

import oracles
from pvdisagg import simulator as sim
from pvdisagg.csge import (
    CsgeWeights,
    VarianceClampWarning,
    closed_form_sources,
    disaggregate_csge,
    estimate_weights,
    residual_shares,
    sampling_rate_sweep,
    solve_separation_kkt,
    verify_theta_weight_independence,
    weight_sensitivity_sweep,
)
from pvdisagg.linear_estimator import disaggregate_le, load_model_prediction
from pvdisagg.metrics import score
from pvdisagg.regression import fit_day_aggregate_model
from pvdisagg.timeseries import daytime_mask, moving_average


@pytest.fixture(scope="module")
def feeder():
    g = sim.generate(sim.calibrate_to_paper(0))
    phi = moving_average(g.proxy, 300)
    return g, phi, daytime_mask(phi)


def test_hand_instance():
    out = closed_form_sources([[10.0], [20.0]], [33.0], [1.0, 1.0])
    np.testing.assert_allclose(out[:, 0], [11.5, 21.5])


def test_zero_residual_keeps_predictions():
    out = closed_form_sources([[10.0, 4.0], [20.0, -1.0]], [30.0, 3.0], [2.0, 7.0])
    np.testing.assert_allclose(out, [[10.0, 4.0], [20.0, -1.0]])


def test_shares():
    np.testing.assert_allclose(residual_shares([1.0, 3.0]), [0.75, 0.25])
    np.testing.assert_allclose(residual_shares([2.0, 2.0, 2.0]), [1 / 3] * 3)


@pytest.mark.parametrize("n_sources", [2, 3, 5])
def test_matches_dense_qp(n_sources):
    rng = np.random.default_rng(n_sources)
    pred = rng.normal(0, 100, (n_sources, 40))
    agg = pred.sum(axis=0) + rng.normal(0, 30, 40)
    w = rng.uniform(0.01, 10, n_sources)
    np.testing.assert_allclose(closed_form_sources(pred, agg, w), oracles.separation_oracle(pred, agg, w),
                               rtol=1e-8, atol=1e-8)


def test_weights_validation():
    with pytest.raises(ValueError):
        CsgeWeights(0.0, 1.0)
    with pytest.raises(ValueError):
        CsgeWeights(1.0, -1.0)
    w = CsgeWeights.from_ratio(50.0)
    assert w.ratio == pytest.approx(50.0) and w.provenance == "manual"


def test_one_weight_per_source():
    with pytest.raises(ValueError):
        closed_form_sources([[1.0], [2.0]], [3.0], [1.0, 1.0, 1.0])


def test_injected_variances_recovered():
    sc = sim.calibrate_to_paper(1)
    sc = replace(sc, load=replace(sc.load, sigma_kw=10.0), pv=replace(sc.pv, sigma_kw=30.0))
    g = sim.generate(sc)
    est, w = estimate_weights(g.aggregate, g.proxy, daytime_mask(g.proxy))
    assert est.var_pv == pytest.approx(900.0, rel=0.25)
    assert est.var_load == pytest.approx(100.0, rel=0.25)
    assert not est.clamped
    assert w.alpha == pytest.approx(1 / est.var_load) and w.beta == pytest.approx(1 / est.var_pv)
    assert w.provenance == "star"


def test_clamp_pins_pv_to_model():
    sc = sim.calibrate_to_paper(2)
    sc = replace(sc, pv=replace(sc.pv, sigma_kw=0.0))
    g = sim.generate(sc)
    mask = daytime_mask(g.proxy)
    with pytest.warns(VarianceClampWarning):
        est, w = estimate_weights(g.aggregate, g.proxy, mask)
    assert est.clamped and est.var_pv == max(0.01 * est.var_total, 1.0)
    r = disaggregate_csge(g.aggregate, g.proxy, mask, w)
    day = mask.flags
    pv_model = r.theta["C_eff"] * g.proxy.power_kw[day]
    resid = g.aggregate.active_kw[day] - load_model_prediction(g.aggregate, r.theta)[day] - pv_model
    assert r.residual_share_pv < 0.02
    np.testing.assert_allclose(r.pv_star.active_kw[day] - pv_model, r.residual_share_pv * resid, atol=1e-8)


def test_equal_weights_split_evenly(feeder):
    g, phi, mask = feeder
    r = disaggregate_csge(g.aggregate, phi, mask, CsgeWeights(1.0, 1.0))
    assert r.residual_share_load == r.residual_share_pv == 0.5


def test_additivity_and_night(feeder):
    g, phi, mask = feeder
    _, w = estimate_weights(g.aggregate, phi, mask)
    r = disaggregate_csge(g.aggregate, phi, mask, w)
    day = mask.flags
    np.testing.assert_allclose(r.load_star.active_kw[day] + r.pv_star.active_kw[day], g.aggregate.active_kw[day],
                               rtol=0, atol=1e-9)
    assert np.all(np.isnan(r.pv_star.active_kw[~day]))


def test_large_ratio_reproduces_le(feeder):
    g, phi, mask = feeder
    le = disaggregate_le(g.aggregate, phi, mask)
    r = disaggregate_csge(g.aggregate, phi, mask, CsgeWeights.from_ratio(1e6))
    day = mask.flags
    # LE hands PV the whole residual; CSGE keeps 1/(1 + ratio) of it on the load
    resid = le.pv_hat.active_kw[day] - r.theta["C_eff"] * phi.power_kw[day]
    gap = r.pv_star.active_kw[day] - le.pv_hat.active_kw[day]
    np.testing.assert_allclose(gap, -resid / (1.0 + 1e6), rtol=1e-6, atol=1e-9)
    assert np.all(np.abs(gap) <= 1e-6 * np.abs(resid) + 1e-9)


def test_theta_independent_of_weights(feeder):
    g, phi, mask = feeder
    rep = verify_theta_weight_independence(g.aggregate, phi, mask, [(1.0, 1.0), (1000.0, 0.001)])
    assert rep.ok, rep.message
    assert rep.max_rel_dev <= 1e-6


def test_single_unit_pair_equals_ols(feeder):
    g, phi, mask = feeder
    ols = fit_day_aggregate_model(g.aggregate, phi, mask)
    sol = solve_separation_kkt(g.aggregate, phi, mask, 1.0, 1.0)
    np.testing.assert_allclose(sol.theta, [ols["R"], ols["k_eff"], ols["C_eff"]], rtol=1e-6)
    day = mask.flags
    np.testing.assert_allclose(sol.load + sol.pv, g.aggregate.active_kw[day], atol=1e-6)


def test_no_pairs_rejected(feeder):
    g, phi, mask = feeder
    with pytest.raises(ValueError):
        verify_theta_weight_independence(g.aggregate, phi, mask, [])


def test_weight_sweep_rows(feeder):
    g, phi, mask = feeder
    rows = weight_sensitivity_sweep(g.aggregate, phi, mask, g.pv, g.load, [1e-2, 1.0, 1e4])
    assert len(rows) == 4 and sum(r.is_star for r in rows) == 1
    assert [r.ratio for r in rows] == sorted(r.ratio for r in rows)
    single = weight_sensitivity_sweep(g.aggregate, phi, mask, g.pv, g.load, [3.0], include_star=False)
    assert len(single) == 1 and single[0].ratio == 3.0
    # PV and load errors mirror each other because the sources sum to P
    for r in rows:
        assert r.rmse_pv == pytest.approx(r.rmse_load, rel=1e-9)
    with pytest.raises(ValueError):
        weight_sensitivity_sweep(g.aggregate, phi, mask, g.pv, g.load, [])


def test_plateau_equals_le(feeder):
    g, phi, mask = feeder
    le = disaggregate_le(g.aggregate, phi, mask)
    le_rmse = score(le.pv_hat, g.pv, mask=mask).rmse_kw
    rows = weight_sensitivity_sweep(g.aggregate, phi, mask, g.pv, g.load, [1e4, 1e6], include_star=False)
    assert rows[-1].rmse_pv == pytest.approx(le_rmse, rel=1e-6)
    assert rows[0].rmse_pv == pytest.approx(le_rmse, rel=0.01)


def test_sampling_identity_rate_matches_baseline(feeder):
    g, phi, mask = feeder
    rows = sampling_rate_sweep(g.aggregate, phi, mask, g.pv, g.load, rates=[1.0])
    _, w = estimate_weights(g.aggregate, phi, mask)
    base = score(disaggregate_csge(g.aggregate, phi, mask, w).pv_star, g.pv, mask=mask)
    assert rows[0].rmse_pv == pytest.approx(base.rmse_kw, rel=1e-12)
    assert rows[0].alpha_over_beta == pytest.approx(w.ratio)
    assert rows[0].window_minutes == 1.0


def test_sampling_non_integer_rate_rejected(feeder):
    g, phi, mask = feeder
    with pytest.raises(ValueError):
        sampling_rate_sweep(g.aggregate, phi, mask, g.pv, rates=[0.3])
    with pytest.raises(ValueError):
        sampling_rate_sweep(g.aggregate, phi, mask, g.pv, rates=[])


def test_sampling_coarse_rate_windows(feeder):
    g, phi, mask = feeder
    rows = sampling_rate_sweep(g.aggregate, phi, mask, g.pv, rates=[1 / 15, 1 / 5])
    assert [r.window_minutes for r in rows] == [15.0, 5.0]
    assert all(np.isnan(r.rmse_load) for r in rows)
