"""
Estimating hidden PV from a feeder-head meter
=============================================

A substation meter sees load plus behind-the-meter PV as one net power
reading. With a nearby, separately metered PV plant as an irradiance proxy,
the net reading can be split into its two parts. This walk-through builds a
three-day synthetic feeder, fits the two regressions the estimators rely on,
and compares the three estimators against the known truth.
"""

import numpy as np

from pvdisagg import simulator as sim
from pvdisagg import (
    PfbeAssumptions,
    disaggregate_csge,
    disaggregate_le,
    disaggregate_pfbe,
    estimate_night_power_factor,
    estimate_weights,
    fit_day_aggregate_model,
    fit_night_load_model,
    moving_average,
    score,
)
from pvdisagg.metrics import format_report
from pvdisagg.regression import summary_table
from pvdisagg.timeseries import daytime_mask

# %% A synthetic feeder tuned to realistic fit statistics
scenario = sim.calibrate_to_paper(seed=0)
truth = sim.generate(scenario)
print(f"{len(truth.aggregate)} samples at {scenario.step_seconds} s, "
      f"{scenario.pv.capacity_kw:g} kW of PV behind the meter")

# The proxy carries a trailing 5-minute filter, like the one used on the
# reference plant; daytime is wherever the filtered proxy is positive.
phi = moving_average(truth.proxy, 300)
mask = daytime_mask(phi)
print(f"daytime samples: {mask.count}, nighttime samples: {(~mask).count}")

# %% Regressions
# At night the feeder carries load only, so P = R + k_eff Q describes it.
# During the day the proxy term C_eff * phi accounts for the PV.
night = fit_night_load_model(truth.aggregate, mask)
day = fit_day_aggregate_model(truth.aggregate, phi, mask)
print(summary_table([night, day], ["night load", "day aggregate"]))

# %% Linear estimator: every daytime residual is attributed to PV
le = disaggregate_le(truth.aggregate, phi, mask)

# %% CSGE: residuals are shared in proportion to each model's noise variance
variances, weights = estimate_weights(truth.aggregate, phi, mask)
print(f"\nnight load variance {variances.var_load:.0f} kW^2, "
      f"day aggregate variance {variances.var_total:.0f} kW^2 "
      f"-> alpha*/beta* = {weights.ratio:.1f}")
csge = disaggregate_csge(truth.aggregate, phi, mask, weights)
print(f"residual share: load {csge.residual_share_load:.3f}, PV {csge.residual_share_pv:.3f}")

# %% PFBE: split P and Q with a load power factor learned between 00:00 and 05:00
pf = estimate_night_power_factor(truth.aggregate)
pfbe = disaggregate_pfbe(truth.aggregate, PfbeAssumptions(pf))
print(f"night power factor {pf.cos_phi_load:.4f}")

# %% Scores on daytime samples
cap = scenario.pv.capacity_kw
for name, estimate in (("LE", le.pv_hat), ("CSGE", csge.pv_star), ("PFBE", pfbe.pv)):
    print(format_report(f"{name} PV", score(estimate, truth.pv, cap, mask)))

# The day-time power factor of the load is not the night-time one, and a
# fraction of a percent in power factor is a large error in PV once it is
# multiplied up by the small reactive share. That is why PFBE trails.
d = truth.daylight
day_pf = np.median(truth.load.active_kw[d] / np.hypot(truth.load.active_kw[d], truth.load.reactive_kvar[d]))
print(f"\nload power factor by day: {day_pf:.4f} (night estimate {pf.cos_phi_load:.4f})")
