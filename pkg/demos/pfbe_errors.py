"""
Why the power-factor estimator struggles
========================================

PFBE needs two power factors: the load's (learned at night) and the PV's
(assumed purely active). The error decomposition swaps in the true value of
one assumption at a time to see which one hurts.
"""

import numpy as np

from pvdisagg import simulator as sim
from pvdisagg import PfbeAssumptions, decompose_pfbe_error, estimate_night_power_factor
from pvdisagg.timeseries import split_phases

truth = sim.generate(sim.calibrate_to_paper(seed=0))
agg, pv, load = (split_phases(s)[0] for s in (truth.aggregate, truth.pv, truth.load))

pf = estimate_night_power_factor(agg)
errors = decompose_pfbe_error(agg, pv, load, PfbeAssumptions(pf))
print(f"phase 1 night power factor {pf.cos_phi_load:.4f}; "
      f"PV reactive draw peaks at {pv.reactive_kvar.max():.0f} kVAR")

d = truth.daylight
for name, e in (("both assumptions", errors.total), ("PV PF only", errors.pv_pf_error),
                ("load PF only", errors.load_pf_error)):
    print(f"{name:>17}: daytime RMSE {np.sqrt(np.mean(e[d] ** 2)):8.1f} kW")

# Share of the error at the sunniest half hour of each day
clean = truth.clean_proxy.power_kw
for day in np.unique(agg.day_index()):
    idx = np.flatnonzero(agg.day_index() == day)
    i = idx[np.argmax(clean[idx])]
    w = slice(i - 15, i + 16)
    pv_part = np.abs(errors.pv_pf_error[w]).sum()
    load_part = np.abs(errors.load_pf_error[w]).sum()
    print(f"day {day - agg.day_index()[0]}: PV power factor accounts for "
          f"{100 * pv_part / (pv_part + load_part):.0f}% of the error at peak")
