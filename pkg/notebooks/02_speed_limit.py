"""
Quantum speed limit along a trajectory
======================================

The ratio tau_QSL / tau compares the Bures angle travelled with the time
average of the generator norm.  A ratio of 1 means the evolution is as fast
as the bound allows; below 1 there is room for speed-up.
"""

import numpy as np

from qsl_lab import (
    TimeGrid,
    amplitude_damping_model,
    cp_oscillating_model,
    dl_ratio_ad,
    pdiv_crossover_model,
    propagate_ode,
    qsl_along,
    qsl_ratio,
)
from qsl_lab.qsl import blp_from_trajectory

# one report for a single horizon
report = qsl_ratio(cp_oscillating_model(8, 5), a=1.0, tau=2.0)
print(report.to_json())

# the excited state of the crossover model saturates the bound at every horizon
print("crossover, a = 1:", [round(qsl_ratio(pdiv_crossover_model(0.5), 1.0, tau).ratio, 8) for tau in (0.5, 2, 5)])

# running ratio: every node of the trajectory taken as the horizon
model = cp_oscillating_model(8, 5)
grid = TimeGrid.uniform(3.0, 601, rtol=1e-12, atol=1e-14)
data = qsl_along(model, propagate_ode(model, np.diag([1.0, 0.0]).astype(complex), grid))
print("running ratio min / max:", data["ratio"].min().round(4), data["ratio"].max().round(6))

# amplitude damping with a rate that turns negative on (2pi/3, 4pi/3)
ad = amplitude_damping_model(lambda t: 1 + 2 * np.cos(t))
traj = propagate_ode(ad, np.diag([1.0, 0.0]).astype(complex), TimeGrid.uniform(2 * np.pi, 2001, rtol=1e-12, atol=1e-14))
blp = blp_from_trajectory(ad, traj)
print("BLP measure:", blp.N, "on", blp.intervals)

# two closed forms for this channel; only the total-variation one is bounded by 1
forms = dl_ratio_ad(traj.times, traj.states[:, 0, 0].real, blp.N)
print("pipeline ratio:", qsl_along(ad, traj)["ratio"][-1])
print("closed forms:", forms)
