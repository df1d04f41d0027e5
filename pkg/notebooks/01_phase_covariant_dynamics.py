"""
Phase-covariant qubit dynamics
==============================

Propagate a pure state under the oscillating CP model and compare the
adaptive ODE engine with the quadrature solution of the Bloch equations.
"""

import numpy as np

from qsl_lab import TimeGrid, cp_oscillating_model, propagate_analytic, propagate_ode, pure_state_from_a

model = cp_oscillating_model(nu=8, omega=5)
grid = TimeGrid.uniform(3.0, 301)

# start in the excited level, a = 1
rho0 = pure_state_from_a(1.0)
traj = propagate_ode(model, rho0, grid)
p0, p1 = traj.populations
print("excited population at t = 0, 0.5, 1, 3:", p0[[0, 50, 100, 300]].round(5))

# turning points of the population: it oscillates rather than decays
d = np.diff(p0)
turns = np.flatnonzero(np.sign(d[:-1]) != np.sign(d[1:])) + 1
print("population turns at t =", grid.times[turns].round(3))
print("largest coherence magnitude:", np.abs(traj.coherence).max())

# the quadrature engine shares nothing with the ODE engine but the rates
exact = propagate_analytic(model, pure_state_from_a(0.5), grid)
ode = propagate_ode(model, pure_state_from_a(0.5), grid)
print("max entrywise engine difference:", np.abs(exact.states - ode.states).max())

# coherence of the a = 1/2 state decays as exp(-nu t / 2) / 2
print("coherence / (exp(-4t)/2) at t = 1:", abs(exact.coherence[100]) / (0.5 * np.exp(-4.0)))

# the whole trajectory can be written out for plotting elsewhere
# traj.to_csv("cp_trajectory.csv")
