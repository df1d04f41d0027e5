"""Phase-covariant generator and two independent propagation engines.

``propagate_ode`` integrates the master equation with an adaptive
Runge-Kutta scheme.  ``propagate_analytic`` evaluates the closed-form
solution of the Bloch equations by quadrature.  The two share nothing but
the rate model and are cross-checked in the test suite.
"""
import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import DomainError, NumericalError
from .measures import fidelity, operator_norm
from .states import EXCITED, SIGMA_3, SIGMA_MINUS, SIGMA_PLUS, _as_matrix, require_density

REPAIR_BOUND = 1e-8
DEFAULT_NODES = 2001

def _dissipator(op, rho):
    op_dag = op.conj().T
    jump = op_dag @ op
    return op @ rho @ op_dag - 0.5 * (jump @ rho + rho @ jump)


def generator_from_rates(omega_h, gamma1, gamma2, gamma3, rho):
    """Apply the phase-covariant generator for given coefficient values.

    Coefficients broadcast against the leading axes of ``rho``.
    """
    rho = _as_matrix(rho)
    w, g1, g2, g3 = (np.asarray(c, dtype=float)[..., None, None] for c in (omega_h, gamma1, gamma2, gamma3))
    out = 1j * w * (rho @ SIGMA_3 - SIGMA_3 @ rho)
    out = out + g1 / 2 * _dissipator(SIGMA_PLUS, rho)
    out = out + g2 / 2 * _dissipator(SIGMA_MINUS, rho)
    out = out + g3 / 2 * (SIGMA_3 @ rho @ SIGMA_3 - rho)
    return out


def generator_apply(model, t, rho):
    """``L_t(rho)`` for the phase-covariant master equation of ``model``.

    The output is Hermitian and traceless whenever ``rho`` is Hermitian.
    """
    return generator_from_rates(*model.rates(t), rho)


@dataclass(frozen=True)
class TimeGrid:
    """Output nodes on ``[0, t_end]`` plus integrator tolerances."""

    times: np.ndarray
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise DomainError("a time grid needs at least two nodes")
        if times[0] != 0.0:
            raise DomainError("time grids start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        object.__setattr__(self, "times", times)

    @classmethod
    def uniform(cls, t_end, n=DEFAULT_NODES, **tolerances):
        if not t_end > 0:
            raise DomainError(f"t_end must be positive, got {t_end}")
        return cls(np.linspace(0.0, float(t_end), int(n)), **tolerances)

    @property
    def t_end(self):
        return float(self.times[-1])


@dataclass(frozen=True)
class Trajectory:
    """States and derived scalars on the nodes of a :class:`TimeGrid`.

    ``dense`` maps arbitrary times in ``[0, t_end]`` to states when the
    engine provides continuous output (the ODE engine does).
    """

    grid: TimeGrid
    states: np.ndarray
    generator: np.ndarray
    gen_norm: np.ndarray
    fidelity: np.ndarray
    model: object = None
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def times(self):
        return self.grid.times

    @property
    def initial_state(self):
        return self.states[0]

    @property
    def populations(self):
        return self.states[:, 0, 0].real, self.states[:, 1, 1].real

    @property
    def coherence(self):
        return self.states[:, 0, 1]

    def to_csv(self, path_or_file):
        """Write ``t,rho00,rho01_re,rho01_im,rho11,fidelity,gen_norm``."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "rho00", "rho01_re", "rho01_im", "rho11", "fidelity", "gen_norm"])
            for t, rho, f, g in zip(self.times, self.states, self.fidelity, self.gen_norm):
                writer.writerow([repr(float(v)) for v in (t, rho[0, 0].real, rho[0, 1].real, rho[0, 1].imag, rho[1, 1].real, f, g)])
        finally:
            if own:
                fh.close()


def _repair(states):
    """Re-Hermitize and renormalize the trace, returning the size of both fixes."""
    herm = 0.5 * (states + np.conj(np.swapaxes(states, -1, -2)))
    herm_fix = np.max(np.abs(herm - states)) if states.size else 0.0
    trace = np.trace(herm, axis1=-2, axis2=-1).real
    trace_fix = np.max(np.abs(trace - 1.0)) if states.size else 0.0
    return herm / trace[..., None, None], max(herm_fix, trace_fix)


def _assemble(model, grid, states, dense=None):
    gen = generator_apply(model, grid.times, states)
    return Trajectory(
        grid=grid,
        states=states,
        generator=gen,
        gen_norm=operator_norm(gen),
        fidelity=fidelity(states[0], states),
        model=model,
        dense=dense,
    )


def propagate_ode(model, rho0, grid):
    """Integrate ``d rho / dt = L_t(rho)`` with DOP853 (explicit RK 8(5,3)).

    Raises
    ------
    NumericalError
        If the integrator fails or the invariant repair of an emitted state
        exceeds 1e-8.
    """
    rho0 = require_density(rho0)

    def rhs(t, y):
        rho = y.view(complex).reshape(2, 2)
        return generator_apply(model, t, rho).reshape(-1).view(float)

    y0 = np.ascontiguousarray(rho0, dtype=complex).reshape(-1).view(float)
    sol = solve_ivp(
        rhs,
        (0.0, grid.t_end),
        y0,
        method="DOP853",
        t_eval=grid.times,
        dense_output=True,
        rtol=grid.rtol,
        atol=grid.atol,
    )
    if not sol.success:
        raise NumericalError(f"ODE integration failed: {sol.message}")

    def to_states(y):
        return np.ascontiguousarray(y.T).view(complex).reshape(-1, 2, 2)

    states, fix = _repair(to_states(sol.y))
    if fix > REPAIR_BOUND:
        raise NumericalError(f"state repair of {fix:.3g} exceeds {REPAIR_BOUND}")
    states[0] = rho0

    def dense(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return _repair(to_states(sol.sol(t)))[0]

    return _assemble(model, grid, states, dense)


def _integral(fn, lo, hi):
    value, err = quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    if not np.isfinite(value) or err > 1e-10 + 1e-10 * abs(value):
        raise NumericalError(f"quadrature on [{lo}, {hi}] did not converge (err {err:.2g})")
    return value


def analytic_propagator(model, grid):
    """Closed-form solution of the Bloch equations, integrals by adaptive quadrature.

    With ``G(t) = int_0^t (gamma1 + gamma2)/2``::

        z(t)      = e^{-G(t)} z(0) + int_0^t e^{-(G(t) - G(s))} (gamma1 - gamma2)(s)/2 ds
        rho01(t)  = rho01(0) exp(-int_0^t [(gamma1 + gamma2)/4 + gamma3 + 2i omega_h])

    Both are accumulated node to node so no exponential is ever large.  The
    integrals do not depend on the initial state, so they are computed once
    and the returned function maps any ``rho0`` to its :class:`Trajectory`.
    """
    g1, g2, g3, wh = model.gamma1, model.gamma2, model.gamma3, model.omega_h

    def relax(s):
        return 0.5 * (float(g1(s)) + float(g2(s)))

    def drive(s):
        return 0.5 * (float(g1(s)) - float(g2(s)))

    def decoherence(s):
        return 0.25 * (float(g1(s)) + float(g2(s))) + float(g3(s))

    def rotation(s):
        return 2.0 * float(wh(s))

    times = grid.times
    n = times.size
    damping = np.ones(n)
    source = np.zeros(n)
    coherence_factor = np.ones(n, dtype=complex)
    for i in range(1, n):
        lo, hi = times[i - 1], times[i]
        source[i] = _integral(lambda s: np.exp(-_integral(relax, s, hi)) * drive(s), lo, hi)
        damping[i] = np.exp(-_integral(relax, lo, hi))
        coherence_factor[i] = np.exp(-(_integral(decoherence, lo, hi) + 1j * _integral(rotation, lo, hi)))

    def propagate(rho0):
        rho0 = require_density(rho0)
        z = np.empty(n)
        z[0] = (rho0[0, 0] - rho0[1, 1]).real
        for i in range(1, n):
            z[i] = damping[i] * z[i - 1] + source[i]
        coh = rho0[0, 1] * np.cumprod(coherence_factor)
        states = np.empty((n, 2, 2), dtype=complex)
        states[:, 0, 0] = (1 + z) / 2
        states[:, 1, 1] = (1 - z) / 2
        states[:, 0, 1] = coh
        states[:, 1, 0] = np.conj(coh)
        return _assemble(model, grid, states)

    return propagate


def propagate_analytic(model, rho0, grid):
    """Quadrature-based closed-form trajectory; see :func:`analytic_propagator`."""
    rho0 = require_density(rho0)
    return analytic_propagator(model, grid)(rho0)


def excited_population_trace(traj):
    """``(times, p)`` with ``p`` the population of the excited level (index 0)."""
    return traj.times, traj.states[:, EXCITED, EXCITED].real
