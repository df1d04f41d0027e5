"""Quantum speed limit of open-system trajectories, plus the amplitude-damping BLP tools.

The speed limit of a pure initial state over a horizon ``tau`` is
``tau_qsl = sin^2(L) / Lambda`` where ``L`` is the Bures angle between the
initial and final state and ``Lambda`` is the time average of the operator
norm of the generator output along the trajectory.
"""
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import bisect

from .errors import DomainError, NumericalError
from .measures import bures_angle, operator_norm
from .propagate import TimeGrid, excited_population_trace, generator_apply, propagate_ode
from .states import EXCITED, pure_state_from_a

LAMBDA_RTOL = 1e-9
DEGENERATE_TOL = 1e-15
KINK_PROBES = 4001


@dataclass(frozen=True)
class QslReport:
    tau: float
    bures_angle: float
    lambda_op: float
    tau_qsl: float
    ratio: float

    def to_dict(self):
        return {k: float(v) for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict())


def _simpson(f, lo, hi, n):
    """Composite Simpson with ``n`` (even) subintervals on every ``[lo_i, hi_i]``."""
    nodes = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, n + 1)
    values = f(nodes.ravel()).reshape(nodes.shape)
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4
    weights[2:-1:2] = 2
    return (hi - lo) / (3 * n) * (values @ weights)


def _piecewise_simpson(f, edges, rtol=LAMBDA_RTOL, atol=1e-14, max_level=14):
    """Integrals of ``f`` over consecutive ``edges``, refined until converged.

    Each piece is halved until its Simpson estimate changes by less than
    ``rtol`` relative to itself (or ``atol`` per unit length), so running sums
    are accurate from the first node on; the returned values carry one
    Richardson correction.  ``f`` must accept a flat array of times.
    """
    lo, hi = edges[:-1], edges[1:]
    n = 2
    prev = _simpson(f, lo, hi, n)
    result = prev.copy()
    active = np.arange(lo.size)
    for _ in range(max_level):
        n *= 2
        cur = _simpson(f, lo[active], hi[active], n)
        change = cur - prev[active]
        result[active] = cur + change / 15
        prev[active] = cur
        active = active[np.abs(change) > np.maximum(rtol * np.abs(cur), atol * (hi - lo)[active])]
        if active.size == 0:
            return result
    raise NumericalError("action integral did not converge; refine the trajectory grid")


def _sign_change_roots(fn, times, values, xtol=1e-13):
    roots = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        roots.append(bisect(lambda s: float(fn(s)[0]), times[i], times[i + 1], xtol=xtol))
    return np.array(roots)


def action_integral(model, traj, rtol=LAMBDA_RTOL):
    """Running integral ``int_0^t ||L_s(rho(s))||_op ds`` at every trajectory node.

    With dense output the integrand is sampled off-grid and each node
    interval is refined independently; the norm has kinks only where the
    generator output vanishes, so intervals are also split at sign changes
    of its diagonal entry.  Without dense output the node values are used
    directly and a coarse grid is reported as an error.
    """
    times = traj.times
    if traj.dense is None:
        return _node_action(traj, rtol)

    def norm_at(t):
        return operator_norm(generator_apply(model, t, traj.dense(t)))

    def diagonal_at(t):
        return generator_apply(model, t, traj.dense(t))[..., 0, 0].real

    probe = np.union1d(times, np.linspace(times[0], times[-1], KINK_PROBES))
    kinks = _sign_change_roots(diagonal_at, probe, diagonal_at(probe))
    edges = np.union1d(times, kinks)
    # floor: pieces where the norm nearly vanishes need not be resolved to rtol
    floor = 1e-3 * rtol * max(float(np.max(traj.gen_norm)), 1e-300)
    pieces = _piecewise_simpson(norm_at, edges, rtol=rtol, atol=floor)
    running = np.concatenate([[0.0], np.cumsum(pieces)])
    return running[np.searchsorted(edges, times)]


def _node_action(traj, rtol):
    times, values = traj.times, traj.gen_norm
    if times.size < 5:
        raise NumericalError("node-only action integral needs at least 5 nodes")
    fine = cumulative_simpson(values, x=times, initial=0.0)
    coarse = cumulative_simpson(values[::2], x=times[::2], initial=0.0)
    change = fine[::2] - coarse
    if np.max(np.abs(change)) > rtol * max(abs(fine[-1]), 1e-14):
        raise NumericalError("trajectory grid too coarse for the action integral")
    return fine


def lambda_op(model, traj, rtol=LAMBDA_RTOL):
    """Time-averaged generator norm ``(1/tau) int_0^tau ||L_t(rho(t))||_op dt``."""
    return float(action_integral(model, traj, rtol)[-1] / traj.grid.t_end)


def _ratio(sin2, action):
    degenerate = (action <= DEGENERATE_TOL) & (sin2 <= DEGENERATE_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(degenerate, 1.0, sin2 / np.where(degenerate, 1.0, action))
    if not np.all(np.isfinite(ratio)):
        raise NumericalError("state moved while the generator norm integral is zero")
    return ratio


def qsl_along(model, traj, rtol=LAMBDA_RTOL):
    """Speed-limit data for every node ``t`` of ``traj`` taken as the horizon.

    Returns a dict of arrays ``tau, bures_angle, lambda_op, tau_qsl, ratio``.
    At ``t = 0`` (and for any stationary prefix) the ratio is 1.
    """
    times = traj.times
    angle = bures_angle(traj.initial_state, traj.states)
    sin2 = np.sin(angle) ** 2
    action = action_integral(model, traj, rtol)
    ratio = _ratio(sin2, action)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(times > 0, action / np.where(times > 0, times, 1.0), 0.0)
        tau_qsl = np.where(lam > 0, sin2 / np.where(lam > 0, lam, 1.0), 0.0)
    return {"tau": times, "bures_angle": angle, "lambda_op": lam, "tau_qsl": tau_qsl, "ratio": ratio}


def qsl_report(model, traj, rtol=LAMBDA_RTOL):
    """:class:`QslReport` for the full horizon of ``traj``."""
    row = {k: v[-1] for k, v in qsl_along(model, traj, rtol).items()}
    return QslReport(**{k: float(v) for k, v in row.items()})


def qsl_ratio(model, a, tau, n_nodes=2001, rtol=1e-10, atol=1e-12):
    """Propagate the pure state of parameter ``a`` to ``tau`` and report its speed limit.

    Examples
    --------
    >>> from qsl_lab.rates import pdiv_crossover_model
    >>> round(qsl_ratio(pdiv_crossover_model(0.5), 1.0, 2.0).ratio, 6)
    1.0
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    grid = TimeGrid.uniform(tau, n_nodes, rtol=rtol, atol=atol)
    traj = propagate_ode(model, pure_state_from_a(a), grid)
    return qsl_report(model, traj)


# -- amplitude damping -------------------------------------------------------


@dataclass(frozen=True)
class BlpReport:
    """BLP measure ``N`` and the time intervals where the population grows."""

    N: float
    intervals: tuple


def _reject_non_amplitude_damping(model, times):
    _, g1, _, g3 = model.rates(times)
    if np.max(np.abs(g1)) > 0 or np.max(np.abs(g3)) > 0:
        raise DomainError("BLP closed form applies to amplitude damping only (gamma1 = gamma3 = 0)")


def blp_measure_ad(t, p, population=None, derivative=None, model=None, xtol=1e-10):
    """BLP non-Markovianity ``N = int_{dp/dt > 0} dp/dt dt`` of an amplitude-damping trace.

    ``t, p`` are the sampled excited-state population.  The sign of
    ``dp/dt`` is taken from central differences on the samples; when
    ``population`` and ``derivative`` callables are supplied, each growth
    interval's endpoints are refined by bisection on ``derivative`` to
    ``xtol`` and ``population`` is evaluated there.  Otherwise an endpoint is
    the extremal sample next to the sign change.

    Passing ``model`` rejects anything but amplitude damping.
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    if model is not None:
        _reject_non_amplitude_damping(model, t)
    growing = np.gradient(p, t) > 0
    refine = population is not None and derivative is not None
    intervals = []
    total = 0.0
    edges = np.diff(growing.astype(int))
    starts = list(np.flatnonzero(edges == 1) + 1)
    stops = list(np.flatnonzero(edges == -1))
    if growing[0]:
        starts.insert(0, 0)
    if growing[-1]:
        stops.append(p.size - 1)
    for i, j in zip(starts, stops):
        if refine:
            lo = t[0] if i == 0 else _refine_turn(derivative, t[i - 1], t[i], xtol)
            hi = t[-1] if j == p.size - 1 else _refine_turn(derivative, t[j], t[j + 1], xtol)
            gain = float(population(hi)) - float(population(lo))
        else:
            lo_idx = i if i == 0 or p[i] <= p[i - 1] else i - 1
            hi_idx = j if j == p.size - 1 or p[j] >= p[j + 1] else j + 1
            lo, hi = t[lo_idx], t[hi_idx]
            gain = p[hi_idx] - p[lo_idx]
        if gain > 0:
            total += gain
            intervals.append((float(lo), float(hi)))
    return BlpReport(N=float(total), intervals=tuple(intervals))


def _refine_turn(derivative, lo, hi, xtol):
    d_lo, d_hi = float(derivative(lo)), float(derivative(hi))
    if d_lo == 0:
        return lo
    if d_hi == 0 or np.sign(d_lo) == np.sign(d_hi):
        return hi if d_hi == 0 else (lo if abs(d_lo) < abs(d_hi) else hi)
    return bisect(lambda s: float(derivative(s)), lo, hi, xtol=xtol)


def blp_from_trajectory(model, traj):
    """BLP measure of an amplitude-damping trajectory, refined with its dense output."""
    times, p = excited_population_trace(traj)
    if traj.dense is None:
        return blp_measure_ad(times, p, model=model)

    def population(s):
        return traj.dense(s)[0, EXCITED, EXCITED].real

    def derivative(s):
        return generator_apply(model, s, traj.dense(s))[0, EXCITED, EXCITED].real

    return blp_measure_ad(times, p, population, derivative, model=model)


@dataclass(frozen=True)
class DlRatios:
    """Two closed forms of the amplitude-damping speed-limit ratio.

    ``printed`` is ``(1 - |b|^2) / (1 - |b| + N)``; ``total_variation`` is
    ``(1 - |b|^2) / ((1 - |b|^2) + 2N)``, which is what the generator-norm
    definition gives for a diagonal trajectory.  ``printed_exceeds_bound``
    flags a ``printed`` value above 1.
    """

    printed: float
    total_variation: float
    printed_exceeds_bound: bool


def dl_ratio_ad(t, p, N):
    """Evaluate both amplitude-damping ratio formulas at the final sample.

    Raises
    ------
    DomainError
        If ``p[0]`` differs from 1 by more than 1e-9.
    """
    p = np.asarray(p, dtype=float)
    if abs(p[0] - 1.0) > 1e-9:
        raise DomainError(f"population trace must start at 1, got {p[0]}")
    p_end = float(np.clip(p[-1], 0.0, 1.0))
    numerator = 1.0 - p_end

    def safe(denominator):
        if abs(denominator) <= DEGENERATE_TOL:
            return 1.0 if abs(numerator) <= DEGENERATE_TOL else np.inf
        return float(numerator / denominator)

    printed = safe(1.0 - np.sqrt(p_end) + N)
    total_variation = safe(numerator + 2.0 * N)
    return DlRatios(printed, total_variation, bool(printed > 1.0 + 1e-9))
