"""Time-dependent rate models for the phase-covariant qubit generator.

A :class:`RateModel` bundles four functions of time: the Hamiltonian
coefficient ``omega_h`` and the heating, dissipation and dephasing rates
``gamma1, gamma2, gamma3``.  Rates are stored exactly as they appear in the
model definitions; the factor 1/2 in front of each dissipator is applied by
the generator, not here.
"""
import csv
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .errors import DomainError


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _constant(value, t):
    return np.full_like(np.asarray(t, dtype=float), value)


def _evaluate(fn, t):
    t = np.asarray(t, dtype=float)
    try:
        out = np.asarray(fn(t), dtype=float)
    except TypeError:
        # scalar-only user callables (math.exp and friends)
        out = np.vectorize(lambda s: float(fn(s)), otypes=[float])(t)
    if out.shape != t.shape:
        out = np.broadcast_to(out, t.shape).copy()
    return out


@dataclass(frozen=True)
class RateModel:
    """Coefficients of the phase-covariant generator as functions of time."""

    name: str
    gamma1: Callable
    gamma2: Callable
    gamma3: Callable
    omega_h: Callable = _zero
    params: dict = field(default_factory=dict)

    def rates(self, t):
        """Return ``(omega_h, gamma1, gamma2, gamma3)`` evaluated at ``t``.

        ``t`` may be a scalar or an array; each output has its shape.
        """
        values = tuple(_evaluate(f, t) for f in (self.omega_h, self.gamma1, self.gamma2, self.gamma3))
        for v in values:
            if not np.all(np.isfinite(v)):
                raise DomainError(f"model {self.name!r} produced non-finite rates")
        return values

    def __call__(self, t):
        return self.rates(t)


# -- closed-form built-ins ---------------------------------------------------
# Module-level functions bound with ``partial`` keep built-in models picklable.


def _cp_oscillation(nu, omega, t):
    t = np.asarray(t, dtype=float)
    return nu * (2 * nu * np.sin(omega * t) + omega * np.cos(omega * t)) / np.sqrt(4 * nu**2 + omega**2)


def _cp_gamma1(nu, omega, t):
    return nu + _cp_oscillation(nu, omega, t)


def _cp_gamma2(nu, omega, t):
    return nu - _cp_oscillation(nu, omega, t)


def cp_oscillating_model(nu, omega):
    """Always CP-divisible model whose populations oscillate.

    ``gamma1,2(t) = nu +- nu (2 nu sin(omega t) + omega cos(omega t)) / sqrt(4 nu^2 + omega^2)``
    and ``gamma3 = 0``.  Both rates stay in ``[0, 2 nu]``.
    """
    if not nu > 0:
        raise DomainError(f"nu must be positive, got {nu}")
    if not omega >= 0:
        raise DomainError(f"omega must be non-negative, got {omega}")
    nu, omega = float(nu), float(omega)
    return RateModel(
        name="cp-osc",
        gamma1=partial(_cp_gamma1, nu, omega),
        gamma2=partial(_cp_gamma2, nu, omega),
        gamma3=_zero,
        params={"nu": nu, "omega": omega},
    )


def _exp_decay(rate, t):
    return np.exp(-rate * np.asarray(t, dtype=float))


def _crossover_gamma3(k, t):
    t = np.asarray(t, dtype=float)
    return 0.5 * k * np.exp(-3 * t / 8) * np.cos(2 * t)


def pdiv_crossover_model(k):
    """``gamma1 = e^{-t/2}``, ``gamma2 = e^{-t/4}``, ``gamma3 = (k/2) e^{-3t/8} cos 2t``.

    P-divisible for ``k < 1``; the P-divisibility margin is
    ``e^{-3t/8} (1 + k cos 2t)``.
    """
    if not k >= 0:
        raise DomainError(f"k must be non-negative, got {k}")
    k = float(k)
    return RateModel(
        name="pdiv-crossover",
        gamma1=partial(_exp_decay, 0.5),
        gamma2=partial(_exp_decay, 0.25),
        gamma3=partial(_crossover_gamma3, k),
        params={"k": k},
    )


def _sign_violation_gamma(k, t):
    t = np.asarray(t, dtype=float)
    return np.exp(-t / 2) * (k + np.cos(2 * t))


def sign_violation_model(k):
    """Unital model ``gamma1 = gamma2 = e^{-t/2}(k + cos 2t)``, ``gamma3 = e^{-3t/8}``.

    The rates dip below zero whenever ``k < 1``.
    """
    if not k >= 0:
        raise DomainError(f"k must be non-negative, got {k}")
    k = float(k)
    gamma = partial(_sign_violation_gamma, k)
    return RateModel(
        name="sign-violation",
        gamma1=gamma,
        gamma2=gamma,
        gamma3=partial(_exp_decay, 0.375),
        params={"k": k},
    )


def _as_rate_function(gamma):
    if callable(gamma):
        return gamma
    return partial(_constant, float(gamma))


def amplitude_damping_model(gamma):
    """Pure dissipation: ``gamma2 = gamma``, the other rates vanish.

    ``gamma`` may be a number, a callable of time or a :class:`LinearInterpolant`.
    """
    return RateModel(
        name="amplitude-damping",
        gamma1=_zero,
        gamma2=_as_rate_function(gamma),
        gamma3=_zero,
    )


def pure_dephasing_model(gamma):
    return RateModel(
        name="pure-dephasing",
        gamma1=_zero,
        gamma2=_zero,
        gamma3=_as_rate_function(gamma),
    )


def zero_model():
    """The trivial generator: every coefficient vanishes."""
    return RateModel(name="zero", gamma1=_zero, gamma2=_zero, gamma3=_zero)


# -- tabulated rates ---------------------------------------------------------


class LinearInterpolant:
    """Piecewise-linear function through ``(knots, values)``.

    Queries outside ``[knots[0], knots[-1]]`` raise :class:`DomainError`.
    """

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape:
            raise DomainError("knots and values must be 1-d arrays of equal length")
        if knots.size < 2:
            raise DomainError("a rate table needs at least 2 knots")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise DomainError("rate table contains non-finite entries")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("rate table knots must be strictly increasing")
        self.knots = knots
        self.values = values

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.knots[0]) or np.any(t > self.knots[-1]):
            raise DomainError(
                f"time outside tabulated range [{self.knots[0]}, {self.knots[-1]}]"
            )
        return np.interp(t, self.knots, self.values)


@dataclass(frozen=True)
class TabulatedRates:
    """Sampled rates on strictly increasing knots ``t``."""

    t: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    omega: np.ndarray = None


def rates_from_table(table, name="tabulated"):
    """Build a :class:`RateModel` that linearly interpolates ``table``."""
    omega = _zero if table.omega is None else LinearInterpolant(table.t, table.omega)
    return RateModel(
        name=name,
        gamma1=LinearInterpolant(table.t, table.gamma1),
        gamma2=LinearInterpolant(table.t, table.gamma2),
        gamma3=LinearInterpolant(table.t, table.gamma3),
        omega_h=omega,
    )


def read_rate_table(path):
    """Read a CSV with header ``t,gamma1,gamma2,gamma3`` and optional ``omega``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"t", "gamma1", "gamma2", "gamma3"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"rate table is missing columns {sorted(missing)}")
        rows = list(reader)
    try:
        columns = {key: np.array([float(r[key]) for r in rows]) for key in reader.fieldnames}
    except ValueError as exc:
        raise DomainError(f"rate table has a non-numeric entry: {exc}") from None
    return TabulatedRates(
        t=columns["t"],
        gamma1=columns["gamma1"],
        gamma2=columns["gamma2"],
        gamma3=columns["gamma3"],
        omega=columns.get("omega"),
    )


BUILTIN_MODELS = {
    "cp-osc": (cp_oscillating_model, ("nu", "omega"), "gamma1,2 = nu +- nu(2nu sin wt + w cos wt)/sqrt(4nu^2+w^2), gamma3 = 0"),
    "pdiv-crossover": (pdiv_crossover_model, ("k",), "gamma1 = e^-t/2, gamma2 = e^-t/4, gamma3 = (k/2) e^-3t/8 cos 2t"),
    "sign-violation": (sign_violation_model, ("k",), "gamma1 = gamma2 = e^-t/2 (k + cos 2t), gamma3 = e^-3t/8"),
    "amplitude-damping": (amplitude_damping_model, ("gamma",), "gamma2 = gamma (constant), gamma1 = gamma3 = 0"),
    "pure-dephasing": (pure_dephasing_model, ("gamma",), "gamma3 = gamma (constant), gamma1 = gamma2 = 0"),
    "zero": (zero_model, (), "all rates vanish"),
}


def build_model(name, **params):
    """Construct a built-in model by name, e.g. ``build_model("cp-osc", nu=8, omega=5)``."""
    try:
        factory, names, _ = BUILTIN_MODELS[name]
    except KeyError:
        raise DomainError(
            f"unknown model {name!r}; choose from {', '.join(BUILTIN_MODELS)}"
        ) from None
    missing = [p for p in names if params.get(p) is None]
    if missing:
        raise DomainError(f"model {name!r} needs parameters {missing}")
    return factory(*(float(params[p]) for p in names))
