"""CP- and P-divisibility of phase-covariant dynamics from the rate functions.

The map is CP-divisible on a window when every rate is non-negative there.
It is P-divisible when ``gamma1, gamma2 >= 0`` and
``sqrt(gamma1 gamma2) + 2 gamma3 > 0``.  Isolated zeros of the second
expression are borderline; see :func:`check_p_divisible` for how they are
decided.

Conditions are checked by dense sampling; local minima between samples are
located with a bounded scalar minimizer so narrow dips are not missed, and
the ends of every violation interval are bisected to ``xtol``.
"""
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .errors import DomainError

RATE_EPS = 1e-12
BORDERLINE_EPS = 1e-12
DEFAULT_SAMPLES = 10_000
DEFAULT_WINDOW = 20.0
XTOL = 1e-10


class DivisibilityClass(str, Enum):
    CP_DIVISIBLE = "CP_DIVISIBLE"
    P_DIVISIBLE_ONLY = "P_DIVISIBLE_ONLY"
    NON_P_DIVISIBLE = "NON_P_DIVISIBLE"


class Condition(str, Enum):
    CP_RATE_SIGN = "CP_RATE_SIGN"  # some gamma_i < 0
    RATE_SIGN = "RATE_SIGN"  # gamma1 or gamma2 < 0
    DISSIPATIVITY = "DISSIPATIVITY"  # sqrt(gamma1 gamma2) + 2 gamma3 < 0
    BORDERLINE = "BORDERLINE"  # sqrt(gamma1 gamma2) + 2 gamma3 = 0


@dataclass(frozen=True)
class Violation:
    """A time interval on which ``condition`` fails.

    ``worst`` is the most negative value of the violated expression and
    ``witness`` the time where it occurs.  For borderline records ``worst``
    is the margin of the derivative rule ``dgamma3/dt - gamma3 (gamma1 + gamma2)``.
    """

    condition: Condition
    t_lo: float
    t_hi: float
    worst: float
    witness: float
    quantity: str = ""

    def to_dict(self):
        return {
            "condition": self.condition.value,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "worst": self.worst,
        }


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    violations: tuple = ()


@dataclass(frozen=True)
class DivisibilityVerdict:
    window: tuple
    divisibility: DivisibilityClass
    violations: tuple
    samples_per_unit_time: float
    p_check: CheckResult = field(default=None, repr=False)

    def to_dict(self):
        return {
            "class": self.divisibility.value,
            "window": list(self.window),
            "violations": [v.to_dict() for v in self.violations],
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def _sample_times(T, samples):
    if not T > 0:
        raise DomainError(f"window length must be positive, got {T}")
    return np.linspace(0.0, float(T), int(samples) + 1)


def _refined_grid(fn, t):
    """Sample grid with the location of every interior local minimum added."""
    v = fn(t)
    interior = np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])) + 1
    extra = []
    for i in interior:
        res = minimize_scalar(
            lambda s: float(fn(np.array(s))),
            bounds=(t[i - 1], t[i + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        extra.append(res.x)
    if not extra:
        return t, v
    t = np.union1d(t, extra)
    return t, fn(t)


def _runs(mask):
    """Index pairs ``(first, last)`` of each run of True in ``mask``."""
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1))


def _edge(fn, level, inside, outside):
    g = lambda s: float(fn(np.array(s))) - level  # noqa: E731
    return bisect(g, outside, inside, xtol=XTOL) if g(outside) * g(inside) < 0 else inside


def _negative_intervals(fn, t, condition, quantity, eps=RATE_EPS):
    t, v = _refined_grid(fn, t)
    found = []
    for i, j in _runs(v < -eps):
        lo = t[i] if i == 0 else _edge(fn, -eps, t[i], t[i - 1])
        hi = t[j] if j == t.size - 1 else _edge(fn, -eps, t[j], t[j + 1])
        k = i + int(np.argmin(v[i : j + 1]))
        found.append(Violation(condition, float(lo), float(hi), float(v[k]), float(t[k]), quantity))
    return found


def _rate(model, index):
    return lambda t: model.rates(t)[index]


def _dissipativity(model):
    def margin(t):
        _, g1, g2, g3 = model.rates(t)
        return np.sqrt(np.clip(g1, 0.0, None) * np.clip(g2, 0.0, None)) + 2.0 * g3

    return margin


def check_cp_divisible(model, T, samples=DEFAULT_SAMPLES):
    """All three rates non-negative (to -1e-12) on ``[0, T]``."""
    t = _sample_times(T, samples)
    found = []
    for index, name in ((1, "gamma1"), (2, "gamma2"), (3, "gamma3")):
        found += _negative_intervals(_rate(model, index), t, Condition.CP_RATE_SIGN, name)
    return CheckResult(not found, tuple(found))


def _derivative_rule_margin(model, t, step):
    """``dgamma3/dt - gamma3 (gamma1 + gamma2)``; positive means the rule holds."""
    lo = max(t - step, 0.0)
    hi = t + step
    g3_lo, g3_hi = model.rates(np.array([lo, hi]))[3]
    _, g1, g2, g3 = (float(x) for x in model.rates(np.array(t)))
    return (g3_hi - g3_lo) / (hi - lo) - g3 * (g1 + g2)


def check_p_divisible(model, T, samples=DEFAULT_SAMPLES, borderline="strict"):
    """P-divisibility on ``[0, T]`` from the rate conditions.

    ``borderline`` selects how times with ``|sqrt(gamma1 gamma2) + 2 gamma3| <= 1e-12``
    are treated:

    ``"strict"``
        The strict inequality is required, so every borderline time is a
        violation.  Under this reading the crossover model is non-P-divisible
        for every ``k >= 1``.
    ``"derivative"``
        A borderline time is a violation only if
        ``dgamma3/dt > gamma3 (gamma1 + gamma2)`` fails there; the derivative
        is a central difference with step ``1e-6 max(1, T)``.

    In both modes the record carries the derivative-rule margin as ``worst``.
    """
    if borderline not in ("strict", "derivative"):
        raise DomainError(f"unknown borderline rule {borderline!r}")
    t = _sample_times(T, samples)
    found = []
    for index, name in ((1, "gamma1"), (2, "gamma2")):
        found += _negative_intervals(_rate(model, index), t, Condition.RATE_SIGN, name)

    margin = _dissipativity(model)
    found += _negative_intervals(margin, t, Condition.DISSIPATIVITY, "sqrt(g1 g2) + 2 g3", BORDERLINE_EPS)

    step = 1e-6 * max(1.0, float(T))
    tt, v = _refined_grid(margin, t)
    for i, j in _runs(np.abs(v) <= BORDERLINE_EPS):
        rule = np.array([_derivative_rule_margin(model, s, step) for s in tt[i : j + 1]])
        k = int(np.argmin(rule))
        if borderline == "strict" or rule[k] <= 0:
            found.append(Violation(Condition.BORDERLINE, float(tt[i]), float(tt[j]), float(rule[k]), float(tt[i + k]), "dgamma3/dt - gamma3 (gamma1 + gamma2)"))
    found.sort(key=lambda v: (v.t_lo, v.condition.value))
    return CheckResult(not found, tuple(found))


def classify(model, T=DEFAULT_WINDOW, samples=DEFAULT_SAMPLES, borderline="strict"):
    """Classify the dynamics on ``[0, T]``.

    Examples
    --------
    >>> from qsl_lab.rates import pdiv_crossover_model
    >>> classify(pdiv_crossover_model(0.5)).divisibility.value
    'P_DIVISIBLE_ONLY'
    """
    cp = check_cp_divisible(model, T, samples)
    p = check_p_divisible(model, T, samples, borderline)
    if cp.passed:
        cls, violations = DivisibilityClass.CP_DIVISIBLE, ()
    elif p.passed:
        cls, violations = DivisibilityClass.P_DIVISIBLE_ONLY, cp.violations
    else:
        cls, violations = DivisibilityClass.NON_P_DIVISIBLE, p.violations
    return DivisibilityVerdict((0.0, float(T)), cls, violations, samples / float(T), p)


def is_p_divisible(model, T=DEFAULT_WINDOW, samples=DEFAULT_SAMPLES, borderline="strict"):
    return classify(model, T, samples, borderline).divisibility is not DivisibilityClass.NON_P_DIVISIBLE


def critical_k_scan(family, k_lo, k_hi, T=DEFAULT_WINDOW, tol=1e-3, samples=DEFAULT_SAMPLES, borderline="strict"):
    """Bisect the parameter ``k`` of ``family`` for the P-divisibility transition.

    Raises
    ------
    DomainError
        If both ends of ``[k_lo, k_hi]`` fall in the same class.
    """
    def p_div(k):
        return is_p_divisible(family(k), T, samples, borderline)

    lo_class, hi_class = p_div(k_lo), p_div(k_hi)
    if lo_class == hi_class:
        raise DomainError(f"k = {k_lo} and k = {k_hi} are both {'P-divisible' if lo_class else 'non-P-divisible'}")
    lo, hi = float(k_lo), float(k_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p_div(mid) == lo_class:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
