"""Grid scans of the speed-limit ratio over initial states and horizons.

One ODE trajectory is computed per initial-state parameter ``a`` and the
ratio is read off at every horizon on the ``tau`` grid, since the action
integral is a running quantity.  Rows are always emitted ``a``-major, so the
output does not depend on how the rows were scheduled.
"""
import csv
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .divisibility import classify
from .errors import DomainError, NumericalError
from .propagate import TimeGrid, propagate_ode
from .qsl import qsl_along
from .rates import build_model
from .states import pure_state_from_a

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_TAU_MAX = {"cp-osc": 3.0}
FALLBACK_TAU_MAX = 10.0
UNITY_TOL = 1e-6
THREADS_ENV = "QSL_LAB_THREADS"


@dataclass
class ScanConfig:
    """Everything needed to regenerate one ``(a, tau)`` surface."""

    model: str
    nu: float = None
    omega: float = None
    k: float = None
    gamma: float = None
    a_count: int = 101
    tau_count: int = 200
    tau_max: float = None
    rtol: float = 1e-12
    atol: float = 1e-14
    substeps: int = 2
    output: str = None
    threads: int = None

    def __post_init__(self):
        if self.tau_max is None:
            self.tau_max = DEFAULT_TAU_MAX.get(self.model, FALLBACK_TAU_MAX)
        if self.a_count < 1 or self.tau_count < 1:
            raise DomainError("scan grids must be non-empty")
        if not self.tau_max > 0:
            raise DomainError(f"tau_max must be positive, got {self.tau_max}")

    @property
    def a_grid(self):
        return np.linspace(0.0, 1.0, self.a_count) if self.a_count > 1 else np.array([1.0])

    @property
    def tau_grid(self):
        return self.tau_max * np.arange(1, self.tau_count + 1) / self.tau_count

    def build_model(self):
        return build_model(self.model, nu=self.nu, omega=self.omega, k=self.k, gamma=self.gamma)

    @classmethod
    def from_mapping(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)


def load_config(path):
    """Read a flat TOML file whose keys mirror :class:`ScanConfig` fields."""
    with open(path, "rb") as fh:
        try:
            values = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise DomainError(f"cannot parse config {path}: {exc}") from None
    nested = [k for k, v in values.items() if isinstance(v, dict)]
    if nested:
        raise DomainError(f"config must be flat key = value pairs; tables found: {nested}")
    return values


def thread_count(requested=None):
    """Worker count: explicit request, else ``$QSL_LAB_THREADS``, else 1."""
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        requested = int(env) if env else 1
    return max(1, int(requested))


def _map_ordered(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class ScanResult:
    config: ScanConfig
    rows: np.ndarray  # columns a, tau, ratio, bures_angle, lambda_op
    verdict: object = None
    provenance: dict = field(default_factory=dict)

    columns = ("a", "tau", "ratio", "bures_angle", "lambda_op")

    @property
    def ratio_surface(self):
        """Ratios as an ``(a_count, tau_count)`` array."""
        return self.rows[:, 2].reshape(self.config.a_count, self.config.tau_count)

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(float(v)) for v in row])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write_csv(fh)

    def metadata(self):
        return {
            "config": asdict(self.config),
            "divisibility": None if self.verdict is None else self.verdict.to_dict(),
            "provenance": self.provenance,
        }


def _scan_row(model, a, cfg):
    per_step = cfg.tau_max / cfg.tau_count
    grid = TimeGrid(
        np.linspace(0.0, cfg.tau_max, cfg.tau_count * cfg.substeps + 1),
        rtol=cfg.rtol,
        atol=cfg.atol,
    )
    try:
        traj = propagate_ode(model, pure_state_from_a(a), grid)
        data = qsl_along(model, traj)
    except NumericalError as exc:
        raise NumericalError(f"scan failed at a = {a}: {exc}") from exc
    pick = np.arange(1, cfg.tau_count + 1) * cfg.substeps
    taus = np.arange(1, cfg.tau_count + 1) * per_step
    return np.column_stack([
        np.full(cfg.tau_count, a),
        taus,
        data["ratio"][pick],
        data["bures_angle"][pick],
        data["lambda_op"][pick],
    ])


def qsl_surface_scan(cfg, model=None, with_verdict=True):
    """Evaluate the speed-limit ratio on the full ``(a, tau)`` grid of ``cfg``.

    ``model`` overrides the built-in named in ``cfg`` (for tabulated rates).
    """
    model = cfg.build_model() if model is None else model
    threads = thread_count(cfg.threads)
    blocks = _map_ordered(lambda a: _scan_row(model, float(a), cfg), cfg.a_grid, threads)
    verdict = classify(model) if with_verdict else None
    return ScanResult(
        config=cfg,
        rows=np.vstack(blocks),
        verdict=verdict,
        provenance={
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "tau_grid": f"{cfg.tau_count} uniform points on (0, {cfg.tau_max}]",
            "a_grid": f"{cfg.a_count} uniform points on [0, 1]",
        },
    )


@dataclass(frozen=True)
class TrajectoryPanel:
    t: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    coh_abs: np.ndarray
    fidelity: np.ndarray
    qsl_ratio_running: np.ndarray

    columns = ("t", "p0", "p1", "coh_abs", "fidelity", "qsl_ratio_running")

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.columns)
        for row in zip(*(getattr(self, c) for c in self.columns)):
            writer.writerow([repr(float(v)) for v in row])


def trajectory_panel(model, a, tau, n_nodes=2001, rtol=1e-12, atol=1e-14):
    """Populations, coherence, fidelity and the running ratio on ``[0, t]`` per node."""
    grid = TimeGrid.uniform(tau, n_nodes, rtol=rtol, atol=atol)
    traj = propagate_ode(model, pure_state_from_a(a), grid)
    p0, p1 = traj.populations
    return TrajectoryPanel(
        t=traj.times,
        p0=p0,
        p1=p1,
        coh_abs=np.abs(traj.coherence),
        fidelity=traj.fidelity,
        qsl_ratio_running=qsl_along(model, traj)["ratio"],
    )


@dataclass(frozen=True)
class ScanComparison:
    """Per-point ratio differences between two scans on the same grid."""

    rows: np.ndarray  # columns a, tau, ratio_a, ratio_b, diff
    unity_only_a: np.ndarray
    unity_only_b: np.ndarray

    @property
    def max_abs_diff(self):
        return float(np.max(np.abs(self.rows[:, 4])))

    @property
    def unity_regions_match(self):
        return self.unity_only_a.size == 0 and self.unity_only_b.size == 0


def compare_scans(first, second, tol=UNITY_TOL):
    """Difference of two scans and the points where only one of them has ratio 1.

    Raises
    ------
    DomainError
        If the scans were computed on different grids.
    """
    if first.rows.shape != second.rows.shape or not np.array_equal(first.rows[:, :2], second.rows[:, :2]):
        raise DomainError("scans were computed on different (a, tau) grids")
    ra, rb = first.rows[:, 2], second.rows[:, 2]
    unity_a = np.abs(ra - 1.0) <= tol
    unity_b = np.abs(rb - 1.0) <= tol
    return ScanComparison(
        rows=np.column_stack([first.rows[:, :2], ra, rb, rb - ra]),
        unity_only_a=first.rows[unity_a & ~unity_b, :2],
        unity_only_b=first.rows[unity_b & ~unity_a, :2],
    )


def write_metadata(result, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.metadata(), fh, indent=2, default=float)
        fh.write("\n")
