"""Qubit state algebra: density matrices, Bloch vectors and 2x2 Hermitian helpers.

Basis convention: ``SIGMA_3 = diag(1, -1)``, so index 0 is the sigma_3 = +1
level.  The dissipation channel (``SIGMA_MINUS``) empties index 0 into
index 1, which makes index 0 the excited level.

Every function accepts stacked input of shape ``(..., 2, 2)`` unless noted.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = (SIGMA_1 + 1j * SIGMA_2) / 2
SIGMA_MINUS = (SIGMA_1 - 1j * SIGMA_2) / 2
IDENTITY = np.eye(2, dtype=complex)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
BLOCH_TOL = 1e-10

EXCITED = 0
GROUND = 1


def _as_matrix(m):
    m = np.asarray(m, dtype=complex)
    if m.shape[-2:] != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {m.shape}")
    return m


def pure_state_from_a(a):
    """Pure state ``[[a, sqrt(a(1-a))], [sqrt(a(1-a)), 1-a]]``.

    The phase of the coherence is fixed to zero; phase-covariant dynamics
    does not depend on it.
    """
    a = float(a)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    c = np.sqrt(a * (1.0 - a))
    return np.array([[a, c], [c, 1.0 - a]], dtype=complex)


def bloch_from_density(rho):
    """Bloch vector ``(x, y, z)`` with ``rho = (I + x s1 + y s2 + z s3) / 2``."""
    rho = _as_matrix(rho)
    x = 2.0 * rho[..., 0, 1].real
    y = -2.0 * rho[..., 0, 1].imag
    z = (rho[..., 0, 0] - rho[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)


def density_from_bloch(r):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise DomainError(f"expected a 3-vector, got shape {r.shape}")
    norm = np.linalg.norm(r, axis=-1)
    if np.any(norm > 1.0 + BLOCH_TOL):
        raise DomainError(f"Bloch vector length {np.max(norm)} exceeds 1")
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    rho = np.empty(r.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = (1.0 + z) / 2
    rho[..., 1, 1] = (1.0 - z) / 2
    rho[..., 0, 1] = (x - 1j * y) / 2
    rho[..., 1, 0] = (x + 1j * y) / 2
    return rho


def hermiticity_defect(m):
    """Largest entrywise deviation of ``m`` from its conjugate transpose."""
    m = _as_matrix(m)
    return np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))), axis=(-2, -1))


def _eigenvalues_unchecked(m):
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    half_trace = (a + d) / 2
    # sqrt(tr^2 - 4 det) / 2 written without the cancellation in tr^2 - 4 det
    radius = np.hypot((a - d) / 2, np.abs(m[..., 0, 1]))
    return half_trace + radius, half_trace - radius


def hermitian_eigenvalues(m):
    """Closed-form eigenvalues ``(lam_plus, lam_minus)`` of a Hermitian 2x2 matrix.

    Raises
    ------
    DomainError
        If ``m`` is not Hermitian to within 1e-10.
    """
    m = _as_matrix(m)
    if np.any(hermiticity_defect(m) > 1e-10):
        raise DomainError("matrix is not Hermitian")
    return _eigenvalues_unchecked(m)


@dataclass(frozen=True)
class DensityDiagnostics:
    """Outcome of :func:`validate_density`.

    ``state`` holds the validated matrix when every invariant holds, otherwise
    ``violations`` maps each failed invariant to its magnitude.
    """

    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    violations: dict = field(default_factory=dict)
    state: np.ndarray = None

    @property
    def ok(self):
        return not self.violations


def validate_density(m):
    """Check the density-matrix invariants of a single 2x2 matrix.

    Never raises for well-shaped input; inspect ``.ok`` and ``.violations``.
    """
    m = _as_matrix(m)
    herm = float(max(hermiticity_defect(m), abs(m[0, 0].imag), abs(m[1, 1].imag)))
    trace = float(abs((m[0, 0] + m[1, 1]).real - 1.0))
    # eigenvalues of the Hermitian part so the check is defined for any input
    sym = (m + m.conj().T) / 2
    min_eig = float(_eigenvalues_unchecked(sym)[1])
    violations = {}
    if herm > HERMITICITY_TOL:
        violations["hermiticity"] = herm
    if trace > TRACE_TOL:
        violations["trace"] = trace
    if min_eig < -POSITIVITY_TOL:
        violations["positivity"] = min_eig
    return DensityDiagnostics(herm, trace, min_eig, violations, None if violations else m)


def require_density(m):
    """Return ``m`` as a density matrix or raise :class:`DomainError`."""
    diag = validate_density(m)
    if not diag.ok:
        raise DomainError(f"invalid density matrix: {diag.violations}")
    return diag.state


def is_pure(rho, tol=1e-10):
    rho = _as_matrix(rho)
    return bool(abs(np.linalg.det(rho)) <= tol)


def random_pure_states(n, rng):
    """``n`` Haar-random pure density matrices, shape ``(n, 2, 2)``."""
    psi = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    return psi[:, :, None] * psi.conj()[:, None, :]


def random_density_matrices(n, rng):
    """``n`` random mixed states drawn uniformly from the Bloch ball."""
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(size=(n, 1)) ** (1 / 3)
    return density_from_bloch(direction * radius)
