"""Distance-type functionals of qubit states and generator outputs."""
import numpy as np

from .errors import DomainError
from .states import _as_matrix, _eigenvalues_unchecked, hermiticity_defect

PURITY_TOL = 1e-10


def fidelity(rho0, rhot):
    """Uhlmann fidelity ``Tr[sqrt(sqrt(rhot) rho0 sqrt(rhot))]^2``.

    For a pure ``rho0`` (``det rho0 <= 1e-10``) this is ``<phi0|rhot|phi0>``,
    i.e. ``Tr(rho0 rhot)``.  For two mixed qubit states the closed form
    ``Tr(rho0 rhot) + 2 sqrt(det rho0 det rhot)`` is used.
    Broadcasts over leading axes of ``rhot``.
    """
    rho0 = _as_matrix(rho0)
    rhot = _as_matrix(rhot)
    overlap = np.einsum("...ij,...ji->...", rho0, rhot).real
    det0 = np.linalg.det(rho0).real
    if np.all(np.abs(det0) <= PURITY_TOL):
        f = overlap
    else:
        dett = np.linalg.det(rhot).real
        f = overlap + 2.0 * np.sqrt(np.clip(det0 * dett, 0.0, None))
    return np.clip(f, 0.0, 1.0)


def bures_angle(rho0, rhot):
    """Bures angle ``arccos(sqrt(<phi0|rhot|phi0>))`` from a pure initial state."""
    rho0 = _as_matrix(rho0)
    if abs(np.linalg.det(rho0)) > PURITY_TOL:
        raise DomainError("Bures angle is defined here for a pure initial state only")
    return np.arccos(np.sqrt(fidelity(rho0, rhot)))


def operator_norm(m):
    """Largest singular value of a 2x2 matrix (or a stack of them).

    Hermitian input uses the closed-form eigenvalues; anything else goes
    through the eigenvalues of ``m^dagger m``.
    """
    m = _as_matrix(m)
    if np.all(hermiticity_defect(m) <= 1e-10):
        lam_plus, lam_minus = _eigenvalues_unchecked(m)
        return np.maximum(np.abs(lam_plus), np.abs(lam_minus))
    gram = np.conj(np.swapaxes(m, -1, -2)) @ m
    largest, _ = _eigenvalues_unchecked(gram)
    return np.sqrt(np.clip(largest, 0.0, None))
