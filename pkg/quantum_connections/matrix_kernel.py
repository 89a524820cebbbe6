"""Hermitian spectral calculus on small dense complex matrices."""
import logging
from typing import Callable

import numpy as np
import numpy.typing as npt
from scipy import linalg

from .common_types import (
    EigenSystem,
    EigenSolverError,
    InternalConsistencyError,
    SpectrumDomainError,
)
from .config import Settings, resolve

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]


def as_complex_matrix(a) -> ComplexMatrix:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermiticity_defect(a) -> float:
    m = np.asarray(a, dtype=complex)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def as_hermitian(a, settings: Settings | None = None) -> ComplexMatrix:
    """Validates Hermiticity and returns the exactly symmetrized matrix.

    Raises:
        ValueError: If max |A - A^dagger| exceeds the Hermitian tolerance.
    """
    settings = resolve(settings)
    m = as_complex_matrix(a)
    defect = hermiticity_defect(m)
    if defect > settings.hermitian_tol:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return (m + m.conj().T) / 2


def eig_hermitian(a, settings: Settings | None = None) -> EigenSystem:
    """Diagonalizes a Hermitian matrix, eigenvalues ascending.

    Args:
        a: Hermitian matrix.

    Returns:
        EigenSystem with orthonormal eigenvector columns.

    Raises:
        ValueError: If the matrix is not Hermitian.
        EigenSolverError: If the solver does not converge.
        InternalConsistencyError: If the decomposition does not reproduce the input.
    """
    h = as_hermitian(a, settings)
    norm = float(np.max(np.abs(h))) if h.size else 0.0
    try:
        w, v = linalg.eigh(h)
    except (linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(norm, str(e)) from e
    rebuilt = (v * w) @ v.conj().T
    defect = float(np.max(np.abs(rebuilt - h))) if h.size else 0.0
    if defect > 1e-10 * max(norm, 1.0):
        raise InternalConsistencyError(f"eigendecomposition residual {defect:.3e}")
    return EigenSystem(eigenvalues=w, eigenvectors=v, source_dim=h.shape[0])


def spectral_apply(system: EigenSystem, f: Callable[[np.ndarray], np.ndarray]) -> ComplexMatrix:
    """Applies f to a decomposed matrix."""
    with np.errstate(all="ignore"):
        values = np.asarray(f(system.eigenvalues))
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise SpectrumDomainError(float(system.eigenvalues[np.argmax(bad)]))
    u = system.eigenvectors
    out = (u * values) @ u.conj().T
    return (out + out.conj().T) / 2 if np.isrealobj(values) else out


def matrix_function(a, f: Callable[[np.ndarray], np.ndarray], settings: Settings | None = None) -> ComplexMatrix:
    """Returns f(A) = U diag(f(lambda)) U^dagger for Hermitian A.

    Raises:
        SpectrumDomainError: If f is undefined (non-finite) at some eigenvalue.
    """
    return spectral_apply(eig_hermitian(a, settings), f)


def kron(a, b) -> ComplexMatrix:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kubo_transform(rho, x, settings: Settings | None = None) -> ComplexMatrix:
    """Returns the Kubo-Mori transform of X at the positive-definite state rho.

    In the eigenbasis of rho the (i, j) entry of X is weighted by
    (p_i - p_j) / (log p_i - log p_j), falling back to p_i when the two
    logarithms agree within kubo_degeneracy_tol.

    Raises:
        SpectrumDomainError: If rho has an eigenvalue at or below pd_floor.
    """
    settings = resolve(settings)
    system = eig_hermitian(rho, settings)
    p = system.eigenvalues
    if p[0] <= settings.pd_floor:
        raise SpectrumDomainError(float(p[0]), "state is not positive definite")
    u = system.eigenvectors
    xt = u.conj().T @ as_complex_matrix(x) @ u
    lp = np.log(p)
    dl = lp[:, None] - lp[None, :]
    dp = p[:, None] - p[None, :]
    close = np.abs(dl) <= settings.kubo_degeneracy_tol
    weights = np.where(close, np.broadcast_to(p[:, None], dl.shape), dp / np.where(close, 1.0, dl))
    return u @ (xt * weights) @ u.conj().T
