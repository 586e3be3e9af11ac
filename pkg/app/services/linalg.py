"""
Dense Hermitian / unitary linear algebra for small frames.

Written for general N; the shipped model uses N = 3.
"""
import logging
from typing import Optional

import numpy as np
from scipy.linalg import polar

from app.errors import ContractViolationError, DegeneracyError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
# Inputs this close to unitary are returned untouched by reunitarize
UNITARY_EXACT_TOL = 1e-13
REUNITARIZE_MAX_DISTANCE = 1e-6
PHASE_TIE_TOL = 1e-12


def hermitian_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def unitarity_defect(frame: np.ndarray) -> float:
    identity = np.eye(frame.shape[1])
    return float(np.max(np.abs(frame.conj().T @ frame - identity)))


def require_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Assert the HermitianView contract and return the matrix as complex128."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractViolationError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ContractViolationError("matrix has non-finite entries")
    defect = hermitian_defect(matrix)
    if defect > tol:
        raise ContractViolationError(f"matrix is not Hermitian: |M - M^H|_max = {defect:.3e}")
    return matrix


def require_unitary(frame: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    """Assert the UnitaryFrame contract."""
    frame = np.asarray(frame, dtype=np.complex128)
    defect = unitarity_defect(frame)
    if defect > tol:
        raise ContractViolationError(f"frame is not unitary: |V^H V - I|_max = {defect:.3e}")
    return frame


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """
    Rotate each column so its largest-magnitude component is real positive.

    Ties within PHASE_TIE_TOL go to the lowest row index, which keeps the
    odd mode of a reflection-symmetric matrix at (1, 0, -1)/sqrt(2).
    """
    vectors = np.array(vectors, dtype=np.complex128)
    for col in range(vectors.shape[1]):
        magnitudes = np.abs(vectors[:, col])
        pivot = int(np.argmax(magnitudes >= magnitudes.max() * (1.0 - PHASE_TIE_TOL)))
        anchor = vectors[pivot, col]
        vectors[:, col] *= abs(anchor) / anchor
    return vectors


def eig_hermitian(
    matrix: np.ndarray,
    min_gap: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a Hermitian matrix.

    Returns ascending eigenvalues and a unitary frame of eigenvectors under
    the fix_phases convention. With `min_gap`, adjacent eigenvalues closer
    than that raise DegeneracyError.
    """
    matrix = require_hermitian(matrix)
    # Symmetrize so the solver sees an exactly Hermitian input
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))

    if min_gap is not None and eigenvalues.size > 1:
        gap = float(np.min(np.diff(eigenvalues)))
        if gap < min_gap:
            raise DegeneracyError(f"eigenvalue gap {gap:.3e} below {min_gap:.1e}")

    return eigenvalues, fix_phases(eigenvectors)


def propagate_unitary(hamiltonian: np.ndarray, shift: float, dt: float) -> np.ndarray:
    """exp(-i dt (H - shift I)) via the spectral decomposition of H."""
    if not dt > 0:
        raise ContractViolationError(f"dt must be positive, got {dt}")
    eigenvalues, eigenvectors = eig_hermitian(hamiltonian)
    phases = np.exp(-1j * dt * (eigenvalues - shift))
    return (eigenvectors * phases) @ eigenvectors.conj().T


def reunitarize(frame: np.ndarray) -> np.ndarray:
    """Nearest unitary matrix in Frobenius norm (polar factor)."""
    frame = np.asarray(frame, dtype=np.complex128)
    defect = unitarity_defect(frame)
    if defect <= UNITARY_EXACT_TOL:
        return frame
    if defect > 3 * REUNITARIZE_MAX_DISTANCE:
        logger.warning(f"Reunitarizing a frame far from unitary (defect {defect:.3e})")

    singular_values = np.linalg.svd(frame, compute_uv=False)
    if singular_values.min() <= np.finfo(float).eps * singular_values.max():
        raise DegeneracyError("cannot reunitarize a singular frame")

    unitary, _ = polar(frame)
    return unitary
