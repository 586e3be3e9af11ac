"""
Triple-well + reservoir model: bare Hamiltonian, reservoir statistics,
coupling overlaps, Markovian counter term and transport rates.

Reservoir dispersion is Omega_k = k^2 on 0 < Omega < Delta; the k-measure is
normalized to the band so C and Cbar carry the 1/sqrt(Delta).
"""
import math
from typing import Optional, Union

import numpy as np

from app.errors import DomainError
from app.models import HOPPING_J, ModelParams, Overlaps

ArrayLike = Union[float, np.ndarray]


def build_h0(params: ModelParams, mu: Optional[float] = None) -> np.ndarray:
    """Bare triple-well matrix: -mu on the diagonal, -J between neighbours."""
    mu = params.mu if mu is None else mu
    if mu is None:
        raise DomainError("chemical potential not resolved yet")
    h0 = np.zeros((3, 3), dtype=np.complex128)
    np.fill_diagonal(h0, -mu)
    h0[0, 1] = h0[1, 0] = h0[1, 2] = h0[2, 1] = -HOPPING_J
    return h0


def reflection() -> np.ndarray:
    """Site permutation x -> -x."""
    return np.eye(3)[::-1].astype(np.complex128)


def bose_einstein(beta: float, omega: ArrayLike) -> ArrayLike:
    """1/(e^{beta omega} - 1)."""
    x = beta * np.asarray(omega, dtype=float)
    if np.any(x <= 0):
        raise DomainError(f"Bose-Einstein occupation undefined for beta*omega <= 0 (got {np.min(x):.6g})")
    occupation = 1.0 / np.expm1(x)
    return float(occupation) if occupation.ndim == 0 else occupation


def _check_band(omega: np.ndarray, delta: float) -> None:
    guard = 1e-6 * delta
    if np.any(omega <= guard) or np.any(omega >= delta - guard):
        raise DomainError(
            f"energy {np.array2string(np.atleast_1d(omega), precision=6)} outside reservoir band (0, {delta:g})"
        )


def kernel_c(omega: ArrayLike, delta: float) -> ArrayLike:
    """Resonant kernel C(omega) = 1/(2 sqrt(omega Delta))."""
    w = np.asarray(omega, dtype=float)
    _check_band(w, delta)
    c = 0.5 / np.sqrt(w * delta)
    return float(c) if c.ndim == 0 else c


def kernel_cbar(omega: ArrayLike, delta: float) -> ArrayLike:
    """Principal-value kernel C(omega) * log((sqrt(Delta) - sqrt(omega)) / (sqrt(Delta) + sqrt(omega)))."""
    w = np.asarray(omega, dtype=float)
    _check_band(w, delta)
    root_w, root_d = np.sqrt(w), math.sqrt(delta)
    cbar = 0.5 / np.sqrt(w * delta) * np.log((root_d - root_w) / (root_d + root_w))
    return float(cbar) if cbar.ndim == 0 else cbar


def overlaps(frame: np.ndarray) -> Overlaps:
    return Overlaps(values=np.sum(frame, axis=0))


def counterterm_markovian(
    ov: Overlaps,
    omega: np.ndarray,
    params: ModelParams,
    gbar: float,
) -> np.ndarray:
    """
    On-shell counter term in the frame basis.

    d_{l1 l2} = -(gbar^2/2) I*_{l1} I_{l2} {Cbar(w1) + Cbar(w2) + i pi C(w1) - i pi C(w2)}

    Exactly Hermitian as constructed. With params.offdiagonal_counterterm
    off, only the diagonal survives.
    """
    omega = np.asarray(omega, dtype=float)
    c = kernel_c(omega, params.delta)
    cbar = kernel_cbar(omega, params.delta)

    kernel = cbar[:, None] + cbar[None, :] + 1j * math.pi * (c[:, None] - c[None, :])
    weights = np.conj(ov.values)[:, None] * ov.values[None, :]
    delta_omega = -0.5 * gbar**2 * weights * kernel

    if not params.offdiagonal_counterterm:
        delta_omega = np.diag(np.diag(delta_omega))
    return delta_omega


def transport_coefficients(
    ov: Overlaps,
    omega: np.ndarray,
    params: ModelParams,
    gbar: float,
) -> tuple[np.ndarray, np.ndarray]:
    """(rate, target) with dn/dt = -rate * (n - target)."""
    omega = np.asarray(omega, dtype=float)
    rate = 2.0 * math.pi * gbar**2 * np.abs(ov.values) ** 2 * kernel_c(omega, params.delta)
    target = bose_einstein(params.beta, omega)
    return rate, target


def transport_rhs(
    n: np.ndarray,
    ov: Overlaps,
    omega: np.ndarray,
    params: ModelParams,
    gbar: float,
) -> np.ndarray:
    """Markovian quantum transport equation dn_l/dt."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise DomainError(f"negative occupation {n}")
    rate, target = transport_coefficients(ov, omega, params, gbar)
    return -rate * (n - target)


def delta_omega_to_site_basis(delta_omega_ell: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """V d V^H"""
    return frame @ delta_omega_ell @ frame.conj().T


def delta_omega_to_mode_basis(delta_omega_x: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """V^H d V"""
    return frame.conj().T @ delta_omega_x @ frame


ODD_MODE = np.array([1.0, 0.0, -1.0]) / math.sqrt(2.0)


def odd_mode_defect(frame: np.ndarray) -> float:
    """Distance of column o from (1, 0, -1)/sqrt2 after removing its global phase."""
    column = frame[:, 1]
    overlap = np.vdot(ODD_MODE, column)
    if abs(overlap) == 0.0:
        return float(np.max(np.abs(column)) + 1.0)
    return float(np.max(np.abs(column * (abs(overlap) / overlap) - ODD_MODE)))
