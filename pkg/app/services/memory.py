"""
Frozen-history memory check for Triwell.

Evaluates the non-Markovian counter term and transport rate with the state
held fixed over the memory window, at a finite adiabatic regulator epsilon,
and compares the epsilon -> 0 extrapolation with the Markovian formulas.

With I, n and omega frozen, the time integral for each mode reduces to

    F_l(k) = int_0^W dtau exp(-(epsilon + i(k^2 - omega_l)) tau),   W = window_factor / epsilon

taken with the trapezoid rule at step s_step. The integrand is a pure
exponential, so the trapezoid sum is a geometric series and is evaluated in
closed form. The k integral (measure dk / sqrt(Delta) on [0, sqrt(Delta)]) is
Gauss-Legendre on pieces split at every resonance sqrt(omega_l).
"""
import logging
import math
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from app.errors import AccuracyError, ContractViolationError
from app.models import MemoryCheckConfig, MemoryCheckResult, MemoryCheckRow, ModelParams, SystemState
from app.services.kernels import bose_einstein, counterterm_markovian, overlaps, transport_rhs

logger = logging.getLogger(__name__)

# Modes compared against the Markovian reference; the odd mode decouples
COUPLED_MODES = (0, 2)
MIN_NODES_PER_PIECE = 8


def _k_grid(breakpoints: list[float], k_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights over consecutive breakpoint pieces."""
    edges = sorted(set(breakpoints))
    pieces = list(zip(edges[:-1], edges[1:]))
    per_piece = max(k_points // len(pieces), MIN_NODES_PER_PIECE)
    x, w = leggauss(per_piece)

    nodes, weights = [], []
    for a, b in pieces:
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def time_kernel(k: np.ndarray, omega: float, epsilon: float, s_step: float, window: float) -> np.ndarray:
    """Trapezoid sum of exp(-(epsilon + i(k^2 - omega)) tau) over tau in [0, window]."""
    n_intervals = int(math.ceil(window / s_step))
    a = (epsilon + 1j * (k**2 - omega)) * s_step
    # sum_{j=0}^{M} z^j with z = e^{-a}
    total = np.expm1(-a * (n_intervals + 1)) / np.expm1(-a)
    last = np.exp(-a * n_intervals)
    return s_step * (total - 0.5 * (1.0 + last))


def _evaluate(
    state: SystemState,
    params: ModelParams,
    gbar: float,
    epsilon: float,
    k_points: int,
    s_step: float,
    window: float,
    ir_fraction: float,
) -> tuple[np.ndarray, np.ndarray]:
    root_delta = math.sqrt(params.delta)
    omega = state.omega
    values = overlaps(state.frame).values
    resonances = [math.sqrt(w) for w in omega if 0 < w < params.delta]

    # Counter term: full band
    k, w = _k_grid([0.0, root_delta, *resonances], k_points)
    w = w / root_delta
    integrals = np.array([np.sum(w * time_kernel(k, omega[ell], epsilon, s_step, window)) for ell in range(3)])
    delta_omega = -0.5j * gbar**2 * np.conj(values)[:, None] * values[None, :] * (
        integrals[:, None] - np.conj(integrals)[None, :]
    )
    if not params.offdiagonal_counterterm:
        delta_omega = np.diag(np.diag(delta_omega))

    # Transport: the finite-epsilon tail diverges against N(k^2) at k -> 0, so cut below the resonance
    n_dot = np.zeros(3)
    for ell in range(3):
        lower = ir_fraction * math.sqrt(omega[ell])
        k, w = _k_grid([lower, root_delta, *(r for r in resonances if r > lower)], k_points)
        w = w / root_delta
        kernel = time_kernel(k, omega[ell], epsilon, s_step, window)
        bracket = state.n[ell] - bose_einstein(params.beta, k**2)
        n_dot[ell] = -2.0 * gbar**2 * abs(values[ell]) ** 2 * float(np.real(np.sum(w * kernel * bracket)))

    return delta_omega, n_dot


def _relative_change(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b))) / scale


def frozen_history_memory_check(
    state: SystemState,
    params: ModelParams,
    gbar: float,
    epsilon: float,
    config: Optional[MemoryCheckConfig] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Non-Markovian counter term and dn/dt at regulator `epsilon`.

    Raises AccuracyError when halving the k budget moves the result by more
    than config.accuracy_tol relative to its largest entry.
    """
    config = config or MemoryCheckConfig()
    if not epsilon > 0:
        raise ContractViolationError(f"epsilon must be positive, got {epsilon}")
    window = config.window_factor / epsilon

    args = (state, params, gbar, epsilon)
    tail = (config.s_step, window, config.ir_fraction)
    delta_omega, n_dot = _evaluate(*args, config.k_points, *tail)
    coarse_delta, coarse_n_dot = _evaluate(*args, config.k_points // 2, *tail)

    estimate = max(_relative_change(coarse_delta, delta_omega), _relative_change(coarse_n_dot, n_dot))
    if estimate > config.accuracy_tol:
        raise AccuracyError(f"k quadrature unresolved at epsilon = {epsilon:g} with {config.k_points} points", estimate)

    logger.debug(f"epsilon = {epsilon:g}: k-budget estimate {estimate:.2e}")
    return delta_omega, n_dot


def richardson_zero(epsilons: list[float], values: list[np.ndarray]) -> np.ndarray:
    """Neville extrapolation of values(epsilon) to epsilon = 0."""
    if len(epsilons) != len(values) or not epsilons:
        raise ContractViolationError("need one value per epsilon")
    x = [float(e) for e in epsilons]
    p = [np.asarray(v) for v in values]
    m = len(x)
    for level in range(1, m):
        for i in range(m - level):
            j = i + level
            p[i] = (x[i] * p[i + 1] - x[j] * p[i]) / (x[i] - x[j])
    return p[0]


def memory_check_table(
    state: SystemState,
    params: ModelParams,
    gbar: float,
    config: Optional[MemoryCheckConfig] = None,
) -> MemoryCheckResult:
    """Epsilon ladder, its extrapolation and the Markovian reference for one frozen state."""
    config = config or MemoryCheckConfig()
    rows = []
    for epsilon in config.epsilons:
        delta_omega, n_dot = frozen_history_memory_check(state, params, gbar, epsilon, config)
        rows.append(MemoryCheckRow(label=f"eps={epsilon:g}", epsilon=epsilon, delta_omega=delta_omega, n_dot=n_dot))

    extrapolated = MemoryCheckRow(
        label="extrapolated",
        epsilon=0.0,
        delta_omega=richardson_zero(list(config.epsilons), [row.delta_omega for row in rows]),
        n_dot=richardson_zero(list(config.epsilons), [row.n_dot for row in rows]),
    )

    ov = overlaps(state.frame)
    markovian = MemoryCheckRow(
        label="markovian",
        delta_omega=counterterm_markovian(ov, state.omega, params, gbar),
        n_dot=transport_rhs(state.n, ov, state.omega, params, gbar),
    )

    block = np.ix_(COUPLED_MODES, COUPLED_MODES)
    dw_error = _entrywise_error(extrapolated.delta_omega[block], markovian.delta_omega[block])
    n_dot_error = _entrywise_error(
        extrapolated.n_dot[list(COUPLED_MODES)], markovian.n_dot[list(COUPLED_MODES)]
    )
    logger.info(f"Memory check: counter-term error {dw_error:.2e}, transport error {n_dot_error:.2e}")

    return MemoryCheckResult(
        rows=rows,
        extrapolated=extrapolated,
        markovian=markovian,
        delta_omega_rel_error=dw_error,
        n_dot_rel_error=n_dot_error,
    )


def _entrywise_error(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Largest |estimate - reference| / |reference| over the nonzero reference entries."""
    mask = np.abs(reference) > 0
    if not np.any(mask):
        return float(np.max(np.abs(estimate)))
    return float(np.max(np.abs(estimate[mask] - reference[mask]) / np.abs(reference[mask])))
