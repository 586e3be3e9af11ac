"""
Quench evolution service for Triwell.

Integrates the coupled frame / counter-term / occupation system after a
sudden change of the coupling at t = 0.

    i dV/dt   = h_u V - V diag(omega),   h_u = h0 + V d V^H
    omega_l   = Re (V^H h_u V)_{ll}
    dn_l/dt   = -rate_l (n_l - N(omega_l))
"""
import logging
from typing import Callable, Optional

import numpy as np

from app.errors import ConvergenceError, DomainError
from app.models import (
    EquilibriumSolution,
    EvolutionConfig,
    ModelParams,
    Overlaps,
    SystemState,
    TimeSeriesRecord,
)
from app.services.kernels import (
    build_h0,
    counterterm_markovian,
    delta_omega_to_site_basis,
    overlaps,
    transport_coefficients,
)
from app.services.linalg import propagate_unitary, reunitarize

logger = logging.getLogger(__name__)

# Called with every recorded state
Observer = Callable[[SystemState], None]

INITIAL_CLOSURE_TOL = 1e-14
INITIAL_CLOSURE_MAX_ITER = 100


class QuenchEvolver:
    """
    Self-consistent exponential-midpoint stepper.

    Flow (per step):
    1. Midpoint generator from the averaged site counter term and energies
    2. Propagate the frame with one shared unitary and per-column phases
    3. Close omega and d at t + dt, repeat until the change is below sc_tol
    4. Advance n by the implicit midpoint rule (closed form, linear in n)
    5. Reunitarize
    """

    def __init__(self, params: ModelParams, config: Optional[EvolutionConfig] = None):
        self.params = params
        self.config = config or EvolutionConfig()
        self.h0 = build_h0(params)

    @classmethod
    def from_equilibrium(
        cls,
        eq: EquilibriumSolution,
        params: ModelParams,
        config: Optional[EvolutionConfig] = None,
    ) -> "QuenchEvolver":
        """Evolver whose h0 carries the chemical potential resolved by `eq`."""
        return cls(params.model_copy(update={"mu": eq.mu}), config)

    def _close(self, frame: np.ndarray, delta_omega: np.ndarray, gbar: float) -> tuple[np.ndarray, np.ndarray, float]:
        """One energy / counter-term update on a fixed frame; returns (omega, d, |d change|)."""
        diag_h0 = np.real(np.einsum("xl,xy,yl->l", frame.conj(), self.h0, frame))
        omega = diag_h0 + np.real(np.diag(delta_omega))
        updated = counterterm_markovian(overlaps(frame), omega, self.params, gbar)
        omega = diag_h0 + np.real(np.diag(updated))
        return omega, updated, float(np.max(np.abs(updated - delta_omega)))

    def initial_state(self, eq: EquilibriumSolution, gbar: float) -> SystemState:
        """t = 0 state: equilibrium frame and occupations, omega and d closed for `gbar`."""
        delta_omega = eq.delta_omega_ell
        for _ in range(INITIAL_CLOSURE_MAX_ITER):
            omega, delta_omega, change = self._close(eq.frame, delta_omega, gbar)
            if change <= INITIAL_CLOSURE_TOL:
                break
        else:
            raise ConvergenceError("initial energy closure", change, t=0.0)

        return SystemState(t=0.0, frame=eq.frame, n=eq.n0, omega=omega, delta_omega_ell=delta_omega)

    def step(self, state: SystemState, gbar: float) -> SystemState:
        try:
            return self._step(state, gbar)
        except DomainError as e:
            if e.t is not None:
                raise
            raise DomainError(str(e), t=state.t) from e

    def _step(self, state: SystemState, gbar: float) -> SystemState:
        dt = self.config.dt
        frame0, omega0, delta0 = state.frame, state.omega, state.delta_omega_ell
        dx0 = delta_omega_to_site_basis(delta0, frame0)

        frame1, omega1, delta1, dx1 = frame0, omega0, delta0, dx0
        residual = np.inf
        for iteration in range(1, self.config.sc_max_iter + 1):
            generator = self.h0 + 0.5 * (dx0 + dx1)
            phases = np.exp(1j * dt * 0.5 * (omega0 + omega1))
            frame1 = (propagate_unitary(generator, 0.0, dt) @ frame0) * phases

            omega_new, delta1, _ = self._close(frame1, delta1, gbar)
            dx_new = delta_omega_to_site_basis(delta1, frame1)

            residual = max(float(np.max(np.abs(dx_new - dx1))), float(np.max(np.abs(omega_new - omega1))))
            omega1, dx1 = omega_new, dx_new
            if residual < self.config.sc_tol:
                break
        else:
            raise ConvergenceError("step self-consistency", residual, t=state.t)

        # dn/dt is linear in n, so the implicit midpoint update has a closed form
        ov_mid = Overlaps(values=0.5 * (overlaps(frame0).values + overlaps(frame1).values))
        rate, target = transport_coefficients(ov_mid, 0.5 * (omega0 + omega1), self.params, gbar)
        half = 0.5 * dt * rate
        n1 = (state.n * (1.0 - half) + dt * rate * target) / (1.0 + half)
        if np.any(n1 < 0):
            raise DomainError(f"occupation went negative: {n1}", t=state.t)

        return SystemState(
            t=state.t + dt,
            frame=reunitarize(frame1),
            n=n1,
            omega=omega1,
            delta_omega_ell=delta1,
            sc_iters=iteration,
        )

    def run(
        self,
        eq: EquilibriumSolution,
        gbar: Optional[float] = None,
        observer: Optional[Observer] = None,
    ) -> list[TimeSeriesRecord]:
        """
        Evolve from the equilibrium `eq` with the post-quench coupling.

        Records are emitted at t = 0, every output_stride steps, and at the
        final step.
        """
        gbar = self.params.gbar_after if gbar is None else gbar
        n_steps = self.config.n_steps
        stride = self.config.output_stride
        progress_every = max(n_steps // 10, 1)

        logger.info(f"Quench gbar {eq.gbar:g} -> {gbar:g}: {n_steps} steps of dt = {self.config.dt:g}")
        state = self.initial_state(eq, gbar)
        records = [TimeSeriesRecord.from_state(state)]
        if observer:
            observer(state)

        for k in range(1, n_steps + 1):
            state = self.step(state, gbar)
            # Pin the clock to k*dt so long runs do not accumulate rounding
            state = state.model_copy(update={"t": k * self.config.dt})

            if k % stride == 0 or k == n_steps:
                records.append(TimeSeriesRecord.from_state(state))
                if observer:
                    observer(state)
            if k % progress_every == 0:
                logger.info(f"tJ = {state.t:.2f} ({100 * k // n_steps}%), n_g = {state.n[0]:.8f}")

        return records


def step(state: SystemState, params: ModelParams, gbar: float, config: EvolutionConfig) -> SystemState:
    return QuenchEvolver(params, config).step(state, gbar)


def run_quench(
    eq: EquilibriumSolution,
    params: ModelParams,
    config: EvolutionConfig,
    observer: Optional[Observer] = None,
) -> list[TimeSeriesRecord]:
    return QuenchEvolver.from_equilibrium(eq, params, config).run(eq, observer=observer)
