"""
Equilibrium initialization service for Triwell.

Solves the t < 0 state: chemical potential from the particle-number
constraint, counter-term fixed point, eigenframe, energies and occupations.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from app.errors import ConvergenceError, DomainError, InitializationError, TriwellError
from app.models import EquilibriumConfig, EquilibriumSolution, ModelParams, SweepRow
from app.services.kernels import (
    bose_einstein,
    build_h0,
    counterterm_markovian,
    delta_omega_to_site_basis,
    overlaps,
)
from app.services.linalg import eig_hermitian

logger = logging.getLogger(__name__)

MIN_GAP = 1e-10
MU_XTOL = 1e-14
NUMBER_TOL = 1e-8
BRACKET_WIDTH = 0.05
MAX_BRACKET_STEPS = 60


def bare_energies(mu: float) -> np.ndarray:
    """Eigenvalues of h0 without coupling: -mu - sqrt2 J, -mu, -mu + sqrt2 J."""
    return np.array([-mu - math.sqrt(2.0), -mu, -mu + math.sqrt(2.0)])


def bare_chemical_potential(params: ModelParams) -> float:
    """mu solving sum_l N(omega_l(mu)) = N_total for the uncoupled triple well."""
    guard = params.band_guard
    lo = math.sqrt(2.0) - params.delta + guard
    hi = -math.sqrt(2.0) - guard
    if not lo < hi:
        raise InitializationError(f"band Delta = {params.delta:g} too narrow for the triple-well spectrum")

    def excess(mu: float) -> float:
        return float(np.sum(bose_einstein(params.beta, bare_energies(mu)))) - params.n_total

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo > 0 or f_hi < 0:
        raise InitializationError(
            f"N_total = {params.n_total:g} not reachable with all energies inside (0, {params.delta:g})"
        )
    return float(brentq(excess, lo, hi, xtol=MU_XTOL))


class EquilibriumService:
    """
    Self-consistent equilibrium for the coupled triple well.

    Flow:
    1. Analytic mu at gbar = 0 as the starting point
    2. Inner damped fixed point on the site-basis counter term at fixed mu
    3. Outer brentq on mu until sum_l N(omega_l) = N_total
    4. Final band / number / eigen-equation checks
    """

    def __init__(self, params: ModelParams, config: Optional[EquilibriumConfig] = None):
        self.params = params
        self.config = config or EquilibriumConfig()

    # ========================================================
    # Inner fixed point
    # ========================================================

    def _fixed_point(
        self,
        mu: float,
        gbar: float,
        dx: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float, int]:
        """Iterate dx -> V d(I(V), omega) V^H with eig(h0 + dx) = (omega, V)."""
        h0 = build_h0(self.params, mu)
        damping = self.config.damping

        for iteration in range(1, self.config.max_iter + 1):
            omega, frame = eig_hermitian(h0 + dx, min_gap=MIN_GAP)
            delta_omega = counterterm_markovian(overlaps(frame), omega, self.params, gbar)
            dx_new = delta_omega_to_site_basis(delta_omega, frame)

            residual = float(np.max(np.abs(dx_new - dx)))
            dx = dx + damping * (dx_new - dx)
            if residual <= self.config.tol:
                break
        else:
            raise ConvergenceError(f"counter-term fixed point at mu = {mu:.12g}", residual)

        omega, frame = eig_hermitian(h0 + dx, min_gap=MIN_GAP)
        delta_omega = counterterm_markovian(overlaps(frame), omega, self.params, gbar)
        residual = float(np.max(np.abs(delta_omega_to_site_basis(delta_omega, frame) - dx)))
        return omega, frame, delta_omega, dx, residual, iteration

    # ========================================================
    # Chemical potential
    # ========================================================

    def _bracket(self, excess: Callable[[float], float], mu0: float, f0: float) -> tuple[float, float]:
        """Walk away from mu0 until `excess` changes sign, halving on band exits."""
        direction = 1.0 if f0 < 0 else -1.0
        inner, step = mu0, BRACKET_WIDTH

        for _ in range(MAX_BRACKET_STEPS):
            trial = inner + direction * step
            try:
                value = excess(trial)
            except DomainError:
                step *= 0.5
                continue
            if value * direction > 0:
                return min(inner, trial), max(inner, trial)
            inner = trial
            step *= 2.0

        raise InitializationError(f"no chemical potential brackets N_total = {self.params.n_total:g}")

    def solve(self, gbar: float, warm_start: Optional[np.ndarray] = None) -> EquilibriumSolution:
        """Equilibrium at coupling `gbar`, optionally warm-started from a site-basis counter term."""
        params = self.params
        state = {"dx": np.zeros((3, 3), dtype=np.complex128) if warm_start is None else warm_start.copy()}

        def excess(mu: float) -> float:
            omega, _, _, dx, _, _ = self._fixed_point(mu, gbar, state["dx"])
            state["dx"] = dx
            return float(np.sum(bose_einstein(params.beta, omega))) - params.n_total

        mu0 = bare_chemical_potential(params)
        try:
            f0 = excess(mu0)
        except DomainError as e:
            raise InitializationError(f"no in-band equilibrium near mu = {mu0:.6g}: {e}") from e

        if f0 == 0.0:
            mu = mu0
        else:
            lo, hi = self._bracket(excess, mu0, f0)
            mu = float(brentq(excess, lo, hi, xtol=MU_XTOL))

        omega, frame, delta_omega, _, residual, iterations = self._fixed_point(mu, gbar, state["dx"])
        n0 = np.asarray(bose_einstein(params.beta, omega))

        number_defect = abs(float(np.sum(n0)) - params.n_total)
        if number_defect > NUMBER_TOL:
            raise ConvergenceError("particle-number constraint", number_defect)

        logger.debug(f"gbar = {gbar:g}: mu = {mu:.12g}, {iterations} inner iterations, residual {residual:.2e}")
        return EquilibriumSolution(
            gbar=gbar,
            mu=mu,
            omega=omega,
            frame=frame,
            n0=n0,
            delta_omega_ell=delta_omega,
            residual=residual,
            iterations=iterations,
        )

    # ========================================================
    # Sweep
    # ========================================================

    @staticmethod
    def _row(gbar: float, solution: Optional[EquilibriumSolution], error: Optional[str] = None) -> SweepRow:
        if solution is None:
            return SweepRow(gbar=gbar, error=error)
        abs_p1, abs_m1 = solution.abs_u_ground
        return SweepRow(
            gbar=gbar,
            abs_u_p1_g=abs_p1,
            abs_u_m1_g=abs_m1,
            omega=solution.omega.tolist(),
            mu=solution.mu,
        )

    def sweep(self, gbar_list: list[float], parallel: bool = False) -> list[SweepRow]:
        """
        Solve every coupling in `gbar_list`, in order.

        Sequential sweeps warm-start each point from the previous solution.
        Parallel sweeps cold-start every point, so results can differ from a
        sequential sweep at the fixed-point tolerance. Failed points are
        returned with `error` set.
        """
        if parallel:
            def solve_point(gbar: float) -> SweepRow:
                try:
                    return self._row(gbar, self.solve(gbar))
                except TriwellError as e:
                    logger.warning(f"Sweep point gbar = {gbar:g} failed: {e}")
                    return self._row(gbar, None, str(e))

            with ThreadPoolExecutor() as pool:
                return list(pool.map(solve_point, gbar_list))

        rows = []
        warm_start = None
        for gbar in gbar_list:
            try:
                solution = self.solve(gbar, warm_start=warm_start)
            except TriwellError as e:
                logger.warning(f"Sweep point gbar = {gbar:g} failed: {e}")
                rows.append(self._row(gbar, None, str(e)))
                continue
            warm_start = delta_omega_to_site_basis(solution.delta_omega_ell, solution.frame)
            rows.append(self._row(gbar, solution))
            logger.info(f"Sweep point gbar = {gbar:g}: |u_1g| = {rows[-1].abs_u_p1_g:.10f}, mu = {solution.mu:.10f}")
        return rows


def solve_equilibrium(
    params: ModelParams,
    gbar: float,
    config: Optional[EquilibriumConfig] = None,
) -> EquilibriumSolution:
    return EquilibriumService(params, config).solve(gbar)


def sweep_gbar(
    params: ModelParams,
    gbar_list: list[float],
    config: Optional[EquilibriumConfig] = None,
    parallel: bool = False,
) -> list[SweepRow]:
    return EquilibriumService(params, config).sweep(gbar_list, parallel=parallel)
