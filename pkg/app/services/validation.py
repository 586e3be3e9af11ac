"""
Invariant suite for Triwell.

Runs the named checks behind the `validate` scenario and reports one
CheckResult per check. A check that raises is reported as FAIL with the
error text.
"""
import logging
import math
from typing import Callable, Optional

import numpy as np

from app.models import CheckResult, EquilibriumSolution, EvolutionConfig, RunConfig, SystemState
from app.services.equilibrium import EquilibriumService
from app.services.evolution import QuenchEvolver
from app.services.kernels import (
    bose_einstein,
    build_h0,
    counterterm_markovian,
    delta_omega_to_site_basis,
    odd_mode_defect,
    overlaps,
    transport_coefficients,
)
from app.services.linalg import eig_hermitian, reunitarize, unitarity_defect
from app.services.memory import memory_check_table

logger = logging.getLogger(__name__)

SHORT_HORIZON = 50.0
ORDER_HORIZON = 4.0
ORDER_STEPS = (0.1, 0.05, 0.025)
LONG_RUN = 300.0
RATE_WINDOW = (20.0, 80.0)


class InvariantSuite:
    """
    Property checks over the whole solver stack for one run configuration.

    Flow:
    1. Linear-algebra properties on a seeded random matrix
    2. Equilibrium: fixed point, particle number, parity, sweep band
    3. Evolution: stationarity, quench invariants, ablation, order
    4. Memory check against the Markovian formulas
    """

    def __init__(self, cfg: RunConfig, parallel: bool = False):
        self.cfg = cfg
        self.params = cfg.model_params()
        self.parallel = parallel
        self.service = EquilibriumService(self.params, cfg.equilibrium_config())
        self._eq: Optional[EquilibriumSolution] = None
        self._quench: Optional[list[SystemState]] = None

    # ========================================================
    # Shared runs
    # ========================================================

    @property
    def equilibrium(self) -> EquilibriumSolution:
        if self._eq is None:
            self._eq = self.service.solve(self.params.gbar_before)
        return self._eq

    def _evolve(
        self,
        gbar: float,
        t_max: float,
        dt: Optional[float] = None,
        offdiagonal: bool = True,
    ) -> list[SystemState]:
        params = self.params.model_copy(update={"offdiagonal_counterterm": offdiagonal})
        eq = self.equilibrium if offdiagonal else EquilibriumService(
            params, self.cfg.equilibrium_config()
        ).solve(self.params.gbar_before)
        config = self.cfg.evolution_config().model_copy(
            update={"t_max": t_max, "dt": dt or self.cfg.dt}
        )
        states: list[SystemState] = []
        QuenchEvolver.from_equilibrium(eq, params, config).run(eq, gbar=gbar, observer=states.append)
        return states

    @property
    def quench(self) -> list[SystemState]:
        if self._quench is None:
            self._quench = self._evolve(self.params.gbar_after, self.cfg.t_max)
        return self._quench

    # ========================================================
    # Linear algebra
    # ========================================================

    def check_eigensystem(self) -> CheckResult:
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        matrix = 0.5 * (a + a.conj().T)
        omega, frame = eig_hermitian(matrix)
        residual = float(np.max(np.abs(matrix @ frame - frame * omega))) / float(np.max(np.abs(matrix)))
        defect = unitarity_defect(frame)
        passed = residual <= 1e-12 and defect <= 1e-12 and bool(np.all(np.diff(omega) >= 0))
        return CheckResult(name="eigensystem", passed=passed, detail=f"residual {residual:.2e}, unitarity {defect:.2e}")

    def check_reunitarize(self) -> CheckResult:
        _, frame = eig_hermitian(build_h0(self.params, self.equilibrium.mu))
        untouched = np.array_equal(reunitarize(frame), frame)
        rng = np.random.default_rng(1)
        perturbed = frame + 1e-8 * rng.normal(size=(3, 3))
        defect = unitarity_defect(reunitarize(perturbed))
        passed = untouched and defect <= 1e-13
        return CheckResult(name="reunitarize", passed=passed, detail=f"idempotent {untouched}, defect {defect:.2e}")

    # ========================================================
    # Equilibrium
    # ========================================================

    def check_fixed_point(self) -> CheckResult:
        eq = self.equilibrium
        dx = delta_omega_to_site_basis(eq.delta_omega_ell, eq.frame)
        omega, frame = eig_hermitian(build_h0(self.params, eq.mu) + dx)
        delta_omega = counterterm_markovian(overlaps(frame), omega, self.params, eq.gbar)
        defect = max(
            float(np.max(np.abs(omega - eq.omega))),
            float(np.max(np.abs(frame - eq.frame))),
            float(np.max(np.abs(delta_omega - eq.delta_omega_ell))),
        )
        return CheckResult(name="equilibrium fixed point", passed=defect <= 1e-9, detail=f"defect {defect:.2e}")

    def check_particle_number(self) -> CheckResult:
        eq = self.equilibrium
        defect = abs(float(np.sum(eq.n0)) - self.params.n_total)
        detail = f"mu = {eq.mu:.12g}, |sum n - N_total| = {defect:.2e}"
        return CheckResult(name="particle number", passed=defect <= 1e-8, detail=detail)

    def check_parity(self) -> CheckResult:
        defect = odd_mode_defect(self.equilibrium.frame)
        return CheckResult(name="equilibrium odd mode", passed=defect <= 1e-10, detail=f"defect {defect:.2e}")

    def check_sweep(self) -> CheckResult:
        rows = self.service.sweep(list(self.cfg.gbar_list), parallel=self.parallel)
        failed = [row.gbar for row in rows if not row.ok]
        if failed:
            return CheckResult(name="sweep band", passed=False, detail=f"failed points {failed}")
        values = np.array([row.abs_u_p1_g for row in rows])
        order = np.argsort([row.gbar for row in rows])
        monotone = bool(np.all(np.diff(values[order]) <= 1e-12))
        in_band = bool(np.all((values >= 0.4994) & (values <= 0.5 + 1e-12)))
        detail = f"|u_1g| in [{values.min():.6f}, {values.max():.6f}], non-increasing {monotone}"

        # Small-coupling departure from 1/2 grows like gbar^2
        quadratic = True
        departure = {row.gbar: 0.5 - row.abs_u_p1_g for row in rows}
        if 0.05 in departure and 0.1 in departure and departure[0.05] > 0:
            ratio = departure[0.1] / departure[0.05]
            quadratic = 3.6 <= ratio <= 4.4
            detail += f", onset ratio {ratio:.3f}"
        return CheckResult(name="sweep band", passed=monotone and in_band and quadratic, detail=detail)

    # ========================================================
    # Evolution
    # ========================================================

    def check_stationarity(self) -> CheckResult:
        gbar = self.params.gbar_before
        states = self._evolve(gbar, min(self.cfg.t_max, SHORT_HORIZON))
        first = states[0]
        drift = max(
            max(
                float(np.max(np.abs(np.abs(s.frame) - np.abs(first.frame)))),
                float(np.max(np.abs(s.n - first.n))),
                float(np.max(np.abs(s.omega - first.omega))),
            )
            for s in states
        )
        return CheckResult(name="stationarity", passed=drift <= 1e-8, detail=f"max drift {drift:.2e}")

    def check_quench_frame(self) -> CheckResult:
        states = self.quench
        unitarity = max(unitarity_defect(s.frame) for s in states)
        odd = max(odd_mode_defect(s.frame) for s in states)
        ground = np.array([[abs(s.frame[0, 0]), abs(s.frame[2, 0])] for s in states])
        in_band = bool(np.all((ground >= 0.498) & (ground <= 0.502)))
        passed = unitarity <= 1e-10 and odd <= 1e-10 and in_band
        detail = (
            f"unitarity {unitarity:.2e}, odd mode {odd:.2e}, "
            f"|v_+-1g| in [{ground.min():.6f}, {ground.max():.6f}]"
        )
        return CheckResult(name="quench frame", passed=passed, detail=detail)

    def check_odd_occupation(self) -> CheckResult:
        states = self.quench
        drift = max(abs(s.n[1] - states[0].n[1]) for s in states)
        return CheckResult(name="odd occupation constant", passed=drift <= 1e-12, detail=f"drift {drift:.2e}")

    def check_transport_fixed_point(self) -> CheckResult:
        states = self.quench
        first, last = states[0], states[-1]
        gap0 = first.n - bose_einstein(self.params.beta, first.omega)
        gap1 = last.n - bose_einstein(self.params.beta, last.omega)
        shrinking = bool(abs(gap1[0]) < abs(gap0[0]) and abs(gap1[2]) <= abs(gap0[2]))
        passed = shrinking and (last.t < LONG_RUN or abs(gap1[0]) <= 1e-5)
        detail = f"n_g gap {abs(gap0[0]):.2e} -> {abs(gap1[0]):.2e}, n_e gap {abs(gap0[2]):.2e} -> {abs(gap1[2]):.2e}"
        return CheckResult(name="transport fixed point", passed=passed, detail=detail)

    def check_relaxation_rate(self) -> CheckResult:
        states = self.quench
        last = states[-1]
        if last.t < LONG_RUN:
            return CheckResult(name="relaxation rate", passed=True, detail=f"skipped, run ends at tJ = {last.t:g}")
        t = np.array([s.t for s in states])
        gap = np.array([abs(s.n[0] - last.n[0]) for s in states])
        window = (t >= RATE_WINDOW[0]) & (t <= RATE_WINDOW[1])
        slope = float(np.polyfit(t[window], np.log(gap[window]), 1)[0])
        rate, _ = transport_coefficients(overlaps(last.frame), last.omega, self.params, self.params.gbar_after)
        expected = -float(rate[0])
        passed = abs(slope - expected) <= 0.1 * abs(expected)
        return CheckResult(name="relaxation rate", passed=passed, detail=f"slope {slope:.5f}, expected {expected:.5f}")

    def check_ablation(self) -> CheckResult:
        horizon = min(self.cfg.t_max, SHORT_HORIZON)
        ablated = self._evolve(self.params.gbar_after, horizon, offdiagonal=False)
        frozen = max(float(np.max(np.abs(np.abs(s.frame) - np.abs(ablated[0].frame)))) for s in ablated)
        full = self.quench
        moved = max(abs(abs(s.frame[0, 0]) - abs(full[0].frame[0, 0])) for s in full)
        passed = frozen <= 1e-10 and moved > 1e-4
        return CheckResult(name="ablation", passed=passed, detail=f"diagonal-only drift {frozen:.2e}, full drift {moved:.2e}")

    def check_order(self) -> CheckResult:
        finals = [
            np.abs(self._evolve(self.params.gbar_after, ORDER_HORIZON, dt=dt)[-1].frame)
            for dt in ORDER_STEPS
        ]
        coarse = float(np.max(np.abs(finals[0] - finals[1])))
        fine = float(np.max(np.abs(finals[1] - finals[2])))
        order = math.log2(coarse / fine) if fine > 0 else math.inf
        return CheckResult(name="step-halving order", passed=order >= 1.9, detail=f"measured order {order:.3f}")

    # ========================================================
    # Memory
    # ========================================================

    def check_memory(self) -> CheckResult:
        state = self.quench[0]
        # Off-equilibrium occupations so dn/dt is not zero
        state = state.model_copy(update={"n": 1.5 * bose_einstein(self.params.beta, state.omega)})
        result = memory_check_table(state, self.params, self.params.gbar_after, self.cfg.memory_config())
        passed = result.delta_omega_rel_error <= 0.02 and result.n_dot_rel_error <= 0.02
        detail = f"counter term {result.delta_omega_rel_error:.2e}, transport {result.n_dot_rel_error:.2e}"
        return CheckResult(name="memory check", passed=passed, detail=detail)

    # ========================================================
    # Runner
    # ========================================================

    def checks(self) -> list[Callable[[], CheckResult]]:
        return [
            self.check_eigensystem,
            self.check_reunitarize,
            self.check_fixed_point,
            self.check_particle_number,
            self.check_parity,
            self.check_sweep,
            self.check_stationarity,
            self.check_quench_frame,
            self.check_odd_occupation,
            self.check_transport_fixed_point,
            self.check_relaxation_rate,
            self.check_ablation,
            self.check_memory,
            self.check_order,
        ]

    def run(self) -> list[CheckResult]:
        results = []
        for check in self.checks():
            name = check.__name__.removeprefix("check_").replace("_", " ")
            try:
                result = check()
            except Exception as e:
                logger.error(f"Check {name} raised: {e}")
                result = CheckResult(name=name, passed=False, detail=f"{type(e).__name__}: {e}")
            logger.info(result.line())
            results.append(result)
        return results
