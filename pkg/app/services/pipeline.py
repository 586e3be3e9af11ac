"""
Scenario pipeline orchestrator for Triwell.
Coordinates one run from resolved config to CSV files and metadata.
"""
import logging
import time
from typing import Optional

import numpy as np

from app import __version__
from app.models import (
    MODES,
    SITE_TAGS,
    RunConfig,
    RunMetadata,
    Scenario,
    SystemState,
    TimeSeriesRecord,
)
from app.services.equilibrium import EquilibriumService
from app.services.evolution import QuenchEvolver
from app.services.kernels import bose_einstein
from app.services.memory import memory_check_table
from app.services.plotting import emit_plot_scripts
from app.services.validation import InvariantSuite
from app.storage import ResultStore

logger = logging.getLogger(__name__)

N_INFINITY_PROXY = "n_g(inf) taken as n_g(t_max)"


class ScenarioPipeline:
    """
    Runs one scenario and writes its outputs.

    Flow:
    1. Solve the equilibrium at gbar_before (every scenario but sweep-g)
    2. Run the scenario: sweep, quench, invariant suite or memory check
    3. Write CSVs and plot scripts
    4. Write metadata.json
    On any error every file written so far is removed.
    """

    def __init__(self, cfg: RunConfig, store: Optional[ResultStore] = None, parallel: bool = False):
        self.cfg = cfg
        self.params = cfg.model_params()
        self.store = store or ResultStore(cfg.output_dir)
        self.parallel = parallel
        self.equilibrium_service = EquilibriumService(self.params, cfg.equilibrium_config())
        self.checks_failed: Optional[int] = None

    def run(self) -> RunMetadata:
        started = time.perf_counter()
        handlers = {
            Scenario.INIT_EQ: self.run_init_eq,
            Scenario.SWEEP_G: self.run_sweep,
            Scenario.QUENCH: self.run_quench,
            Scenario.VALIDATE: self.run_validate,
            Scenario.MEMORY_CHECK: self.run_memory_check,
        }
        logger.info(f"Running scenario {self.cfg.scenario.value} into {self.store.output_dir}")

        try:
            extra = handlers[self.cfg.scenario]() or {}
            metadata = RunMetadata(
                version=__version__,
                scenario=self.cfg.scenario,
                gbar_before=self.params.gbar_before,
                gbar_after=self.params.gbar_after,
                wall_time_s=time.perf_counter() - started,
                **extra,
            )
            self.store.write_metadata(metadata)
        except Exception as e:
            logger.error(f"Scenario {self.cfg.scenario.value} failed: {e}")
            self.store.discard()
            raise

        logger.info(f"Scenario {self.cfg.scenario.value} finished in {metadata.wall_time_s:.2f} s")
        return metadata

    def _plots(self, figures: list[str]) -> None:
        for script in emit_plot_scripts(self.store.output_dir, figures):
            self.store.track(script)

    # ========================================================
    # Scenarios
    # ========================================================

    def run_init_eq(self) -> dict:
        eq = self.equilibrium_service.solve(self.params.gbar_before)
        header = ["mode", "mu", "omega", "n"] + [f"abs_u_{x}" for x in SITE_TAGS]
        rows = [
            [mode, eq.mu, float(eq.omega[ell]), float(eq.n0[ell])] + np.abs(eq.frame[:, ell]).tolist()
            for ell, mode in enumerate(MODES)
        ]
        self.store.write_csv("equilibrium.csv", header, rows)
        return {"mu": eq.mu}

    def run_sweep(self) -> dict:
        rows = self.equilibrium_service.sweep(list(self.cfg.gbar_list), parallel=self.parallel)
        header = ["gbar", "abs_u_p1_g", "abs_u_m1_g"] + [f"omega_{m}" for m in MODES] + ["mu", "error"]
        table = [
            [row.gbar, row.abs_u_p1_g, row.abs_u_m1_g, *(row.omega or [None] * 3), row.mu, row.error]
            for row in rows
        ]
        self.store.write_csv("fig1.csv", header, table)
        if any(row.ok for row in rows):
            self._plots(["fig1"])

        failed = [row.gbar for row in rows if not row.ok]
        if failed:
            logger.warning(f"Sweep finished with {len(failed)} failed point(s): {failed}")
        ok = [row for row in rows if row.ok]
        return {"mu": ok[0].mu if ok else None}

    def run_quench(self) -> dict:
        eq = self.equilibrium_service.solve(self.params.gbar_before)
        evolver = QuenchEvolver.from_equilibrium(eq, self.params, self.cfg.evolution_config())
        records = evolver.run(eq)

        self.store.write_csv(
            "timeseries.csv",
            TimeSeriesRecord.csv_header(),
            (record.csv_row() for record in records),
        )
        self.store.write_csv(
            "fig2.csv",
            ["tJ", "abs_v_p1_g", "abs_v_m1_g"],
            ([r.tJ, r.abs_v[0][0], r.abs_v[2][0]] for r in records),
        )
        self.store.write_csv("fig3a.csv", ["tJ", "n_g", "n_o", "n_e"], ([r.tJ, *r.n] for r in records))

        n_g_final = records[-1].n[0]
        self.store.write_csv(
            "fig3b.csv",
            ["tJ", "abs_dn_g"],
            ([r.tJ, abs(r.n[0] - n_g_final)] for r in records[:-1]),
        )
        self._plots(["fig2", "fig3a", "fig3b"])
        return {"mu": eq.mu, "n_g_infinity_proxy": N_INFINITY_PROXY}

    def run_validate(self) -> dict:
        suite = InvariantSuite(self.cfg, parallel=self.parallel)
        results = suite.run()
        self.store.write_text("validate.txt", "".join(result.line() + "\n" for result in results))

        self.checks_failed = sum(not result.passed for result in results)
        if self.checks_failed:
            logger.error(f"{self.checks_failed} of {len(results)} checks failed")
        return {"mu": suite.equilibrium.mu, "checks_failed": self.checks_failed}

    def run_memory_check(self) -> dict:
        eq = self.equilibrium_service.solve(self.params.gbar_before)
        evolver = QuenchEvolver.from_equilibrium(eq, self.params, self.cfg.evolution_config())
        state: SystemState = evolver.initial_state(eq, self.params.gbar_after)
        # Off-equilibrium occupations so dn/dt is not zero
        state = state.model_copy(update={"n": 1.5 * bose_einstein(self.params.beta, state.omega)})

        result = memory_check_table(state, self.params, self.params.gbar_after, self.cfg.memory_config())
        rows_upper = np.triu_indices(3)
        header = ["label", "epsilon"]
        for r, c in zip(*rows_upper):
            header += [f"re_dw_{MODES[r]}{MODES[c]}", f"im_dw_{MODES[r]}{MODES[c]}"]
        header += [f"ndot_{m}" for m in MODES]

        def flatten(row) -> list:
            cells = [row.label, row.epsilon]
            for z in row.delta_omega[rows_upper]:
                cells += [float(z.real), float(z.imag)]
            return cells + [float(v) for v in row.n_dot]

        table = [flatten(row) for row in [*result.rows, result.extrapolated, result.markovian]]
        self.store.write_csv("memory_check.csv", header, table)
        return {
            "mu": eq.mu,
            "memory_delta_omega_rel_error": result.delta_omega_rel_error,
            "memory_n_dot_rel_error": result.n_dot_rel_error,
        }
