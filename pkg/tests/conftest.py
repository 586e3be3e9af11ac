"""
Shared fixtures: the reference quench (sum n = 10, beta = 1/J, Delta = 10 J,
gbar 0.2 J -> 0.1 J) and its equilibrium.
"""
import numpy as np
import pytest

from app.models import EvolutionConfig, ModelParams, SystemState
from app.services.equilibrium import solve_equilibrium
from app.services.evolution import QuenchEvolver


@pytest.fixture(scope="session")
def params() -> ModelParams:
    return ModelParams(delta=10.0, beta=1.0, gbar_before=0.2, gbar_after=0.1, n_total=10.0)


@pytest.fixture(scope="session")
def eq_before(params):
    return solve_equilibrium(params, params.gbar_before)


@pytest.fixture(scope="session")
def quench_state(params, eq_before) -> SystemState:
    """t = 0 state right after the coupling drops to gbar_after."""
    evolver = QuenchEvolver.from_equilibrium(eq_before, params)
    return evolver.initial_state(eq_before, params.gbar_after)


@pytest.fixture(scope="session")
def long_quench(params, eq_before) -> list[SystemState]:
    """Recorded states of the full tJ = 300 quench, one per tJ = 1."""
    config = EvolutionConfig(dt=0.01, t_max=300.0, output_stride=100)
    states: list[SystemState] = []
    QuenchEvolver.from_equilibrium(eq_before, params, config).run(eq_before, observer=states.append)
    return states


def random_hermitian(seed: int, size: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    return 0.5 * (a + a.conj().T)
