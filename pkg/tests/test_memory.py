import numpy as np
import pytest

from app.errors import AccuracyError, ContractViolationError
from app.models import MemoryCheckConfig
from app.services.kernels import bose_einstein
from app.services.memory import (
    frozen_history_memory_check,
    memory_check_table,
    richardson_zero,
    time_kernel,
)


@pytest.fixture(scope="module")
def driven_state(params, quench_state):
    """Quench state with occupations pushed 50% above Bose-Einstein."""
    return quench_state.model_copy(update={"n": 1.5 * bose_einstein(params.beta, quench_state.omega)})


@pytest.fixture(scope="module")
def table(params, driven_state):
    return memory_check_table(driven_state, params, params.gbar_after)


class TestRichardson:

    def test_exact_for_quadratics(self):
        eps = [0.01, 0.005, 0.0025]
        values = [np.array([1 + 2 * e + 3 * e**2, -4 * e]) for e in eps]
        assert richardson_zero(eps, values) == pytest.approx([1.0, 0.0], abs=1e-12)

    def test_single_value(self):
        assert richardson_zero([0.1], [np.array(2.0)]) == pytest.approx(2.0)

    def test_mismatched_lengths(self):
        with pytest.raises(ContractViolationError):
            richardson_zero([0.1, 0.2], [np.array(1.0)])


class TestTimeKernel:

    def test_approaches_laplace_transform(self):
        k = np.linspace(0.0, 3.0, 7)
        omega, epsilon = 1.0, 0.05
        exact = 1.0 / (epsilon + 1j * (k**2 - omega))
        assert time_kernel(k, omega, epsilon, 0.005, 50.0 / epsilon) == pytest.approx(exact, rel=1e-3)


class TestFrozenHistory:

    def test_rejects_non_positive_epsilon(self, params, driven_state):
        with pytest.raises(ContractViolationError):
            frozen_history_memory_check(driven_state, params, params.gbar_after, 0.0)

    def test_small_budget_is_reported(self, params, driven_state):
        with pytest.raises(AccuracyError) as info:
            frozen_history_memory_check(
                driven_state, params, params.gbar_after, 0.0025, MemoryCheckConfig(k_points=64)
            )
        assert info.value.estimate > 1e-3

    def test_hermitian_at_finite_epsilon(self, params, driven_state):
        delta_omega, _ = frozen_history_memory_check(driven_state, params, params.gbar_after, 0.01)
        assert np.allclose(delta_omega, delta_omega.conj().T, atol=1e-14)

    def test_odd_mode_entries_vanish(self, table):
        for row in [*table.rows, table.extrapolated]:
            assert np.max(np.abs(row.delta_omega[1, :])) <= 1e-12
            assert abs(row.n_dot[1]) <= 1e-12


class TestMarkovianLimit:

    def test_counterterm_matches(self, table):
        assert table.delta_omega_rel_error <= 0.02
        for i in (0, 2):
            for j in (0, 2):
                assert table.extrapolated.delta_omega[i, j] == pytest.approx(
                    table.markovian.delta_omega[i, j], rel=0.02
                )

    def test_transport_matches(self, table):
        assert table.n_dot_rel_error <= 0.02
        assert table.extrapolated.n_dot[0] == pytest.approx(table.markovian.n_dot[0], rel=0.02)
        assert table.extrapolated.n_dot[2] == pytest.approx(table.markovian.n_dot[2], rel=0.02)

    def test_extrapolation_improves_on_smallest_epsilon(self, table):
        reference = table.markovian.delta_omega[0, 2]
        raw = abs(table.rows[-1].delta_omega[0, 2] - reference)
        assert abs(table.extrapolated.delta_omega[0, 2] - reference) < raw

    def test_thermal_occupations_give_no_flow(self, params, quench_state, table):
        thermal = quench_state.model_copy(update={"n": bose_einstein(params.beta, quench_state.omega)})
        result = memory_check_table(thermal, params, params.gbar_after)
        driven = np.abs(table.markovian.n_dot)
        assert abs(result.extrapolated.n_dot[0]) <= 0.02 * driven[0]
        assert abs(result.extrapolated.n_dot[2]) <= 0.02 * driven[2]
