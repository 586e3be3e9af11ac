import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from app.errors import DomainError
from app.models import ModelParams, Overlaps
from app.services.kernels import (
    bose_einstein,
    build_h0,
    counterterm_markovian,
    delta_omega_to_mode_basis,
    delta_omega_to_site_basis,
    kernel_c,
    kernel_cbar,
    odd_mode_defect,
    overlaps,
    reflection,
    transport_rhs,
)
from app.services.linalg import eig_hermitian
from tests.conftest import random_hermitian

IN_BAND = st.floats(0.01, 9.9)


@pytest.fixture
def h0_frame(params):
    omega, frame = eig_hermitian(build_h0(params, mu=-1.5))
    return omega, frame


class TestBareHamiltonian:

    def test_entries(self, params):
        h0 = build_h0(params, mu=-1.5)
        assert np.allclose(np.diag(h0), 1.5)
        assert h0[0, 1] == h0[1, 2] == -1.0
        assert h0[0, 2] == 0.0

    def test_reflection_symmetric(self, params):
        h0 = build_h0(params, mu=0.3)
        p = reflection()
        assert np.array_equal(p @ h0 @ p, h0)

    def test_needs_chemical_potential(self, params):
        with pytest.raises(DomainError):
            build_h0(params)

    def test_analytic_spectrum(self, params, h0_frame):
        omega, frame = h0_frame
        assert omega == pytest.approx([1.5 - math.sqrt(2), 1.5, 1.5 + math.sqrt(2)])
        assert np.allclose(np.abs(frame[:, 0]), [0.5, 1 / math.sqrt(2), 0.5])
        assert odd_mode_defect(frame) <= 1e-14

    def test_overlaps(self, h0_frame):
        _, frame = h0_frame
        ov = overlaps(frame)
        assert abs(ov.g) == pytest.approx(1 + 1 / math.sqrt(2))
        assert abs(ov.o) <= 1e-14
        assert abs(ov.e) == pytest.approx(1 - 1 / math.sqrt(2))


class TestReservoirKernels:

    def test_bose_einstein(self):
        assert bose_einstein(1.0, 1.0) == pytest.approx(1 / (math.e - 1))
        assert bose_einstein(2.0, np.array([0.5, 1.0])) == pytest.approx(1 / np.expm1([1.0, 2.0]))

    @pytest.mark.parametrize("omega", [0.0, -1.0])
    def test_bose_einstein_domain(self, omega):
        with pytest.raises(DomainError):
            bose_einstein(1.0, omega)

    def test_kernel_values(self):
        assert kernel_c(1.0, 10.0) == pytest.approx(1 / (2 * math.sqrt(10)))
        assert kernel_cbar(1.0, 10.0) == pytest.approx(-0.10355, rel=1e-3)

    @pytest.mark.parametrize("omega", [0.0, 1e-7, 10.0 - 1e-7, 10.0, 12.0])
    def test_band_guard(self, omega):
        with pytest.raises(DomainError):
            kernel_c(omega, 10.0)
        with pytest.raises(DomainError):
            kernel_cbar(omega, 10.0)

    @given(IN_BAND)
    def test_kernel_signs_in_band(self, omega):
        # log((sqrt D - sqrt w)/(sqrt D + sqrt w)) < 0 for every in-band w
        assert kernel_cbar(omega, 10.0) < 0
        assert kernel_c(omega, 10.0) > 0


class TestCounterterm:

    @pytest.fixture
    def state(self, h0_frame):
        omega, frame = h0_frame
        return overlaps(frame), omega

    def test_exactly_hermitian(self, params, state):
        ov, omega = state
        d = counterterm_markovian(ov, omega, params, 0.2)
        assert np.array_equal(d, d.conj().T)
        assert np.all(np.diag(d).imag == 0)

    def test_zero_coupling(self, params, state):
        ov, omega = state
        assert np.array_equal(counterterm_markovian(ov, omega, params, 0.0), np.zeros((3, 3)))

    def test_odd_mode_decouples(self, params, state):
        ov, omega = state
        d = counterterm_markovian(ov, omega, params, 0.2)
        assert np.max(np.abs(d[1, :])) <= 1e-14
        assert np.max(np.abs(d[:, 1])) <= 1e-14

    def test_entry_formula(self, params, state):
        ov, omega = state
        gbar = 0.3
        d = counterterm_markovian(ov, omega, params, gbar)
        cg, ce = kernel_c(omega[0], 10.0), kernel_c(omega[2], 10.0)
        cbg, cbe = kernel_cbar(omega[0], 10.0), kernel_cbar(omega[2], 10.0)
        expected = -(gbar**2 / 2) * np.conj(ov.g) * ov.e * (cbg + cbe + 1j * math.pi * cg - 1j * math.pi * ce)
        assert d[0, 2] == pytest.approx(expected, rel=1e-14)
        assert d[0, 0] == pytest.approx(-(gbar**2) * abs(ov.g) ** 2 * cbg, rel=1e-14)

    def test_rank_one_structure(self, params):
        values = np.array([1.2 + 0.3j, 0.0, -0.4 + 0.1j])
        omega = np.array([0.5, 1.5, 2.5])
        d = counterterm_markovian(Overlaps(values=values), omega, params, 0.2)
        assert d[0, 0].real > 0 and d[2, 2].real > 0

        c = kernel_c(omega, params.delta)
        cbar = kernel_cbar(omega, params.delta)
        for i in range(3):
            for j in range(3):
                pair = cbar[i] + cbar[j] + 1j * math.pi * (c[i] - c[j])
                expected = -0.5 * 0.2**2 * np.conj(values[i]) * values[j] * pair
                assert d[i, j] == pytest.approx(expected, rel=1e-12, abs=1e-15)

    def test_diagonal_only_variant(self, state):
        ov, omega = state
        ablated = ModelParams(
            delta=10.0, beta=1.0, gbar_before=0.2, gbar_after=0.1, n_total=10.0, offdiagonal_counterterm=False
        )
        d = counterterm_markovian(ov, omega, ablated, 0.2)
        assert np.array_equal(d, np.diag(np.diag(d)))
        assert d[0, 0] != 0

    def test_out_of_band(self, params, state):
        ov, _ = state
        with pytest.raises(DomainError):
            counterterm_markovian(ov, np.array([-0.1, 1.0, 2.0]), params, 0.2)

    def test_basis_change_round_trip(self, h0_frame):
        _, frame = h0_frame
        d = random_hermitian(11)
        back = delta_omega_to_mode_basis(delta_omega_to_site_basis(d, frame), frame)
        assert np.allclose(back, d, atol=1e-14)


class TestTransport:

    @pytest.fixture
    def state(self, h0_frame):
        omega, frame = h0_frame
        return overlaps(frame), omega

    def test_thermal_fixed_point(self, params, state):
        ov, omega = state
        n = bose_einstein(params.beta, omega)
        assert np.allclose(transport_rhs(n, ov, omega, params, 0.1), 0.0, atol=1e-15)

    @settings(deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.floats(0.0, 20.0))
    def test_relaxes_toward_bose_einstein(self, params, state, n_g):
        ov, omega = state
        target = bose_einstein(params.beta, omega)
        n = target.copy()
        n[0] = n_g
        rhs = transport_rhs(n, ov, omega, params, 0.1)
        assert np.sign(rhs[0]) == -np.sign(n_g - target[0])

    def test_rate(self, params, state):
        ov, omega = state
        n = bose_einstein(params.beta, omega) + 1.0
        rhs = transport_rhs(n, ov, omega, params, 0.1)
        expected = -2 * math.pi * 0.01 * abs(ov.g) ** 2 * kernel_c(omega[0], 10.0)
        assert rhs[0] == pytest.approx(expected)

    def test_negative_occupation(self, params, state):
        ov, omega = state
        with pytest.raises(DomainError):
            transport_rhs(np.array([-1.0, 0.0, 0.0]), ov, omega, params, 0.1)
