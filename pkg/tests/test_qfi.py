import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinmetro.errors import SingularQfiError
from spinmetro.qfi import (
    PhasePair,
    QfiMatrix,
    aux_vectors,
    crb,
    evolve,
    first_order_correction,
    qfi_from_slds,
    qfi_matrix_analytic,
    qfi_matrix_numeric,
    sld_general,
)
from spinmetro.spin_algebra import SpinQuantum, expectation, hermitian_expm, make_spin_ops, variance
from spinmetro.states import (
    StateVector,
    constructive_squeezed,
    css,
    dicke,
    joint_optimal,
    random_state,
    sequential_optimal,
)

from conftest import SMALL_SPINS, spin_id


class TestPhasePair:
    def test_parse(self):
        p = PhasePair.parse("0.03,-0.04")
        assert (p.phi_x, p.phi_y) == (0.03, -0.04)
        assert p.magnitude == pytest.approx(0.05)

    @pytest.mark.parametrize("bad", ["1", "a,b", "nan,0", "1,2,3"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            PhasePair.parse(bad)


class TestEvolve:
    def test_zero_phase(self, rng):
        psi = random_state(2, rng)
        np.testing.assert_allclose(evolve(psi, PhasePair(0, 0)).amplitudes, psi.amplitudes, atol=1e-15)

    @given(st.floats(-4, 4), st.floats(-4, 4))
    @settings(max_examples=20, deadline=None)
    def test_norm_preserved(self, px, py):
        psi = joint_optimal("5/2")
        out = evolve(psi, PhasePair(px, py))
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1, abs=1e-12)

    def test_pi_rotation_flips_spin_half(self):
        j = SpinQuantum(1)
        out = evolve(css(j, "z"), PhasePair(np.pi, 0))
        assert expectation(out, make_spin_ops(j).jz) == pytest.approx(-0.5, abs=1e-12)


class TestAuxVectors:
    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_orthogonal_and_norm(self, j, rng):
        psi = random_state(j, rng)
        ops = make_spin_ops(j)
        lx, ly = aux_vectors(psi).zeroth
        assert abs(np.vdot(psi.amplitudes, lx)) < 1e-12
        assert abs(np.vdot(psi.amplitudes, ly)) < 1e-12
        assert np.vdot(lx, lx).real == pytest.approx(4 * variance(psi, ops.jx), abs=1e-10)

    def test_sequential_two(self):
        psi = sequential_optimal(2, "x")
        lx, _ = aux_vectors(psi).zeroth
        # |l_x|^2 = 4 Var(J_x) = 4 j^2 = 16, evaluated by both routes
        assert np.vdot(lx, lx).real == pytest.approx(16, abs=1e-10)
        assert qfi_matrix_numeric(psi).h[0, 0] == pytest.approx(16, abs=1e-6)

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_first_order_matches_commutator_formula(self, j, rng):
        psi = random_state(j, rng)
        phi = PhasePair(0.02, -0.035)
        aux = aux_vectors(psi, phi)
        h1 = np.array([[np.vdot(aux.zeroth[m], aux.first[n]).real + np.vdot(aux.first[m], aux.zeroth[n]).real
                        for n in range(2)] for m in range(2)])
        np.testing.assert_allclose(h1, first_order_correction(psi, phi), atol=1e-12)


class TestAnalytic:
    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_css(self, j):
        np.testing.assert_allclose(qfi_matrix_analytic(css(j, "z")).h, np.diag([2 * j.j] * 2), atol=1e-12)

    def test_dicke_one_zero(self):
        q = qfi_matrix_analytic(dicke(1, 0))
        np.testing.assert_allclose(q.h, np.diag([4.0, 4.0]), atol=1e-12)
        assert crb(q).value == pytest.approx(0.5)

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_first_order_vanishes_on_optima(self, j):
        phi = PhasePair(0.04, -0.03)
        xi = 1.1 if j.two_j > 1 else 0.0  # at j=1/2 a nonzero xi tilts the mean spin into the xy-plane
        for psi in (joint_optimal(j), sequential_optimal(j, "x"), sequential_optimal(j, "y", xi)):
            assert np.max(np.abs(first_order_correction(psi, phi))) <= 1e-12

    def test_first_order_linear_in_phi(self, rng):
        psi = random_state(3, rng)
        phi, phi2 = PhasePair(0.01, 0.02), PhasePair(0.02, 0.04)
        np.testing.assert_allclose(first_order_correction(psi, phi2), 2 * first_order_correction(psi, phi), atol=1e-10)

    def test_first_corrected_order(self, rng):
        psi = random_state(2, rng)
        phi = PhasePair(0.01, 0.0)
        q0 = qfi_matrix_analytic(psi, phi)
        q1 = qfi_matrix_analytic(psi, phi, "first_corrected")
        np.testing.assert_allclose(q1.h - q0.h, first_order_correction(psi, phi), atol=1e-14)
        with pytest.raises(ValueError):
            qfi_matrix_analytic(psi, phi, "second")

    def test_global_phase_invariance(self, rng):
        psi = random_state("3/2", rng, ancilla_dim=2)
        shifted = psi.with_amplitudes(np.exp(0.7j) * psi.amplitudes)
        a = crb(qfi_matrix_analytic(psi)).total_sensitivity
        b = crb(qfi_matrix_analytic(shifted)).total_sensitivity
        assert a == pytest.approx(b, abs=1e-10)

    def test_matrix_properties(self, rng):
        q = qfi_matrix_analytic(random_state(4, rng))
        assert q.is_symmetric
        assert np.linalg.eigvalsh(q.h).min() >= -1e-10


class TestAchievability:
    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_residual_is_twice_mean_jz(self, j, rng):
        for _ in range(5):
            psi = random_state(j, rng)
            jz = expectation(psi, make_spin_ops(j).jz)
            assert qfi_matrix_analytic(psi).achievability_residual == pytest.approx(2 * jz, abs=1e-12)
            assert qfi_matrix_numeric(psi).achievability_residual == pytest.approx(2 * jz, abs=1e-7)

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_zero_on_balanced_states(self, j):
        probes = [joint_optimal(j)] + ([sequential_optimal(j, "x")] if j.two_j > 1 else [])
        for psi in probes:
            assert abs(qfi_matrix_numeric(psi).achievability_residual) < 1e-8
            assert qfi_matrix_analytic(psi).achievable

    def test_nonzero_iff_polarized(self):
        assert not qfi_matrix_analytic(css(2, "z")).achievable
        assert not qfi_matrix_analytic(constructive_squeezed(2, "x")).achievable


class TestNumeric:
    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_matches_analytic_on_random_states(self, j, rng):
        step = 1e-4
        for _ in range(100):
            psi = random_state(j, rng)
            a = qfi_matrix_analytic(psi).h
            n = qfi_matrix_numeric(psi, step=step).h
            tol = max(1e-6, 10 * step ** 2 * np.linalg.norm(a, 2))
            assert np.max(np.abs(a - n)) <= tol

    def test_css(self):
        np.testing.assert_allclose(qfi_matrix_numeric(css(3, "z")).h, np.diag([6.0, 6.0]), atol=1e-6)

    @pytest.mark.parametrize("step", [1e-8, 1e-2, 0.0])
    def test_step_range(self, step):
        with pytest.raises(ValueError):
            qfi_matrix_numeric(css(1, "z"), step=step)

    def test_richardson_warning(self, rng):
        with pytest.warns(RuntimeWarning):
            q = qfi_matrix_numeric(random_state(4, rng), step=1e-3, rtol=1e-12)
        assert q.warning

    def test_with_ancilla(self):
        psi = joint_optimal("3/2")
        np.testing.assert_allclose(qfi_matrix_numeric(psi).h, qfi_matrix_analytic(psi).h, atol=1e-6)


class TestSld:
    def test_pure_state(self, rng):
        psi = random_state(1, rng)
        ops = make_spin_ops(psi.j)
        v = psi.amplitudes
        rho = np.outer(v, v.conj())
        slds = []
        for op in (ops.jx, ops.jy):
            drho = 1j * (op @ rho - rho @ op)
            slds.append(sld_general(rho, drho))
        q = qfi_from_slds(rho, slds)
        np.testing.assert_allclose(q.h, qfi_matrix_analytic(psi).h, atol=1e-6)
        assert q.pure_state_model

    def test_maximally_mixed(self, rng):
        d = 3
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        drho = a + a.conj().T
        drho -= np.trace(drho) / d * np.eye(d)
        np.testing.assert_allclose(sld_general(np.eye(d) / d, drho), d * drho, atol=1e-12)

    @pytest.mark.parametrize("j", SMALL_SPINS[:4], ids=spin_id)
    def test_single_parameter_css(self, j):
        psi0 = css(j, "x").amplitudes
        jz = make_spin_ops(j).jz

        def rho(lam):
            v = hermitian_expm(jz, scale=1j * lam) @ psi0
            return np.outer(v, v.conj())

        h = 1e-5
        drho = (rho(h) - rho(-h)) / (2 * h)
        drho = (drho + drho.conj().T) / 2
        drho -= np.trace(drho) / j.dim * np.eye(j.dim)
        r0 = rho(0.0)
        q = qfi_from_slds(r0, [sld_general(r0, drho)])
        assert q.h[0, 0] == pytest.approx(2 * j.j, abs=1e-6)

    def test_mixed_flag(self):
        rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
        drho = np.zeros((3, 3), complex)
        drho[0, 1] = drho[1, 0] = 0.1
        q = qfi_from_slds(rho, [sld_general(rho, drho), sld_general(rho, drho)])
        assert not q.pure_state_model

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            sld_general(np.eye(2) / 2, np.array([[0, 1], [0, 0]]))


class TestCrb:
    def test_joint_one(self):
        r = crb(np.diag([4.0, 4.0]))
        assert r.value == pytest.approx(0.5)
        assert r.total_sensitivity == pytest.approx(2 ** -0.5)

    @pytest.mark.parametrize("a", [0.5, 2.0, 13.0])
    def test_diagonal(self, a):
        assert crb(np.diag([a, a])).value == pytest.approx(2 / a)

    def test_measurements_and_weight(self):
        r = crb(np.diag([2.0, 4.0]), weight=np.diag([1.0, 3.0]), m=10)
        assert r.value == pytest.approx((0.5 + 0.75) / 10)
        assert r.total_sensitivity is None

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_css_end_to_end(self, j):
        assert crb(qfi_matrix_analytic(css(j, "z"))).total_sensitivity == pytest.approx(1 / np.sqrt(j.j), abs=1e-12)

    def test_singular_reports_direction(self):
        psi = css(2, "x")  # no J_x fluctuation
        with pytest.raises(SingularQfiError) as info:
            crb(qfi_matrix_analytic(psi))
        np.testing.assert_allclose(np.abs(info.value.direction), [1, 0], atol=1e-12)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            crb(np.eye(2), m=0)
        with pytest.raises(ValueError):
            crb(np.eye(2), weight=np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_qfi_matrix_validation(self):
        with pytest.raises(ValueError):
            QfiMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), "numeric", 0.0)
