from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinmetro.errors import StateSpecError
from spinmetro.qfi import qfi_matrix_analytic, trace_inverse
from spinmetro.spin_algebra import SpinQuantum, expectation, make_spin_ops, spin_ops_on, sym_covariance
from spinmetro.states import (
    StateVector,
    constructive_squeezed,
    css,
    dicke,
    joint_optimal,
    parse_spec,
    parse_state_spec,
    product,
    purify,
    random_state,
    reduced_density,
    sequential_optimal,
)

from conftest import SMALL_SPINS, spin_id


def moments(state):
    ops = spin_ops_on(state.space, state.j)
    return {
        name: expectation(state, op)
        for name, op in (("x", ops.jx), ("y", ops.jy), ("z", ops.jz),
                         ("xx", ops.jx @ ops.jx), ("yy", ops.jy @ ops.jy), ("zz", ops.jz @ ops.jz))
    }


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            StateVector(SpinQuantum(1), np.array([1.0, 1.0]))

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            StateVector(SpinQuantum(1), np.array([1.0, 0.0, 0.0]))

    def test_json_amplitudes_are_pairs(self):
        data = dicke("1/2", Fraction(1, 2)).to_json()
        assert data["amplitudes"] == [[1.0, 0.0], [0.0, 0.0]]
        assert data["two_j"] == 1


class TestConstructors:
    def test_dicke_zero(self):
        m = moments(dicke(1, 0))
        assert m["z"] == pytest.approx(0, abs=1e-12)
        assert m["zz"] == pytest.approx(0, abs=1e-12)
        assert m["xx"] == pytest.approx(1, abs=1e-12)
        assert m["yy"] == pytest.approx(1, abs=1e-12)

    def test_dicke_canonical(self):
        np.testing.assert_allclose(dicke("1/2", Fraction(1, 2)).amplitudes, [1, 0])

    @pytest.mark.parametrize("m", [Fraction(1, 2), 3, Fraction(5, 2)])
    def test_dicke_bad_m(self, m):
        with pytest.raises(ValueError):
            dicke(2, m)

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_css_z_is_top_state(self, j):
        np.testing.assert_allclose(css(j, "z").amplitudes, np.eye(j.dim)[0], atol=1e-12)

    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1),
           st.integers(1, 8))
    @settings(max_examples=30, deadline=None)
    def test_css_orthogonal_variance(self, n, two_j):
        j = SpinQuantum(two_j)
        n = np.array(n) / np.linalg.norm(n)
        perp = np.cross(n, [0.3, -0.7, 0.2])
        perp /= np.linalg.norm(perp)
        op = make_spin_ops(j).dot(perp)
        assert sym_covariance(css(j, n), op, op) == pytest.approx(j.j / 2, abs=1e-10)

    def test_css_x_spin_half(self):
        amps = css("1/2", "x").amplitudes
        np.testing.assert_allclose(np.abs(amps), [2 ** -0.5, 2 ** -0.5], atol=1e-12)

    def test_css_zero_direction(self):
        with pytest.raises(ValueError):
            css(1, (0, 0, 0))

    def test_joint_integer(self):
        psi = joint_optimal(1)
        assert psi.ancilla_dim == 0
        np.testing.assert_allclose(psi.amplitudes, [0, 1, 0])

    def test_joint_three_halves(self):
        psi = joint_optimal("3/2")
        m = moments(psi)
        assert psi.ancilla_dim == 2
        assert m["z"] == pytest.approx(0, abs=1e-12)
        assert m["zz"] == pytest.approx(0.25, abs=1e-12)
        assert abs(m["x"]) < 1e-12 and abs(m["y"]) < 1e-12
        ops = spin_ops_on(psi.space, psi.j)
        assert abs(sym_covariance(psi, ops.jx, ops.jy)) < 1e-12
        assert trace_inverse(qfi_matrix_analytic(psi).h) == pytest.approx(1 / 3.5, abs=1e-12)

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_sequential(self, j):
        m = moments(sequential_optimal(j, "x"))
        assert m["x"] == pytest.approx(0, abs=1e-12)
        assert m["xx"] == pytest.approx(j.j ** 2, abs=1e-12)

    def test_sequential_h_xx(self):
        assert qfi_matrix_analytic(sequential_optimal(2, "x")).h[0, 0] == pytest.approx(16, abs=1e-12)

    def test_sequential_spin_half_is_css(self):
        psi = sequential_optimal("1/2", "x")
        mean = np.array([moments(psi)[a] for a in "xyz"])
        assert np.linalg.norm(mean) == pytest.approx(0.5, abs=1e-12)
        assert abs(mean[0]) < 1e-12

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_constructive_squeezed_moments(self, j):
        m = moments(constructive_squeezed(j, "x"))
        assert m["x"] == pytest.approx(0, abs=1e-12)
        assert m["y"] == pytest.approx(0, abs=1e-12)
        if j.is_integer:
            assert m["yy"] == pytest.approx(0.5, abs=1e-12)
            assert m["z"] == pytest.approx(np.sqrt(j.casimir / 2), abs=1e-12)
        else:
            assert m["yy"] == pytest.approx(0.25, abs=1e-12)
            assert m["z"] == pytest.approx(0.5 * np.sqrt(j.casimir + 0.25), abs=1e-12)

    @pytest.mark.parametrize("j", SMALL_SPINS, ids=spin_id)
    def test_constructive_squeezed_y_partner(self, j):
        mx = moments(constructive_squeezed(j, "x"))
        my = moments(constructive_squeezed(j, "y"))
        assert my["xx"] == pytest.approx(mx["yy"], abs=1e-12)
        assert my["z"] == pytest.approx(mx["z"], abs=1e-12)

    def test_random_state_norm(self, rng):
        psi = random_state(2, rng, ancilla_dim=2)
        assert psi.dim == 10
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1, abs=1e-12)

    def test_product(self):
        psi = product(css(1, "z"), css(1, "x"))
        assert psi.ancilla_dim == 3
        np.testing.assert_allclose(reduced_density(psi), np.diag([1, 0, 0]), atol=1e-12)


class TestPurify:
    def test_pure(self, rng):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v /= np.linalg.norm(v)
        psi = purify(np.outer(v, v.conj()))
        assert psi.ancilla_dim == 1
        assert abs(abs(np.vdot(v, psi.amplitudes)) - 1) < 1e-12

    def test_maximally_mixed_qubit(self):
        psi = purify(np.eye(2) / 2)
        assert psi.ancilla_dim == 2
        np.testing.assert_allclose(reduced_density(psi), np.eye(2) / 2, atol=1e-12)

    def test_rank_two(self, rng):
        vecs = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        q, _ = np.linalg.qr(vecs)
        rho = 0.7 * np.outer(q[:, 0], q[:, 0].conj()) + 0.3 * np.outer(q[:, 1], q[:, 1].conj())
        psi = purify(rho)
        np.testing.assert_allclose(reduced_density(psi), rho, atol=1e-10)

    @pytest.mark.parametrize("rho", [np.diag([1.0, 1.0]), np.diag([1.5, -0.5]), np.array([[0.5, 1], [0, 0.5]])])
    def test_invalid(self, rho):
        with pytest.raises(ValueError):
            purify(rho)


class TestSpecGrammar:
    def test_dicke(self):
        np.testing.assert_allclose(parse_state_spec("dicke:j=1,m=0,axis=z").amplitudes, [0, 1, 0])

    def test_seq(self):
        psi = parse_state_spec("seq:j=2,axis=x,xi=0")
        np.testing.assert_allclose(psi.amplitudes, sequential_optimal(2, "x").amplitudes, atol=1e-14)

    def test_ghz_alias_and_pi(self):
        a = parse_state_spec("ghz:j=3/2,axis=y,xi=pi/2")
        b = sequential_optimal("3/2", "y", np.pi / 2)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)

    def test_raw_normalized(self):
        psi = parse_state_spec("raw:[1,0,0,1]/j=3/2")
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1, abs=1e-12)
        np.testing.assert_allclose(psi.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_raw_complex(self):
        psi = parse_state_spec("raw:[0.6, 0.8i]")
        np.testing.assert_allclose(psi.amplitudes, [0.6, 0.8j])

    def test_default_j(self):
        assert parse_state_spec("css:z", default_j="2").j.two_j == 4

    def test_product(self):
        psi = parse_state_spec("product:css:j=1/2,axis=z & css:j=1/2,axis=x")
        assert psi.dim == 4 and psi.ancilla_dim == 2

    def test_joint_spec_semi_odd(self):
        assert parse_state_spec("joint:j=5/2").ancilla_dim == 2

    def test_with_axis(self):
        spec = parse_spec("squeezed:j=2,axis=x")
        np.testing.assert_allclose(spec.with_axis("y").build().amplitudes,
                                   constructive_squeezed(2, "y").amplitudes)

    @pytest.mark.parametrize("text,pos", [
        ("blob:j=1", 0),
        ("dicke:j=1,q=3", 10),
        ("dicke:j=1,m=x", 12),
        ("dicke j=1", 9),
        ("raw:[0,0]/j=1/2", 4),
    ])
    def test_errors_carry_position(self, text, pos):
        with pytest.raises(StateSpecError) as info:
            parse_spec(text)
        assert info.value.position == pos
        assert "^" in str(info.value)

    def test_missing_j(self):
        with pytest.raises(StateSpecError):
            parse_spec("css:z")

    def test_wrong_raw_length(self):
        with pytest.raises(StateSpecError):
            parse_spec("raw:[1,0,0]/j=3/2")

    @pytest.mark.parametrize("text", ["dicke:j=1,m=1/2", "squeezed:j=1/2,axis=z"])
    def test_build_errors(self, text):
        with pytest.raises(StateSpecError):
            parse_state_spec(text)
