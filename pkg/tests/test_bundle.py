import math

import numpy as np
import pytest

from direct_image_lab.bergman import Basis
from direct_image_lab.bundle import (
    DualGramField,
    GramField,
    MatrixGramField,
    _FieldBase,
    chern_curvature,
    degeneracy_diagnostics,
    direction_grid,
    dual_curvature_residual,
    generalized_min_eig,
    griffiths_min,
    hormander_bound_margin,
    log_norm_psh_residual,
    nakano_min_eig,
    normal_tuple_second_derivative_residual,
    polynomial_section,
    subbundle_formula_residual,
)
from direct_image_lab.errors import DomainError, NonHermitianError
from direct_image_lab.weights import (
    combine,
    fock_decoupled,
    fock_general,
    fock_scaled,
    fock_shifted,
    fs_family,
    mobius_flow,
)


def _unit(size, index=0):
    c = np.zeros(size, dtype=complex)
    c[index] = 1
    return c


class TestCurvature:
    def test_fock_curvature_at_origin(self, fock, plane_rule):
        curv = chern_curvature(GramField(Basis.plane(16), fock, plane_rule), 0.0)
        np.testing.assert_allclose(curv.theta[0, 0], np.diag(np.arange(1.0, 18.0)), atol=1e-7)

    def test_fock_curvature_off_origin(self, fock, plane_rule):
        t = 0.3 + 0.4j
        a = 1 + abs(t) ** 2
        curv = chern_curvature(GramField(Basis.plane(8), fock, plane_rule), t)
        np.testing.assert_allclose(curv.theta[0, 0], np.diag(np.arange(1.0, 10.0)) / a ** 2, atol=1e-8)
        assert curv.form([_unit(9)]) == pytest.approx(math.pi / a ** 3, rel=1e-9)

    def test_finite_differences_agree_with_analytic_mode(self, fock, plane_rule):
        basis = Basis.plane(8)
        exact = chern_curvature(GramField(basis, fock, plane_rule), 0.3).theta
        approx = chern_curvature(GramField(basis, fock, plane_rule, mode="finite_difference"), 0.3).theta
        assert np.max(np.abs(approx - exact)) / np.max(np.abs(exact)) <= 1e-5

    def test_matrix_field_line_bundle(self):
        field = MatrixGramField(lambda t: np.exp(-abs(t[0]) ** 2) * np.eye(2))
        curv = chern_curvature(field, 0.4 - 0.1j)
        np.testing.assert_allclose(curv.theta[0, 0], np.eye(2), atol=1e-6)

    def test_dual_flips_the_sign(self):
        field = MatrixGramField(lambda t: np.array([[np.exp(-2 * abs(t[0]) ** 2)]]))
        curv = chern_curvature(DualGramField(field), 0.2)
        assert curv.theta[0, 0][0, 0].real == pytest.approx(-2.0, abs=1e-6)

    def test_gauge_flat_matrix_field(self):
        # A(t)ᴴA(t) with A holomorphic: Θ = 0 exactly, so only roundoff is left
        def metric(t):
            A = np.array([[1.0, t[0]], [0.0, 1.0]])
            return A.conj().T @ A

        curv = chern_curvature(MatrixGramField(metric), 0.4 + 0.3j)
        assert curv.norm <= 1e-6
        np.testing.assert_array_equal(curv.pairing(0, 0), curv.pairing(0, 0).conj().T)

    def test_translated_fock_weight_is_flat(self, plane_rule):
        field = GramField(Basis.plane(8), fock_shifted(), plane_rule)
        for t in (0.3, 0.2 - 0.2j):
            curv = chern_curvature(field, t)
            assert np.max(np.abs(curv.pairing(0, 0))) <= 1e-6 * np.max(np.abs(curv.h.h))
        assert dual_curvature_residual(field, 0.3) <= 1e-7

    def test_asymmetric_input_is_rejected(self):
        class Skewed(MatrixGramField):
            def derivatives(self, t):
                der = super().derivatives(t)
                der.ddbar[0, 0] = der.ddbar[0, 0] + np.array([[0.0, 1.0], [0.0, 0.0]])
                return der

        with pytest.raises(NonHermitianError):
            chern_curvature(Skewed(lambda t: np.exp(-abs(t[0]) ** 2) * np.eye(2)), 0.1)

    def test_unknown_mode(self, fock, plane_rule):
        with pytest.raises(DomainError):
            GramField(Basis.plane(4), fock, plane_rule, mode="symbolic")


class TestGram:
    def test_larger_weight_gives_smaller_norms(self, plane_rule):
        lower = fock_shifted()
        upper = combine([(1.0, lower), (0.5, fs_family(0, [(1, 1)]))])
        basis = Basis.plane(8)
        for t in (0.0, 0.3 - 0.2j):
            h_lower = GramField(basis, lower, plane_rule).gram(t).h
            h_upper = GramField(basis, upper, plane_rule).gram(t).h
            gap = h_lower - h_upper
            gap = 0.5 * (gap + gap.conj().T)
            assert np.linalg.eigvalsh(gap)[0] >= -1e-12 * np.max(np.abs(h_lower))
            assert np.all(np.diag(gap).real > 0)

    def test_field_must_define_its_gram(self):
        class Bare(_FieldBase):
            base_dim = 1
            step = 1e-3

        with pytest.raises(TypeError):
            Bare()


class TestPositivity:
    def test_fock_nakano_bound(self, fock, plane_rule):
        field = GramField(Basis.plane(8), fock, plane_rule)
        for t in (0.0, 0.5, 0.3 + 0.4j):
            a = 1 + abs(t) ** 2
            assert nakano_min_eig(chern_curvature(field, t)) == pytest.approx(1 / a ** 2, rel=1e-8)

    def test_two_dimensional_base(self, plane_rule):
        t = [0.3, 0.2j]
        a = 1 + 0.09 + 0.04
        curv = chern_curvature(GramField(Basis.plane(8), fock_scaled(2), plane_rule), t)
        nakano = nakano_min_eig(curv)
        assert nakano == pytest.approx(1 / a ** 2, rel=1e-8)
        assert griffiths_min(curv) >= nakano - 1e-10

    def test_decoupled_weight_is_flat_times_c(self, plane_rule):
        curv = chern_curvature(GramField(Basis.plane(8), fock_decoupled(2.5), plane_rule), 0.5)
        assert nakano_min_eig(curv) == pytest.approx(2.5, rel=1e-9)

    def test_frame_change_invariance(self, fs4_positive, p1_rule):
        A = np.array([[1, 0.5j, 0], [0, 2, 0], [0.3, 0, 1]], dtype=complex)
        plain = GramField(Basis.p1(4), fs4_positive, p1_rule)
        framed = GramField(Basis.p1(4).with_frame(A), fs4_positive, p1_rule)
        a = nakano_min_eig(chern_curvature(plain, 0.3))
        b = nakano_min_eig(chern_curvature(framed, 0.3))
        assert abs(a - b) <= 1e-9

    def test_generalized_min_eig(self):
        assert generalized_min_eig(np.diag([1.0, 2.0]), np.diag([2.0, 1.0])) == pytest.approx(0.5)

    def test_direction_grid(self):
        assert len(direction_grid(1)) == 1
        grid = direction_grid(2)
        assert len(grid) == 2 + 7 * 12
        for v in grid:
            assert np.linalg.norm(v) == pytest.approx(1.0)


class TestIdentities:
    def test_dual_curvature_residual(self, fock, plane_rule):
        field = GramField(Basis.plane(8), fock, plane_rule)
        assert dual_curvature_residual(field, 0.3 + 0.4j) <= 1e-7

    def test_dual_residual_on_p1(self, fs4_positive, p1_rule):
        field = GramField(Basis.p1(4), fs4_positive, p1_rule)
        assert dual_curvature_residual(field, 0.5) <= 1e-7

    def test_log_norm_of_a_constant_dual_section(self, fock, plane_rule):
        field = GramField(Basis.plane(8), fock, plane_rule)
        section = polynomial_section([[_unit(9), 0]])
        # log‖e⁰‖² = log(1+|t|²) − log π
        assert log_norm_psh_residual(field, section, [0.0]) == pytest.approx(1.0, abs=1e-5)

    def test_polynomial_section(self):
        section = polynomial_section([[[1, 0], 0], [[0, 2], 1]])
        np.testing.assert_allclose(section(np.array([0.5j])), [1, 1j])
        two = polynomial_section([[[1.0], 1, 2]])
        assert two(np.array([2.0, 3.0]))[0] == pytest.approx(18.0)

    def test_subbundle_formula(self, plane_rule):
        phi = fock_general([[1, 0, 0], [1, 1, 1]], [[0.3, 0, 1]], [[1, 1, 1]])
        basis = Basis.plane(4)
        for t in (0.3, 0.2 + 0.3j):
            for coeffs in ([_unit(5)], [_unit(5, 3)], [_unit(5, 1) + 0.5 * _unit(5, 2)]):
                residual = subbundle_formula_residual(basis, phi, t, plane_rule, coeffs, antidegree=6)
                assert residual <= 1e-6

    def test_subbundle_needs_plain_monomials(self, fs4, p1_rule):
        with pytest.raises(DomainError):
            subbundle_formula_residual(Basis.p1(4), fs4, 0.0, p1_rule, [_unit(3)])

    def test_fock_lower_bound_is_attained(self, fock, plane_rule):
        basis = Basis.plane(8)
        for k in range(9):
            margin = hormander_bound_margin(basis, fock, 0.5, plane_rule, [_unit(9, k)])
            assert abs(margin) <= 1e-8

    def test_lower_bound_holds_for_mixtures(self, fs4_positive, p1_rule):
        margin = hormander_bound_margin(Basis.p1(4), fs4_positive, 0.4, p1_rule, [np.array([1, 0.5, -1j])])
        assert margin >= -1e-8

    def test_normal_tuple_second_derivative(self, fock, plane_rule):
        field = GramField(Basis.plane(8), fock, plane_rule)
        assert normal_tuple_second_derivative_residual(field, 0.5, [_unit(9)]) <= 1e-6
        assert normal_tuple_second_derivative_residual(field, 0.2j, [_unit(9, 2) + _unit(9, 4)]) <= 1e-6

    def test_tuple_size_must_match_base(self, fock, plane_rule):
        field = GramField(Basis.plane(4), fock, plane_rule)
        with pytest.raises(DomainError):
            normal_tuple_second_derivative_residual(field, 0.0, [_unit(5), _unit(5)])


class TestDegeneracy:
    def test_mobius_flow_is_flat(self, p1_rule):
        phi = mobius_flow(4)
        field = GramField(Basis.p1(4), phi, p1_rule)
        record = degeneracy_diagnostics(phi, 0.3, p1_rule, field)
        assert abs(record.min_curv_eig) <= 1e-6
        assert record.dbar_V_residual <= 1e-8
        assert record.V_mean == pytest.approx(-1.0, abs=1e-10)

    def test_positive_family_is_not_holomorphic(self, fs4_positive, p1_rule):
        field = GramField(Basis.p1(4), fs4_positive, p1_rule)
        record = degeneracy_diagnostics(fs4_positive, 0.3, p1_rule, field)
        assert record.min_curv_eig > 0
        assert record.dbar_V_residual > 1e-4
