import math

import numpy as np
import pytest

from direct_image_lab.errors import DomainError, HypothesisError
from direct_image_lab.projbundle import (
    RankTwoMetricFamily,
    det_identity_residual,
    e_bundle_gram,
    hypothesis_certificate,
    induced_action_matrix,
    induced_weight,
    o1_weight,
    theorem_7_1_check,
    universal_constant,
)

GRID = [0.0, 0.3, 0.2 + 0.4j]


def _unimodular():
    return RankTwoMetricFamily.polynomial([[[1, 0], [0, 1]], [[0, 1], [0, 0]]])


class TestMetricFamilies:
    def test_o1_weight(self):
        w = np.array([0.0, 1.0, 0.5j])
        identity = RankTwoMetricFamily.constant(np.eye(2))
        np.testing.assert_allclose(o1_weight(identity, 0.7, w), np.log1p(np.abs(w) ** 2))
        conformal = RankTwoMetricFamily.conformal(2.0)
        t = 0.3 + 0.1j
        expected = 2.0 * abs(t) ** 2 + np.log1p(np.abs(w) ** 2)
        np.testing.assert_allclose(o1_weight(conformal, t, w), expected)

    def test_unimodular_metric(self):
        fam = _unimodular()
        t = 0.5 - 0.2j
        A = np.array([[1, t], [0, 1]])
        np.testing.assert_allclose(fam(t), A.conj().T @ A)
        assert abs(np.linalg.det(fam(t))) == pytest.approx(1.0)

    def test_dual(self):
        fam = RankTwoMetricFamily.diagonal(1.0, 2.0)
        np.testing.assert_allclose(fam.dual(0.5) @ fam(0.5).T, np.eye(2), atol=1e-14)

    def test_bad_metrics(self):
        with pytest.raises(DomainError):
            RankTwoMetricFamily("hyperbolic")
        with pytest.raises(DomainError):
            RankTwoMetricFamily.constant([[1, 2], [2, 1]])(0.0)
        with pytest.raises(DomainError, match="condition"):
            RankTwoMetricFamily.constant(np.diag([1.0, 1e-9])).check_conditioning([0.0])
        assert RankTwoMetricFamily.conformal().check_conditioning(GRID) == pytest.approx(1.0)

    def test_labels(self):
        assert RankTwoMetricFamily.conformal().label == "conformal(c=1.0)"
        assert RankTwoMetricFamily.conformal().transformed(np.eye(2)).label.endswith("·U")


class TestInducedBundles:
    def test_universal_constant(self, p1_rule):
        assert universal_constant(p1_rule) == pytest.approx(math.pi, rel=1e-12)

    def test_det_v_gram(self, p1_rule):
        # G_{E(2)} = c₂·det h_V
        fam = RankTwoMetricFamily.constant(np.diag([4.0, 1.0]))
        assert e_bundle_gram(fam, 0.0, 2, p1_rule).h[0, 0].real == pytest.approx(4 * math.pi, rel=1e-10)

    def test_identity_metric_on_e3(self, p1_rule):
        g = e_bundle_gram(RankTwoMetricFamily.constant(np.eye(2)), 0.0, 3, p1_rule)
        np.testing.assert_allclose(g.h, 0.5 * math.pi * np.eye(2), atol=1e-12)

    @pytest.mark.parametrize(
        "fam",
        [RankTwoMetricFamily.conformal(1.0), RankTwoMetricFamily.diagonal(1.0, 2.0), _unimodular()],
        ids=["conformal", "diagonal", "unimodular"],
    )
    def test_det_identity(self, fam, p1_rule):
        assert det_identity_residual(fam, GRID, p1_rule) <= 1e-6

    def test_change_of_frame_on_v(self, p1_rule):
        fam = RankTwoMetricFamily.diagonal(1.0, 2.0)
        U = np.array([[1.0, 0.3], [0.2j, 1.0]])
        R = induced_action_matrix(U, 4)
        for t in (0.0, 0.3 + 0.2j):
            moved = e_bundle_gram(fam.transformed(U), t, 4, p1_rule).h
            base = e_bundle_gram(fam, t, 4, p1_rule).h
            expected = R.conj().T @ base @ R
            assert np.max(np.abs(moved - expected)) <= 1e-8 * np.max(np.abs(expected))

    def test_diagonal_action(self):
        alpha, beta = 2.0, 0.5j
        R = induced_action_matrix(np.diag([alpha, beta]), 5)
        expected = [np.conj(alpha * beta * beta ** k * alpha ** (3 - k)) for k in range(4)]
        np.testing.assert_allclose(R, np.diag(expected))

    def test_shear_translates_the_chart(self):
        # h_V → Uᴴ h_V U with U = [[1, s], [0, 1]] shifts the O(1) weight by s̄
        s = 0.3 + 0.4j
        R = induced_action_matrix(np.array([[1.0, s], [0.0, 1.0]]), 5)
        expected = np.array(
            [[math.comb(k, i) * np.conj(s) ** (k - i) if i <= k else 0.0 for k in range(4)] for i in range(4)]
        )
        np.testing.assert_allclose(R, expected, atol=1e-15)

    def test_shear_on_the_gram(self, p1_rule):
        s = 0.25 - 0.1j
        fam = RankTwoMetricFamily.constant(np.eye(2))
        U = np.array([[1.0, s], [0.0, 1.0]])
        R = induced_action_matrix(U, 4)
        moved = e_bundle_gram(fam.transformed(U), 0.0, 4, p1_rule).h
        base = e_bundle_gram(fam, 0.0, 4, p1_rule).h
        np.testing.assert_allclose(moved, R.conj().T @ base @ R, atol=1e-8)

    def test_induced_weight_needs_degree_two(self):
        with pytest.raises(DomainError):
            induced_weight(RankTwoMetricFamily.conformal(), 1)


class TestSymmetricPowerPositivity:
    def test_conformal_values(self, p1_rule):
        fam = RankTwoMetricFamily.conformal(1.0)
        for m, expected in ((0, 2.0), (1, 3.0), (2, 4.0)):
            result = theorem_7_1_check(fam, GRID, m, p1_rule)
            assert result.degree == 2 + m
            assert result.strict
            assert result.min_nakano == pytest.approx(expected, rel=1e-4)

    def test_scales_with_the_metric(self, p1_rule):
        result = theorem_7_1_check(RankTwoMetricFamily.conformal(2.0), [0.3], 1, p1_rule)
        assert result.min_nakano == pytest.approx(6.0, rel=1e-4)

    def test_diagonal_values(self, p1_rule):
        fam = RankTwoMetricFamily.diagonal(1.0, 2.0)
        assert theorem_7_1_check(fam, GRID, 0, p1_rule).min_nakano == pytest.approx(3.0, rel=1e-4)
        assert theorem_7_1_check(fam, GRID, 1, p1_rule).min_nakano == pytest.approx(4.0, rel=1e-4)

    def test_flat_family_is_not_strict(self, p1_rule):
        result = theorem_7_1_check(RankTwoMetricFamily.constant(np.eye(2)), GRID, 1, p1_rule)
        assert not result.strict
        assert abs(result.min_nakano) <= 1e-6
        unimodular = theorem_7_1_check(_unimodular(), GRID, 0, p1_rule)
        assert abs(unimodular.min_nakano) <= 1e-4

    def test_negative_metric_is_rejected(self, p1_rule):
        with pytest.raises(HypothesisError):
            theorem_7_1_check(RankTwoMetricFamily.conformal(-1.0), GRID, 0, p1_rule)

    def test_hypothesis_certificate(self):
        assert hypothesis_certificate(RankTwoMetricFamily.conformal(1.5), GRID) == pytest.approx(1.5, rel=1e-6)

    def test_negative_power(self, p1_rule):
        with pytest.raises(DomainError):
            theorem_7_1_check(RankTwoMetricFamily.conformal(), GRID, -1, p1_rule)
