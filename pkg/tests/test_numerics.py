"""
Kriging Measures - Numerics Tests
Quadrature rules and dense solves.
"""

import numpy as np
import pytest

from src.errors import ConfigError, NotPositiveDefiniteError, SingularSystemError
from src.numerics import (SpdFactor, check_symmetric, composite_rule, default_panels, gauss_legendre,
                          solve_bordered, solve_spd)


class TestQuadrature:
    """Gauss-Legendre and composite rules"""

    def test_one_node_rule(self):
        rule = gauss_legendre(0.0, 1.0, 1)
        assert rule.nodes == pytest.approx([0.5])
        assert rule.weights == pytest.approx([1.0])

    def test_polynomial_exactness(self):
        rule = gauss_legendre(-1.0, 2.0, 4)
        # 4 nodes integrate degree 7 exactly
        assert rule.integrate(lambda t: t ** 7) == pytest.approx((2.0 ** 8 - 1.0) / 8.0)

    def test_invalid_interval(self):
        with pytest.raises(ConfigError):
            gauss_legendre(1.0, 0.0, 4)

    def test_invalid_order(self):
        with pytest.raises(ConfigError):
            gauss_legendre(0.0, 1.0, 0)

    def test_panel_policy(self):
        assert default_panels(0.0, 1.0, 1.0) == 4
        assert default_panels(0.0, 10.0, 1.0) == 10

    def test_composite_handles_kink(self):
        rule = composite_rule(0.0, 1.0, order=8, breakpoints=(0.3,))
        assert rule.integrate(lambda t: np.abs(t - 0.3)) == pytest.approx((0.3 ** 2 + 0.7 ** 2) / 2, abs=1e-13)

    def test_weights_sum_to_length(self):
        rule = composite_rule(1.0, 3.5, order=5, panels=7, breakpoints=(2.0, 2.2))
        assert rule.weights.sum() == pytest.approx(2.5)
        assert np.all(rule.weights > 0)

    def test_degenerate_interval_is_empty(self):
        rule = composite_rule(1.0, 1.0)
        assert rule.size == 0
        assert rule.integrate(np.cos) == 0.0


class TestSolves:
    """Symmetric positive definite and bordered systems"""

    def test_solve_spd(self):
        z = solve_spd(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([1.0, 0.0]))
        assert z == pytest.approx([2.0 / 3.0, -1.0 / 3.0])

    def test_factor_reuse(self):
        factor = SpdFactor(np.array([[4.0, 2.0], [2.0, 3.0]]))
        B = np.eye(2)
        assert factor.matrix @ factor.solve(B) == pytest.approx(B)
        h = factor.half_solve(np.array([1.0, 1.0]))
        assert h @ h == pytest.approx(np.array([1.0, 1.0]) @ factor.solve(np.array([1.0, 1.0])))

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            SpdFactor(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(ConfigError):
            check_symmetric(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_bordered_system(self):
        X = np.array([[1.0], [1.0]])
        Sigma = np.array([[2.0, 1.0], [1.0, 2.0]])
        z = solve_bordered(X, Sigma, np.array([1.0, 1.0, 1.0]))
        # symmetric problem: equal weights summing to one
        assert z[1:] == pytest.approx([0.5, 0.5])

    def test_bordered_singular(self):
        X = np.zeros((2, 1))
        with pytest.raises(SingularSystemError):
            solve_bordered(X, np.eye(2), np.array([1.0, 0.0, 0.0]))
