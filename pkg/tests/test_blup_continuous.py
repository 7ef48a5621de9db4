"""
Kriging Measures - Continuous BLUP Tests
Closed-form measures, their residual checks and the three MSE evaluators.
"""

import numpy as np
import pytest

from src.blup_continuous import (continuous_blue, continuous_blup, continuous_blup_average, endpoint_zeta_t0,
                                 ibm_blup, ibm_printed_mse, matern32_blup, mse_of_measure, reduced_kernel_mse,
                                 target_residual, trend_integral, zeta_residual, zeta_t0)
from src.errors import ConfigError, SmoothnessError, UnbiasednessError
from src.kernels import brownian, exponential, integrated_brownian, markovian
from src.measures import SignedMeasure, VectorMeasure
from src.models import AverageTarget, ContinuousModel, PointTarget, get_trend


class TestBlue:
    """BLUE measures and C, D"""

    def test_brownian_constant(self, bm_model):
        blue = continuous_blue(bm_model)
        # C = f(A)^2 / A + int f'^2 = 1 on [1, 2]
        assert blue.C[0, 0] == pytest.approx(1.0)
        assert blue.G[0][0].weight_at(1.0) == pytest.approx(1.0)
        assert blue.G[0][0].weight_at(2.0) == pytest.approx(0.0)

    def test_brownian_quadratic_trend(self):
        model = ContinuousModel(brownian(), get_trend("t2"), (1.0, 2.0))
        blue = continuous_blue(model)
        assert blue.C[0, 0] == pytest.approx(1.0 + 4.0 / 3.0 * 7.0)

    def test_blue_is_unbiased(self):
        model = ContinuousModel(exponential(2.0), get_trend("linear"), (0.0, 1.0))
        blue = continuous_blue(model)
        F = np.vstack([trend_integral(model.trend, g) for g in blue.G])
        assert F == pytest.approx(np.eye(2), abs=1e-9)

    def test_residuals_small(self, ou_model, matern_model):
        for model in (ou_model, matern_model):
            blue = continuous_blue(model)
            assert zeta_residual(model, blue.zeta) <= 1e-8
            assert blue.D @ blue.C == pytest.approx(np.eye(1))

    def test_pinned_start(self, const1):
        model = ContinuousModel(brownian(), const1, (0.0, 1.0))
        blue = continuous_blue(model)
        assert blue.pinned
        assert blue.D[0, 0] == 0.0
        assert blue.G[0][0].atoms == ((0.0, 1.0),)

    def test_ibm_needs_positive_start(self, const1):
        with pytest.raises(ConfigError):
            continuous_blue(ContinuousModel(integrated_brownian(), const1, (0.0, 1.0)))

    def test_partial_orders_have_no_closed_form(self, matern, const1):
        with pytest.raises(ConfigError):
            continuous_blue(ContinuousModel(matern, const1, (0.0, 1.0), orders=(0,)))


class TestZetaTarget:
    """zeta measures for the prediction target"""

    def test_interior_is_dirac(self, ou_model):
        vm, path, _ = zeta_t0(ou_model, 0.4)
        assert path == "interior"
        assert vm[0].atoms == ((0.4, 1.0),)

    def test_ou_falls_back_to_endpoint(self, ou_model):
        vm, path, residuals = zeta_t0(ou_model, 2.0)
        assert path == "endpoint"
        assert residuals["zeta_t0"] <= 1e-8
        assert residuals["zeta_t0_printed"] > 1e-8
        assert np.array(vm[0].atoms) == pytest.approx(np.array([[1.0, np.exp(-2.0)]]))

    def test_brownian_two_atom_form(self, bm_model):
        vm, path, residuals = zeta_t0(bm_model, 3.0)
        assert path == "printed"
        assert vm[0].weight_at(2.0) == pytest.approx(1.0)
        assert vm[0].weight_at(1.0) == pytest.approx(0.0)

    def test_left_extrapolation(self, ou_model):
        vm, path, _ = zeta_t0(ou_model, -0.5)
        assert path == "endpoint"
        assert np.array(vm[0].atoms) == pytest.approx(np.array([[0.0, np.exp(-1.0)]]))

    def test_matern_endpoint_atoms(self, matern_model):
        vm, path, residuals = zeta_t0(matern_model, 2.0)
        assert path == "closed-form"
        assert np.array(vm[0].atoms) == pytest.approx(np.array([[1.0, 3.0 * np.exp(-2.0)]]))
        assert np.array(vm[1].atoms) == pytest.approx(np.array([[1.0, np.exp(-2.0)]]))
        assert target_residual(matern_model, vm, 2.0) <= 1e-8

    def test_endpoint_solve_matches_closed_form(self, matern_model):
        generic = endpoint_zeta_t0(matern_model, 2.0, 1)
        vm, _, _ = zeta_t0(matern_model, 2.0, 1)
        assert np.array(generic[0].atoms) == pytest.approx(np.array(vm[0].atoms))
        assert np.array(generic[1].atoms) == pytest.approx(np.array(vm[1].atoms))

    def test_order_above_smoothness(self, ou_model):
        with pytest.raises(SmoothnessError):
            zeta_t0(ou_model, 2.0, 1)


class TestContinuousBlup:
    """Assembled BLUPs and MSE"""

    def test_ou_value(self, ou_model):
        assert continuous_blup(ou_model, 2.0).rmse == pytest.approx(1.164262, abs=1e-6)

    def test_matern_value(self, matern_model):
        assert matern32_blup(matern_model, 2.0).rmse == pytest.approx(0.9985569896, abs=1e-8)

    def test_matern_blup_needs_matern(self, ou_model):
        with pytest.raises(ConfigError):
            matern32_blup(ou_model, 2.0)

    def test_brownian_extrapolation(self, bm_model):
        solution = continuous_blup(bm_model, 3.0)
        assert solution.mse == pytest.approx(1.0)
        assert solution.c == pytest.approx([0.0], abs=1e-12)

    def test_pinned_brownian(self, const1):
        model = ContinuousModel(brownian(), const1, (0.0, 1.0))
        assert continuous_blup(model, 2.0).mse == pytest.approx(1.0)

    def test_zero_mse_inside(self, ou_model):
        assert continuous_blup(ou_model, 0.3).mse == pytest.approx(0.0, abs=1e-10)

    def test_generic_markovian(self):
        model = ContinuousModel(markovian("u=exp(lt),v=exp(-lt)", 2.0), get_trend("const1"), (0.0, 1.0))
        assert continuous_blup(model, 2.0).rmse == pytest.approx(1.164262, abs=1e-6)

    def test_three_mse_paths_agree(self, matern_model):
        solution = continuous_blup(matern_model, 2.0)
        lemma = mse_of_measure(matern_model.kernel, matern_model.trend, solution.q_star, solution.target)
        assert reduced_kernel_mse(solution) == pytest.approx(solution.mse, abs=1e-8)
        assert lemma == pytest.approx(solution.mse, abs=1e-8)

    def test_linear_trend_paths_agree(self):
        model = ContinuousModel(exponential(2.0), get_trend("linear"), (0.0, 1.0))
        solution = continuous_blup(model, 1.5)
        lemma = mse_of_measure(model.kernel, model.trend, solution.q_star, solution.target)
        assert lemma == pytest.approx(solution.mse, abs=1e-8)
        assert reduced_kernel_mse(solution) == pytest.approx(solution.mse, abs=1e-8)

    @pytest.mark.parametrize("trend", ["const1", "linear"])
    @pytest.mark.parametrize("t0", [2.0, 1.4, -0.5])
    def test_matern_derivative_component_is_atomic(self, matern, trend, t0):
        model = ContinuousModel(matern, get_trend(trend), (0.0, 1.0))
        q1 = continuous_blup(model, t0).q_star[1]
        assert q1.density is None
        assert {x for x, _ in q1.atoms} <= {0.0, 1.0}

    def test_derivative_target(self, matern_model):
        solution = continuous_blup(matern_model, 2.0, 1)
        assert solution.target == PointTarget(2.0, 1)
        lemma = mse_of_measure(matern_model.kernel, matern_model.trend, solution.q_star, solution.target)
        assert lemma == pytest.approx(solution.mse, abs=1e-8)

    def test_biased_measure_rejected(self, ou_model):
        Q = VectorMeasure.of(SignedMeasure.dirac(1.0, 0.0, 1.0, 0.5))
        with pytest.raises(UnbiasednessError):
            mse_of_measure(ou_model.kernel, ou_model.trend, Q, PointTarget(2.0))


class TestIntegratedBrownian:
    """Closed form reported next to the evaluated MSE"""

    def test_printed_formula(self):
        assert ibm_printed_mse(1.0, 2.0) == pytest.approx(-1.0 / 3.0)

    def test_evaluated_mse(self, const1):
        model = ContinuousModel(integrated_brownian(), const1, (0.5, 1.0))
        solution = ibm_blup(model, 2.0)
        assert solution.mse == pytest.approx(1.0 / 3.0)
        assert solution.printed_mse == pytest.approx(-1.0 / 3.0)

    def test_kernel_checked(self, ou_model):
        with pytest.raises(ConfigError):
            ibm_blup(ou_model, 2.0)


class TestAverageTarget:

    def test_single_atom(self, ou_model):
        avg = continuous_blup_average(ou_model, AverageTarget(((2.0, 1.0),)))
        assert avg.mse == pytest.approx(continuous_blup(ou_model, 2.0).mse)

    def test_average_mse_by_measure(self, matern_model):
        nu = AverageTarget(((1.5, 0.5), (2.5, 0.5)))
        avg = continuous_blup_average(matern_model, nu)
        lemma = mse_of_measure(matern_model.kernel, matern_model.trend, avg.q_star, nu)
        assert lemma == pytest.approx(avg.mse, abs=1e-8)
