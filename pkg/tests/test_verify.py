"""
Kriging Measures - Verification Tests
The oracles themselves: residual scans, Monte Carlo, fine grids and perturbations.
"""

import numpy as np
import pytest

from src.blup_continuous import continuous_blup
from src.blup_discrete import discrete_blup, equidistant_design
from src.errors import ConfigError
from src.kernels import exponential, kernel_eval
from src.measures import SignedMeasure
from src.models import McConfig, get_trend
from src.verify import (CheckResult, fine_grid_limit, ibm_discrepancy, mc_mse, measure_perturbation_check,
                        mse_paths, perturbation_check, residual_scan, run_verification_suite)


class TestCheckResult:

    def test_str(self):
        text = str(CheckResult("demo", True, 1.5, reference=1.5, tolerance=1e-8, detail="ok"))
        assert text.startswith("[PASS] demo")
        assert "reference=1.5" in text
        assert str(CheckResult("demo", False, 0.0)).startswith("[FAIL]")


class TestResidualScan:

    def test_dirac_solves_its_own_equation(self, ou):
        m = SignedMeasure.dirac(0.4, 0.0, 1.0)
        grid = np.linspace(0.0, 1.0, 11)
        assert residual_scan(ou, m, lambda s, j: kernel_eval(ou, 0.4, s), grid) == pytest.approx(0.0, abs=1e-15)

    def test_wrong_measure_is_detected(self, ou):
        m = SignedMeasure.dirac(0.5, 0.0, 1.0)
        grid = np.linspace(0.0, 1.0, 11)
        assert residual_scan(ou, m, lambda s, j: kernel_eval(ou, 0.4, s), grid) > 1e-2


class TestMonteCarlo:
    """Simulated MSE against the analytic value"""

    def test_discrete_predictor(self, ou, const1):
        solution = discrete_blup(ou, const1, equidistant_design(4), 2.0)
        mean, se = mc_mse(ou, const1, [3.0], solution, solution.target, McConfig(sample_count=40_000, seed=1))
        assert abs(mean - solution.mse) <= 4.0 * se

    def test_continuous_measure(self, ou_model):
        solution = continuous_blup(ou_model, 2.0)
        mean, se = mc_mse(ou_model.kernel, ou_model.trend, [1.0], solution.q_star, solution.target,
                          McConfig(sample_count=40_000, seed=2))
        assert abs(mean - solution.mse) <= 4.0 * se

    @pytest.mark.parametrize("model_name", ["ou_model", "matern_model"])
    def test_continuous_blup_within_three_se(self, request, model_name):
        model = request.getfixturevalue(model_name)
        solution = continuous_blup(model, 2.0)
        mean, se = mc_mse(model.kernel, model.trend, [0.5], solution.q_star, solution.target,
                          McConfig(sample_count=100_000, seed=20240))
        assert abs(mean - solution.mse) <= 3.0 * se

    def test_standard_error_shrinks_with_samples(self, ou, const1):
        solution = discrete_blup(ou, const1, equidistant_design(4), 2.0)
        _, se_small = mc_mse(ou, const1, [0.0], solution, solution.target, McConfig(sample_count=20_000, seed=5))
        _, se_large = mc_mse(ou, const1, [0.0], solution, solution.target, McConfig(sample_count=40_000, seed=6))
        assert se_small / se_large == pytest.approx(np.sqrt(2.0), rel=0.2)

    def test_reproducible(self, ou, const1):
        solution = discrete_blup(ou, const1, equidistant_design(3), 2.0)
        cfg = McConfig(sample_count=5_000, seed=9, streams=3)
        assert mc_mse(ou, const1, [0.0], solution, solution.target, cfg) == mc_mse(
            ou, const1, [0.0], solution, solution.target, cfg)


class TestFineGrid:

    @pytest.mark.parametrize("model_name", ["ou_model", "matern_model"])
    def test_nested_designs_decrease_towards_continuous(self, request, model_name):
        model = request.getfixturevalue(model_name)
        # sites i/(N-1) for N = 2, 3, 5, 9, 17 are nested
        values = fine_grid_limit(model.kernel, model.trend, 2.0, [2, 3, 5, 9, 17])
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] >= continuous_blup(model, 2.0).mse - 1e-10

    def test_sequence_must_increase(self, ou, const1):
        with pytest.raises(ConfigError):
            fine_grid_limit(ou, const1, 2.0, [4, 2])


class TestPerturbation:
    """No unbiased perturbation improves on the BLUP"""

    def test_discrete(self):
        assert perturbation_check(exponential(2.0), get_trend("linear"), equidistant_design(6), 2.0, trials=20) == 0

    def test_continuous(self, matern_model):
        solution = continuous_blup(matern_model, 2.0)
        assert measure_perturbation_check(solution, trials=10) == 0


class TestSuite:

    def test_mse_paths(self, ou_model):
        assembled, reduced, lemma = mse_paths(continuous_blup(ou_model, 2.0))
        assert reduced == pytest.approx(assembled, abs=1e-8)
        assert lemma == pytest.approx(assembled, abs=1e-8)

    def test_ibm_report(self):
        result = ibm_discrepancy()
        assert result.passed
        assert result.value == pytest.approx(1.0 / 3.0)
        assert result.reference == pytest.approx(-1.0 / 3.0)
        assert "DISAGREE" in result.detail

    def test_default_suite_passes(self):
        results = run_verification_suite()
        assert results
        assert [str(r) for r in results if not r.passed] == []
