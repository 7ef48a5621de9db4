"""
Kriging Measures - Data Model Tests
"""

import numpy as np
import pytest

from src.errors import ConfigError
from src.kernels import exponential, matern32
from src.models import (AverageTarget, ContinuousModel, Design, McConfig, PointTarget, ProductModel,
                        get_trend, pattern_rank)


class TestTrend:
    """Regression functions"""

    def test_catalogue(self):
        assert get_trend("quadratic").m == 3
        with pytest.raises(ConfigError):
            get_trend("cubic")

    def test_derivatives(self):
        f = get_trend("quadratic")
        assert f.value(2.0) == pytest.approx([1.0, 2.0, 4.0])
        assert f.value(2.0, 1) == pytest.approx([0.0, 1.0, 4.0])
        assert f.value(2.0, 2) == pytest.approx([0.0, 0.0, 2.0])

    def test_vectorized_shape(self):
        assert get_trend("linear").value(np.linspace(0, 1, 5)).shape == (2, 5)

    def test_2d_constant_only(self):
        f = get_trend("const1", dim=2)
        assert f.value(np.array([0.3, 0.4])) == pytest.approx([1.0])
        assert f.value(np.array([0.3, 0.4]), (1, 0)) == pytest.approx([0.0])
        with pytest.raises(ConfigError):
            get_trend("linear", dim=2)


class TestDesign:
    """Observation layouts"""

    def test_orders_normalized(self):
        d = Design(np.array([0.0, 1.0]), ((1, 0, 0), (0,)))
        assert d.orders == ((0, 1), (0,))
        assert d.n_obs == 3
        assert d.observations == [(0, 0), (1, 0), (0, 1)]

    def test_find_site(self):
        d = Design(np.array([0.0, 0.5, 1.0]), ((0,), (0,), (0, 1)))
        assert d.find_site(0.5, 0) == 1
        assert d.find_site(1.0, 1) == 3
        assert d.find_site(0.5, 1) is None

    def test_2d_patterns(self):
        d = Design(np.array([[0.0, 0.0], [1.0, 1.0]]), (((1, 1), (0, 0)), ((0, 0),)))
        assert d.dim == 2
        assert d.patterns == [(0, 0), (1, 1)]
        assert pattern_rank((0, 1)) == 2

    def test_rejects_empty_order_set(self):
        with pytest.raises(ConfigError):
            Design(np.array([0.0]), ((),))

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ConfigError):
            Design(np.array([0.0, 1.0]), ((0,),))


class TestTargets:

    def test_point_str(self):
        assert str(PointTarget(2.0)) == "y(2.0)"
        assert str(PointTarget(2.0, 1)) == "y^(1)(2.0)"

    def test_average_needs_atoms(self):
        with pytest.raises(ConfigError):
            AverageTarget(())


class TestModels:
    """Continuous and product models validate their inputs"""

    def test_interval_order(self):
        with pytest.raises(ConfigError):
            ContinuousModel(exponential(2.0), get_trend("const1"), (1.0, 0.0))

    def test_default_orders(self):
        assert ContinuousModel(matern32(2.0), get_trend("const1"), (0.0, 1.0)).orders == (0, 1)
        assert ContinuousModel(exponential(2.0), get_trend("const1"), (0.0, 1.0)).orders == (0,)

    def test_orders_above_smoothness(self):
        with pytest.raises(ConfigError):
            ContinuousModel(exponential(2.0), get_trend("const1"), (0.0, 1.0), orders=(0, 1))

    def test_product_derivatives_need_smooth_factors(self):
        with pytest.raises(ConfigError):
            ProductModel(exponential(2.0), exponential(2.0), derivatives=True)
        assert ProductModel(matern32(2.0), matern32(2.0), derivatives=True).kernel.dim == 2

    def test_mc_config_validation(self):
        with pytest.raises(ConfigError):
            McConfig(sample_count=0)
        with pytest.raises(ConfigError):
            McConfig(streams=0)
