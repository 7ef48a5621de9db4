"""
Kriging Measures - Signed Measure Tests
"""

import numpy as np
import pytest

from src.errors import ConfigError
from src.kernels import brownian, exponential, kernel_eval, product
from src.measures import (ProductMeasure2D, SignedMeasure, VectorMeasure, axpy, integrate, kernel_bilinear,
                          kernel_integral, measure_record, product_kernel_integral, vector_record)


@pytest.fixture
def mixed():
    """2 delta_0 - delta_1 + (1 + t) dt on [0, 1]"""
    return SignedMeasure(0.0, 1.0, atoms=((0.0, 2.0), (1.0, -1.0)), density=lambda t: 1.0 + t)


class TestSignedMeasure:
    """Atoms plus density"""

    def test_atoms_merge(self):
        m = SignedMeasure(0.0, 1.0, atoms=((0.5, 1.0), (0.5, 2.0), (0.1, 1.0)))
        assert m.atoms == ((0.1, 1.0), (0.5, 3.0))
        assert m.weight_at(0.5) == 3.0
        assert m.weight_at(0.7) == 0.0

    def test_atom_outside_support(self):
        with pytest.raises(ConfigError):
            SignedMeasure(0.0, 1.0, atoms=((1.5, 1.0),))

    def test_total_mass(self, mixed):
        assert mixed.total_mass() == pytest.approx(2.0 - 1.0 + 1.5)

    def test_integrate_polynomial(self, mixed):
        # 2*0 - 1*1 + int_0^1 t (1 + t) dt
        assert integrate(mixed, lambda t: t) == pytest.approx(-1.0 + 0.5 + 1.0 / 3.0)

    def test_linear_combination(self, mixed):
        doubled = mixed + mixed
        assert doubled.total_mass() == pytest.approx(2 * mixed.total_mass())
        assert (mixed - mixed).total_mass() == pytest.approx(0.0)
        assert (3.0 * mixed).weight_at(0.0) == pytest.approx(6.0)

    def test_mismatched_support(self, mixed):
        with pytest.raises(ConfigError):
            mixed + SignedMeasure.zero(0.0, 2.0)

    def test_discretize_matches_integrate(self, mixed):
        x, w = mixed.discretize()
        assert float(np.dot(w, np.cos(x))) == pytest.approx(integrate(mixed, np.cos))

    def test_zero(self):
        assert SignedMeasure.zero(0.0, 1.0).is_zero
        assert SignedMeasure.dirac(0.5, 0.0, 1.0, 0.0).is_zero

    def test_record(self, mixed):
        record = measure_record(mixed)
        assert record["support"] == [0.0, 1.0]
        assert record["atoms"] == [[0.0, 2.0], [1.0, -1.0]]
        assert len(record["density_samples"]) > 0


class TestVectorMeasure:
    """Measures acting on (y, y', ...)"""

    def test_shared_support(self):
        with pytest.raises(ConfigError):
            VectorMeasure((SignedMeasure.zero(0.0, 1.0), SignedMeasure.zero(0.0, 2.0)))

    def test_axpy(self):
        a = VectorMeasure.of(SignedMeasure.dirac(0.0, 0.0, 1.0))
        b = VectorMeasure.of(SignedMeasure.dirac(1.0, 0.0, 1.0))
        out = axpy([2.0, -1.0], [a, b], VectorMeasure.zero(0, 0.0, 1.0))
        assert out[0].atoms == ((0.0, 2.0), (1.0, -1.0))

    def test_axpy_length_mismatch(self):
        with pytest.raises(ConfigError):
            axpy([1.0], [], VectorMeasure.zero(0, 0.0, 1.0))

    def test_record_per_component(self):
        vm = VectorMeasure.zero(1, 0.0, 1.0)
        assert len(vector_record(vm)) == 2


class TestKernelIntegrals:
    """Integrals of kernels against measures"""

    def test_dirac_gives_kernel(self):
        k = exponential(2.0)
        m = SignedMeasure.dirac(0.3, 0.0, 1.0, 2.0)
        assert kernel_integral(k, m, 1.5) == pytest.approx(2.0 * kernel_eval(k, 0.3, 1.5))

    def test_density_against_brownian(self):
        # int_0^1 min(t, s) dt at s = 0.5 is 0.5 - 0.125
        m = SignedMeasure(0.0, 1.0, density=lambda t: np.ones_like(t))
        assert kernel_integral(brownian(), m, 0.5) == pytest.approx(0.375, abs=1e-13)

    def test_bilinear_of_density(self):
        # int int min(t, s) dt ds over [0, 1]^2 = 1/3
        m = SignedMeasure(0.0, 1.0, density=lambda t: np.ones_like(t))
        assert kernel_bilinear(brownian(), m, m) == pytest.approx(1.0 / 3.0, abs=1e-12)


class TestProductMeasure:
    """Tensor measures on rectangles"""

    def test_tensor_mass(self):
        v1 = VectorMeasure.of(SignedMeasure.dirac(0.0, 0.0, 1.0, 2.0))
        v2 = VectorMeasure.of(SignedMeasure(0.0, 1.0, density=lambda t: np.ones_like(t)))
        pm = ProductMeasure2D.tensor(v1, v2)
        assert pm.patterns == [(0, 0)]
        assert pm.total_mass() == pytest.approx(2.0)
        assert (pm + pm.scaled(-0.5)).total_mass() == pytest.approx(1.0)

    def test_kernel_integral_factorizes(self):
        k = product(exponential(2.0), exponential(1.0))
        v1 = VectorMeasure.of(SignedMeasure.dirac(1.0, 0.0, 1.0))
        v2 = VectorMeasure.of(SignedMeasure.dirac(0.5, 0.0, 1.0, 3.0))
        pm = ProductMeasure2D.tensor(v1, v2)
        expected = 3.0 * kernel_eval(k, np.array([1.0, 0.5]), np.array([2.0, 2.0]))
        assert product_kernel_integral(k, pm, (2.0, 2.0)) == pytest.approx(expected)
