"""
Kriging Measures - BLUP Library
Best linear unbiased prediction from discrete and continuous observations,
with derivative observations and separable 2D kernels.
"""

__version__ = "1.0.0"

from src.kernels import (KernelKind, KernelSpec, brownian, exponential, integrated_brownian, kernel_deriv,
                         kernel_eval, markovian, matern32, product)
from src.models import (AverageTarget, BlupSolution, ClosedFormSolution, ContinuousModel, Design, McConfig,
                        PointTarget, ProductModel, Trend, get_trend)
from src.blup_discrete import DiscretePredictor, discrete_blup, discrete_blup_derivs, equidistant_design
from src.blup_continuous import continuous_blup, continuous_blup_average, continuous_blue
from src.product_field import ProductPredictor, design_family, mse_grid, product_blup, product_blup_derivs

__all__ = [
    '__version__',
    # Kernels
    'KernelKind', 'KernelSpec', 'brownian', 'exponential', 'integrated_brownian', 'kernel_deriv',
    'kernel_eval', 'markovian', 'matern32', 'product',
    # Models
    'AverageTarget', 'BlupSolution', 'ClosedFormSolution', 'ContinuousModel', 'Design', 'McConfig',
    'PointTarget', 'ProductModel', 'Trend', 'get_trend',
    # Solvers
    'DiscretePredictor', 'discrete_blup', 'discrete_blup_derivs', 'equidistant_design',
    'continuous_blup', 'continuous_blup_average', 'continuous_blue',
    'ProductPredictor', 'design_family', 'mse_grid', 'product_blup', 'product_blup_derivs',
]
