"""
Kriging Measures - Errors
Exception hierarchy shared by the solvers, the config loader and the CLI.
"""

from typing import Optional, Sequence

import numpy as np


class BlupError(Exception):
    """Base class for every failure raised by this package"""


class ConfigError(BlupError, ValueError):
    """Invalid interval, order, tag, kernel kind or flag"""


class SmoothnessError(ConfigError):
    """Requested derivative order exceeds the kernel smoothness"""

    def __init__(self, kernel_name: str, order: int, smoothness: int):
        self.kernel_name = kernel_name
        self.order = order
        self.smoothness = smoothness
        super().__init__(
            f"derivative order {order} exceeds smoothness {smoothness} of kernel '{kernel_name}'"
        )


class NumericalError(BlupError):
    """A numerical invariant failed"""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky factorization failed; usually duplicate design sites"""


class SingularSystemError(NumericalError):
    """Trend not identifiable or bordered system singular"""


class UnbiasednessError(NumericalError):
    """A predictor violates the unbiasedness condition"""

    def __init__(self, gap: Sequence[float], tolerance: float):
        self.gap = np.asarray(gap, dtype=float)
        self.tolerance = tolerance
        super().__init__(
            f"unbiasedness gap {np.array2string(self.gap, precision=3)} exceeds {tolerance:g}"
        )


class ResidualCheckError(NumericalError):
    """Both the printed and the fallback measure failed the integral equation"""

    def __init__(self, what: str, printed: Optional[float], fallback: Optional[float], tolerance: float):
        self.what = what
        self.printed = printed
        self.fallback = fallback
        self.tolerance = tolerance
        super().__init__(
            f"{what}: residual check failed on both paths "
            f"(printed={printed!r}, fallback={fallback!r}, tolerance={tolerance:g})"
        )
