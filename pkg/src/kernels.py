"""
Kriging Measures - Kernels
Covariance kernel zoo with analytic partial derivatives.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple, Union

import numpy as np

from src.errors import ConfigError, SmoothnessError


Order = Union[int, Tuple[int, int]]


class KernelKind(Enum):
    """Kernel families"""
    EXPONENTIAL = "exponential"
    MATERN32 = "matern32"
    BROWNIAN = "bm"
    INTEGRATED_BROWNIAN = "ibm"
    MARKOVIAN = "markovian"
    PRODUCT = "product"


# Aliases accepted from configuration files and flags
KIND_ALIASES = {
    "exponential": KernelKind.EXPONENTIAL,
    "exp": KernelKind.EXPONENTIAL,
    "ou": KernelKind.EXPONENTIAL,
    "matern32": KernelKind.MATERN32,
    "matern": KernelKind.MATERN32,
    "bm": KernelKind.BROWNIAN,
    "brownian": KernelKind.BROWNIAN,
    "ibm": KernelKind.INTEGRATED_BROWNIAN,
    "integrated_brownian": KernelKind.INTEGRATED_BROWNIAN,
    "markovian": KernelKind.MARKOVIAN,
    "product": KernelKind.PRODUCT,
}


# ============ MARKOVIAN FACTORS ============

@dataclass(frozen=True)
class MarkovFactors:
    """u, v and their first two derivatives for K(t, s) = u(min) v(max)"""
    name: str
    u: Callable[[np.ndarray], np.ndarray]
    du: Callable[[np.ndarray], np.ndarray]
    d2u: Callable[[np.ndarray], np.ndarray]
    v: Callable[[np.ndarray], np.ndarray]
    dv: Callable[[np.ndarray], np.ndarray]
    d2v: Callable[[np.ndarray], np.ndarray]

    def q(self, t):
        return self.u(t) / self.v(t)

    def dq(self, t):
        v = self.v(t)
        return (self.du(t) * v - self.u(t) * self.dv(t)) / v ** 2

    def d2q(self, t):
        u, du, d2u = self.u(t), self.du(t), self.d2u(t)
        v, dv, d2v = self.v(t), self.dv(t), self.d2v(t)
        return (d2u * v - u * d2v) / v ** 2 - 2.0 * dv * (du * v - u * dv) / v ** 3


def brownian_factors() -> MarkovFactors:
    return MarkovFactors(
        name="u=t,v=1",
        u=lambda t: np.asarray(t, dtype=float) * 1.0,
        du=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        d2u=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        v=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        dv=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        d2v=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    )


def ou_factors(lam: float) -> MarkovFactors:
    return MarkovFactors(
        name="u=exp(lt),v=exp(-lt)",
        u=lambda t: np.exp(lam * np.asarray(t, dtype=float)),
        du=lambda t: lam * np.exp(lam * np.asarray(t, dtype=float)),
        d2u=lambda t: lam ** 2 * np.exp(lam * np.asarray(t, dtype=float)),
        v=lambda t: np.exp(-lam * np.asarray(t, dtype=float)),
        dv=lambda t: -lam * np.exp(-lam * np.asarray(t, dtype=float)),
        d2v=lambda t: lam ** 2 * np.exp(-lam * np.asarray(t, dtype=float)),
    )


MARKOV_CATALOGUE = {
    "u=t,v=1": lambda lam: brownian_factors(),
    "u=exp(lt),v=exp(-lt)": ou_factors,
}


# ============ KERNEL SPEC ============

@dataclass(frozen=True)
class KernelSpec:
    """Immutable covariance kernel descriptor"""
    kind: KernelKind
    lam: Optional[float] = None
    markov: Optional[MarkovFactors] = None
    left: Optional["KernelSpec"] = None
    right: Optional["KernelSpec"] = None

    def __post_init__(self):
        if self.kind in (KernelKind.EXPONENTIAL, KernelKind.MATERN32):
            if self.lam is None or not self.lam > 0:
                raise ConfigError(f"{self.kind.value} kernel needs lambda > 0, got {self.lam!r}")
        if self.kind == KernelKind.MARKOVIAN and self.markov is None:
            raise ConfigError("markovian kernel needs u and v factors")
        if self.kind == KernelKind.PRODUCT:
            if self.left is None or self.right is None:
                raise ConfigError("product kernel needs two factor kernels")
            if self.left.dim != 1 or self.right.dim != 1:
                raise ConfigError("product kernel factors must be one-dimensional")

    def __str__(self):
        if self.kind == KernelKind.PRODUCT:
            return f"product({self.left}, {self.right})"
        if self.kind == KernelKind.MARKOVIAN:
            return f"markovian({self.markov.name})"
        if self.lam is not None:
            return f"{self.kind.value}(lambda={self.lam:g})"
        return self.kind.value

    @property
    def dim(self) -> int:
        return 2 if self.kind == KernelKind.PRODUCT else 1

    @property
    def smoothness(self) -> Order:
        """Highest observable derivative order"""
        if self.kind == KernelKind.PRODUCT:
            return (self.left.smoothness, self.right.smoothness)
        if self.kind in (KernelKind.MATERN32, KernelKind.INTEGRATED_BROWNIAN):
            return 1
        return 0

    @property
    def is_markovian(self) -> bool:
        """Kernels of the form u(min(t, s)) v(max(t, s))"""
        return self.kind in (KernelKind.EXPONENTIAL, KernelKind.BROWNIAN, KernelKind.MARKOVIAN)

    def markov_factors(self) -> MarkovFactors:
        if self.kind == KernelKind.EXPONENTIAL:
            return ou_factors(self.lam)
        if self.kind == KernelKind.BROWNIAN:
            return brownian_factors()
        if self.kind == KernelKind.MARKOVIAN:
            return self.markov
        raise ConfigError(f"kernel {self} has no Markovian factorization")


def exponential(lam: float) -> KernelSpec:
    return KernelSpec(KernelKind.EXPONENTIAL, lam=float(lam))


def matern32(lam: float) -> KernelSpec:
    return KernelSpec(KernelKind.MATERN32, lam=float(lam))


def brownian() -> KernelSpec:
    return KernelSpec(KernelKind.BROWNIAN)


def integrated_brownian() -> KernelSpec:
    return KernelSpec(KernelKind.INTEGRATED_BROWNIAN)


def markovian(name: str, lam: float = 1.0) -> KernelSpec:
    if name not in MARKOV_CATALOGUE:
        raise ConfigError(f"unknown Markovian factors '{name}'; known: {sorted(MARKOV_CATALOGUE)}")
    return KernelSpec(KernelKind.MARKOVIAN, lam=lam, markov=MARKOV_CATALOGUE[name](lam))


def product(left: KernelSpec, right: KernelSpec) -> KernelSpec:
    return KernelSpec(KernelKind.PRODUCT, left=left, right=right)


# ============ EVALUATION ============

def _deriv_1d(k: KernelSpec, t, s, i: int, j: int) -> np.ndarray:
    smooth = k.smoothness
    if i > smooth or j > smooth or i < 0 or j < 0:
        raise SmoothnessError(str(k), max(i, j), smooth)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)

    if k.kind == KernelKind.EXPONENTIAL:
        return np.exp(-k.lam * np.abs(t - s))

    if k.kind == KernelKind.MATERN32:
        lam = k.lam
        d = t - s
        r = np.abs(d)
        e = np.exp(-lam * r)
        if (i, j) == (0, 0):
            return (1.0 + lam * r) * e
        if (i, j) == (1, 0):
            return -lam ** 2 * d * e
        if (i, j) == (0, 1):
            return lam ** 2 * d * e
        return lam ** 2 * (1.0 - lam * r) * e

    if k.kind == KernelKind.BROWNIAN:
        return np.minimum(t, s)

    if k.kind == KernelKind.INTEGRATED_BROWNIAN:
        lo = np.minimum(t, s)
        hi = np.maximum(t, s)
        if (i, j) == (0, 0):
            return lo ** 2 * (3.0 * hi - lo) / 6.0
        if (i, j) == (1, 0):
            return np.where(t <= s, t * s - t ** 2 / 2.0, s ** 2 / 2.0)
        if (i, j) == (0, 1):
            return np.where(s <= t, t * s - s ** 2 / 2.0, t ** 2 / 2.0)
        return lo

    if k.kind == KernelKind.MARKOVIAN:
        mf = k.markov
        return np.where(t <= s, mf.u(t) * mf.v(s), mf.u(s) * mf.v(t))

    raise ConfigError(f"kernel {k} is not one-dimensional")


def _as_pattern(order: Order) -> Tuple[int, int]:
    if isinstance(order, (int, np.integer)):
        if order != 0:
            raise ConfigError(f"product kernels need a derivative pattern, got {order}")
        return (0, 0)
    if len(order) != 2:
        raise ConfigError(f"derivative pattern must have two entries, got {order}")
    return (int(order[0]), int(order[1]))


def kernel_deriv(k: KernelSpec, t, s, i: Order = 0, j: Order = 0):
    """
    Partial derivative d^{i+j} K / dt^i ds^j, vectorized over t and s.

    For product kernels t and s have a trailing axis of length 2 and i, j are
    patterns (i1, i2); the result is the product of the factor derivatives.
    """
    if k.kind == KernelKind.PRODUCT:
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        if t.shape[-1:] != (2,) or s.shape[-1:] != (2,):
            raise ConfigError("product kernel expects 2D points")
        i1, i2 = _as_pattern(i)
        j1, j2 = _as_pattern(j)
        out = _deriv_1d(k.left, t[..., 0], s[..., 0], i1, j1) * _deriv_1d(k.right, t[..., 1], s[..., 1], i2, j2)
    else:
        if not isinstance(i, (int, np.integer)) or not isinstance(j, (int, np.integer)):
            raise ConfigError(f"one-dimensional kernel {k} takes integer derivative orders")
        out = _deriv_1d(k, t, s, int(i), int(j))
    return float(out) if np.ndim(out) == 0 else out


def kernel_eval(k: KernelSpec, t, s):
    """K(t, s)"""
    zero = (0, 0) if k.kind == KernelKind.PRODUCT else 0
    return kernel_deriv(k, t, s, zero, zero)


# ============ REDUCED KERNEL ============

class ReducedKernel:
    """
    Covariance of the residual process y - f^T theta_hat.

    With cross=None this is K(t, s) - f(t)^T D f(s), which holds on the
    observation set. Outside it pass cross(t, i), the BLUE cross-covariance
    d^i/dt^i Cov(y(t), theta_hat).
    """

    def __init__(self, k: KernelSpec, trend, D, cross: Optional[Callable] = None):
        D = np.atleast_2d(np.asarray(D, dtype=float))
        if D.shape != (trend.m, trend.m):
            raise ConfigError(f"D has shape {D.shape}, trend has {trend.m} components")
        if np.max(np.abs(D - D.T), initial=0.0) > 1e-10 * max(np.max(np.abs(D), initial=0.0), 1e-300):
            raise ConfigError("D must be symmetric")
        self.kernel = k
        self.trend = trend
        self.D = D
        self.cross = cross

    def deriv(self, t, s, i: int = 0, j: int = 0):
        ft = self.trend.value(t, i)
        fs = self.trend.value(s, j)
        base = kernel_deriv(self.kernel, t, s, i, j)
        quad = np.einsum("a...,ab,b...->...", ft, self.D, fs)
        if self.cross is None:
            out = base - quad
        else:
            gt = self.cross(t, i)
            gs = self.cross(s, j)
            out = base - np.einsum("a...,a...->...", ft, gs) - np.einsum("a...,a...->...", gt, fs) + quad
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, t, s):
        return self.deriv(t, s, 0, 0)


def reduced_kernel(k: KernelSpec, trend, D, cross: Optional[Callable] = None) -> ReducedKernel:
    return ReducedKernel(k, trend, D, cross)
