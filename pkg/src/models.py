"""
Kriging Measures - Data Models
Defines the modelling entities: Trend, Design, targets, models and solutions.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import eigvalsh

from src.errors import ConfigError
from src.kernels import KernelSpec, Order, product


PATTERNS_2D = ((0, 0), (1, 0), (0, 1), (1, 1))
SITE_TOL = 1e-12


def pattern_rank(pattern: Order) -> int:
    """Position of a derivative pattern in the flattening order"""
    if isinstance(pattern, (int, np.integer)):
        return int(pattern)
    return PATTERNS_2D.index(tuple(pattern))


def _normalize(pattern: Order) -> Order:
    if isinstance(pattern, (int, np.integer)):
        return int(pattern)
    return (int(pattern[0]), int(pattern[1]))


# ============ TREND ============

@dataclass(frozen=True)
class Trend:
    """Regression functions f = (f_1, ..., f_m) with exact derivatives"""
    name: str
    basis: Tuple[Polynomial, ...]
    dim: int = 1

    @property
    def m(self) -> int:
        return len(self.basis)

    def value(self, t, order: Order = 0) -> np.ndarray:
        """f^{(order)}(t) with shape (m,) + shape(t) (2D: shape(t)[:-1])"""
        if self.dim == 2:
            t = np.asarray(t, dtype=float)
            if t.shape[-1:] != (2,):
                raise ConfigError("two-dimensional trend expects 2D points")
            pattern = tuple(order) if not isinstance(order, (int, np.integer)) else (int(order), 0)
            level = 1.0 if pattern == (0, 0) else 0.0
            return np.full((1,) + t.shape[:-1], level)
        if not isinstance(order, (int, np.integer)) or order < 0:
            raise ConfigError(f"trend derivative order must be a non-negative int, got {order!r}")
        t = np.asarray(t, dtype=float)
        return np.stack([np.broadcast_to(p.deriv(order)(t) if order else p(t), t.shape) for p in self.basis]).astype(float)

    def __str__(self):
        return self.name


def _poly(*coef: float) -> Polynomial:
    return Polynomial(np.asarray(coef, dtype=float))


TREND_CATALOGUE: Dict[str, Trend] = {
    "const1": Trend("const1", (_poly(1.0),)),
    "t": Trend("t", (_poly(0.0, 1.0),)),
    "t2": Trend("t2", (_poly(0.0, 0.0, 1.0),)),
    "linear": Trend("linear", (_poly(1.0), _poly(0.0, 1.0))),
    "quadratic": Trend("quadratic", (_poly(1.0), _poly(0.0, 1.0), _poly(0.0, 0.0, 1.0))),
}

CONSTANT_2D = Trend("const1", (_poly(1.0),), dim=2)


def get_trend(name: str, dim: int = 1) -> Trend:
    if dim == 2:
        if name != "const1":
            raise ConfigError("two-dimensional models support the constant trend only")
        return CONSTANT_2D
    if name not in TREND_CATALOGUE:
        raise ConfigError(f"unknown trend '{name}'; known: {sorted(TREND_CATALOGUE)}")
    return TREND_CATALOGUE[name]


# ============ DESIGN ============

@dataclass(frozen=True, eq=False)
class Design:
    """Observation sites, each with the set of derivative orders observed there"""
    sites: np.ndarray
    orders: Tuple[Tuple[Order, ...], ...]
    descriptor: str = ""

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=float)
        if not (sites.ndim == 1 or (sites.ndim == 2 and sites.shape[1] == 2)):
            raise ConfigError(f"design sites must have shape (n,) or (n, 2), got {sites.shape}")
        if len(self.orders) != len(sites):
            raise ConfigError(f"{len(sites)} sites but {len(self.orders)} derivative sets")
        if len(sites) == 0:
            raise ConfigError("design has no sites")
        normalized = []
        for k, orders in enumerate(self.orders):
            if not orders:
                raise ConfigError(f"site {k} observes nothing")
            normalized.append(tuple(sorted({_normalize(p) for p in orders}, key=pattern_rank)))
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "orders", tuple(normalized))

    @property
    def dim(self) -> int:
        return 1 if self.sites.ndim == 1 else 2

    @property
    def size(self) -> int:
        return len(self.sites)

    @cached_property
    def patterns(self) -> List[Order]:
        """Observed patterns in flattening order"""
        seen = {p for orders in self.orders for p in orders}
        return sorted(seen, key=pattern_rank)

    @cached_property
    def blocks(self) -> List[Tuple[Order, np.ndarray]]:
        """(pattern, site indices) per pattern, pattern-major then site order"""
        out = []
        for pattern in self.patterns:
            idx = [k for k, orders in enumerate(self.orders) if pattern in orders]
            out.append((pattern, np.asarray(idx, dtype=int)))
        return out

    @cached_property
    def observations(self) -> List[Tuple[int, Order]]:
        """Flattened (site index, pattern) list"""
        return [(int(k), pattern) for pattern, idx in self.blocks for k in idx]

    @property
    def n_obs(self) -> int:
        return len(self.observations)

    def max_order(self) -> int:
        return max(pattern_rank(p) if self.dim == 1 else max(p) for p in self.patterns)

    def find_site(self, t0, pattern: Order) -> Optional[int]:
        """Flattened index of an observation of `pattern` at t0, if any"""
        t0 = np.asarray(t0, dtype=float)
        for n, (k, p) in enumerate(self.observations):
            if p == pattern and np.all(np.abs(self.sites[k] - t0) <= SITE_TOL):
                return n
        return None


# ============ TARGETS ============

@dataclass(frozen=True)
class PointTarget:
    """Predict the p-th derivative (pattern in 2D) at t0"""
    t0: Any
    p: Order = 0

    def __str__(self):
        return f"y^({self.p})({self.t0})" if self.p not in (0, (0, 0)) else f"y({self.t0})"


@dataclass(frozen=True)
class AverageTarget:
    """Predict the integral of y against a finite atomic measure nu"""
    atoms: Tuple[Tuple[Any, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ConfigError("averaging measure nu has no atoms")

    def __str__(self):
        return " + ".join(f"{w:g}*y({x})" for x, w in self.atoms)


Target = Union[PointTarget, AverageTarget]


# ============ SOLUTIONS ============

@dataclass
class BlupSolution:
    """Discrete BLUP: weights over the flattened observation vector"""
    weights: np.ndarray
    mse: float
    D: np.ndarray
    c: np.ndarray
    gap: np.ndarray
    design: Design
    target: Target
    kernel: KernelSpec
    trend: Trend

    @property
    def rmse(self) -> float:
        return float(np.sqrt(self.mse))

    def weight_rows(self) -> List[Tuple[Any, Order, float]]:
        return [(self.design.sites[k], pattern, float(w))
                for (k, pattern), w in zip(self.design.observations, self.weights)]


@dataclass(frozen=True)
class ContinuousModel:
    """Continuous observation of y and its derivatives on [A, B]"""
    kernel: KernelSpec
    trend: Trend
    interval: Tuple[float, float]
    orders: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        A, B = (float(x) for x in self.interval)
        if not A < B:
            raise ConfigError(f"invalid interval [{A}, {B}]: need A < B")
        if self.kernel.dim != 1:
            raise ConfigError("continuous model needs a one-dimensional kernel")
        object.__setattr__(self, "interval", (A, B))
        q = self.kernel.smoothness
        orders = tuple(range(q + 1)) if self.orders is None else tuple(sorted(set(self.orders)))
        if not orders or orders[0] < 0 or orders[-1] > q:
            raise ConfigError(f"observed orders {orders} must lie in 0..{q} for kernel {self.kernel}")
        object.__setattr__(self, "orders", orders)

        nodes = np.linspace(A, B, 50)
        F = self.trend.value(nodes)
        if eigvalsh(F @ F.T).min() <= 1e-10:
            raise ConfigError(f"trend '{self.trend}' is not linearly independent on [{A}, {B}]")

        if self.kernel.is_markovian:
            mf = self.kernel.markov_factors()
            if np.any(mf.v(nodes) == 0):
                raise ConfigError(f"v vanishes on [{A}, {B}]")
            if np.any(mf.dq(nodes) <= 0):
                raise ConfigError(f"q = u/v is not strictly increasing on [{A}, {B}]")

    @property
    def A(self) -> float:
        return self.interval[0]

    @property
    def B(self) -> float:
        return self.interval[1]

    @property
    def q(self) -> int:
        return self.kernel.smoothness


@dataclass(frozen=True)
class ProductModel:
    """Location-scale field on a rectangle with a separable kernel"""
    left: KernelSpec
    right: KernelSpec
    domain: Tuple[Tuple[float, float], Tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0))
    derivatives: bool = False

    def __post_init__(self):
        for k in (self.left, self.right):
            if k.dim != 1:
                raise ConfigError("product factors must be one-dimensional")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ConfigError(f"invalid domain side [{lo}, {hi}]")
        if self.derivatives and (self.left.smoothness < 1 or self.right.smoothness < 1):
            raise ConfigError("derivative mode needs once-differentiable factor kernels")

    @property
    def kernel(self) -> KernelSpec:
        return product(self.left, self.right)

    @property
    def trend(self) -> Trend:
        return CONSTANT_2D


@dataclass
class ClosedFormSolution:
    """Continuous BLUP: measures, BLUE quantities and MSE"""
    model: Any
    target: Target
    zeta_t0: Any
    G: Tuple[Any, ...]
    C: Optional[np.ndarray]
    D: np.ndarray
    c: np.ndarray
    q_star: Any
    mse: float
    zeta_path: str = "closed-form"
    printed_mse: Optional[float] = None
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def rmse(self) -> float:
        return float(np.sqrt(max(self.mse, 0.0)))


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings; the discretization is completed from the predictor support"""
    sample_count: int = 100_000
    seed: int = 42
    streams: int = 4
    discretization: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.sample_count < 1:
            raise ConfigError("sample_count must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.streams < 1:
            raise ConfigError("streams must be positive")
