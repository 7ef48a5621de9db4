"""
Kriging Measures - Numerics
Gauss-Legendre quadrature and dense symmetric/bordered solves.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lu_factor, lu_solve, solve_triangular

from src.errors import ConfigError, NotPositiveDefiniteError, SingularSystemError


DEFAULT_ORDER = 16
MAX_ORDER = 64
SYMMETRY_TOL = 1e-10


# ============ QUADRATURE ============

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights on [a, b]"""
    a: float
    b: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    order: int

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """Apply the rule to a vectorized integrand"""
        if self.size == 0:
            return 0.0
        return float(np.dot(self.weights, g(self.nodes)))


@lru_cache(maxsize=None)
def _reference_nodes(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, order: int) -> QuadratureRule:
    """Gauss-Legendre rule with `order` nodes mapped onto [a, b]"""
    if not a < b:
        raise ConfigError(f"invalid interval [{a}, {b}]: need a < b")
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"quadrature order {order} outside [1, {MAX_ORDER}]")
    x, w = _reference_nodes(order)
    half = 0.5 * (b - a)
    nodes = half * x + 0.5 * (a + b)
    weights = half * w
    return QuadratureRule(a=a, b=b, nodes=nodes, weights=weights, order=order)


def default_panels(a: float, b: float, rate: float) -> int:
    """Panel policy: max(4, ceil(rate * (b - a)))"""
    return max(4, int(math.ceil(rate * (b - a))))


def composite_rule(a: float, b: float, order: int = DEFAULT_ORDER, panels: Optional[int] = None,
                   breakpoints: Iterable[float] = (), rate: float = 1.0) -> QuadratureRule:
    """
    Composite Gauss-Legendre rule on [a, b].

    Interior breakpoints always become panel edges so that kinks of the
    integrand (|t - s| kernels, atoms of another measure) never fall inside
    a panel. Degenerate intervals give an empty rule.
    """
    if b < a:
        raise ConfigError(f"invalid interval [{a}, {b}]: need a <= b")
    if b == a:
        empty = np.zeros(0)
        return QuadratureRule(a=a, b=b, nodes=empty, weights=empty, order=order)

    total = panels if panels is not None else default_panels(a, b, rate)
    span = b - a
    cuts = sorted({a, b} | {float(p) for p in breakpoints if a + 1e-14 * span < p < b - 1e-14 * span})

    nodes, weights = [], []
    for left, right in zip(cuts[:-1], cuts[1:]):
        pieces = max(1, int(math.ceil(total * (right - left) / span - 1e-9)))
        edges = np.linspace(left, right, pieces + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            rule = gauss_legendre(lo, hi, order)
            nodes.append(rule.nodes)
            weights.append(rule.weights)
    return QuadratureRule(a=a, b=b, nodes=np.concatenate(nodes), weights=np.concatenate(weights),
                          order=order)


# ============ LINEAR ALGEBRA ============

def check_symmetric(M: np.ndarray, name: str = "matrix") -> None:
    """Raise unless |M - M^T|_max <= 1e-10 |M|_max"""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {M.shape}")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > SYMMETRY_TOL * max(scale, 1e-300):
        raise ConfigError(f"{name} is not symmetric (|M - M^T|_max = {asym:.3e})")


class SpdFactor:
    """Cholesky factor of a symmetric positive definite matrix, reusable across solves"""

    def __init__(self, M: np.ndarray, name: str = "matrix"):
        M = np.asarray(M, dtype=float)
        check_symmetric(M, name)
        self.name = name
        self.matrix = M
        try:
            self._factor = cho_factor(M, lower=True, check_finite=True)
        except LinAlgError as exc:
            raise NotPositiveDefiniteError(
                f"{name} ({M.shape[0]}x{M.shape[0]}) is not positive definite: {exc}; "
                "check the design for duplicate sites"
            ) from exc
        logger.debug("factored {} of size {}", name, M.shape[0])

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def solve(self, B: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, np.asarray(B, dtype=float))

    def half_solve(self, B: np.ndarray) -> np.ndarray:
        """L^{-1} B for the lower factor L"""
        return solve_triangular(self._factor[0], np.asarray(B, dtype=float), lower=True)


def solve_spd(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve M Z = B for symmetric positive definite M; no jitter is applied"""
    factor = SpdFactor(M)
    Z = factor.solve(B)
    B_arr = np.asarray(B, dtype=float)
    scale = float(np.max(np.abs(B_arr))) if B_arr.size else 0.0
    residual = float(np.max(np.abs(factor.matrix @ Z - B_arr))) if B_arr.size else 0.0
    if residual > 1e-9 * max(scale, 1e-300):
        logger.warning("solve_spd residual {:.3e} above 1e-9 relative (ill-conditioned system)", residual)
    return Z


def solve_bordered(X: np.ndarray, Sigma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Solve [[0, X^T], [X, Sigma]] z = rhs with pivoted LU.

    The bordered matrix is symmetric but indefinite, so Cholesky does not apply.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    M = np.zeros((m + n, m + n))
    M[m:, :m] = X
    M[:m, m:] = X.T
    M[m:, m:] = Sigma
    lu, piv = lu_factor(M, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1e-300):
        raise SingularSystemError(f"bordered system of size {m + n} is singular")
    return lu_solve((lu, piv), np.asarray(rhs, dtype=float))
