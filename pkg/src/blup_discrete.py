"""
Kriging Measures - Discrete BLUP
BLUE and BLUP from finitely many observations of y and its derivatives,
for 1D designs and 2D product-kernel designs.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.errors import ConfigError, NotPositiveDefiniteError, NumericalError, SingularSystemError, UnbiasednessError
from src.kernels import KernelSpec, Order, kernel_deriv
from src.models import AverageTarget, BlupSolution, Design, PointTarget, Target, Trend
from src.numerics import SpdFactor, solve_bordered


MSE_SLACK = 1e-12
UNBIASED_TOL = 1e-8


def zero_pattern(design: Design) -> Order:
    return 0 if design.dim == 1 else (0, 0)


# ============ MATRICES ============

def gram_matrix(k: KernelSpec, design: Design) -> np.ndarray:
    """Block covariance of the flattened observation vector"""
    n = design.n_obs
    Sigma = np.empty((n, n))
    row = 0
    for pi, idx_i in design.blocks:
        col = 0
        for pj, idx_j in design.blocks:
            block = kernel_deriv(k, design.sites[idx_i][:, None], design.sites[idx_j][None, :], pi, pj)
            Sigma[row:row + len(idx_i), col:col + len(idx_j)] = block
            col += len(idx_j)
        row += len(idx_i)
    return 0.5 * (Sigma + Sigma.T)


def design_matrix(trend: Trend, design: Design) -> np.ndarray:
    """X: row n holds f^{(pattern)}(site) for observation n"""
    rows = [trend.value(design.sites[idx], pattern).T for pattern, idx in design.blocks]
    return np.vstack(rows)


def target_vector(k: KernelSpec, design: Design, t0, p: Order) -> np.ndarray:
    """Covariances between the observations and y^(p)(t0)"""
    t0 = np.asarray(t0, dtype=float)
    parts = [np.atleast_1d(kernel_deriv(k, design.sites[idx], t0, pattern, p)) for pattern, idx in design.blocks]
    return np.concatenate(parts)


def _clamp_mse(mse: float, scale: float) -> float:
    if mse < 0.0:
        if mse >= -MSE_SLACK * max(1.0, abs(scale)):
            return 0.0
        raise NumericalError(f"negative mse {mse:.3e}: inconsistent inputs or ill-conditioned design")
    return mse


# ============ PREDICTOR ============

class DiscretePredictor:
    """
    Factorizes the design covariance once and serves many targets.

    Read-only after construction, so one instance may be shared across threads.
    """

    def __init__(self, kernel: KernelSpec, trend: Trend, design: Design, jitter: float = 0.0):
        if jitter < 0:
            raise ConfigError("jitter must be >= 0")
        self.kernel = kernel
        self.trend = trend
        self.design = design
        Sigma = gram_matrix(kernel, design)
        if jitter:
            logger.warning("adding diagonal jitter {:g} to the design covariance", jitter)
            Sigma = Sigma + jitter * np.eye(len(Sigma))
        self.Sigma = Sigma
        self.factor = SpdFactor(Sigma, name=f"covariance of design {design.descriptor or design.n_obs}")
        self.X = design_matrix(trend, design)
        self.SiX = self.factor.solve(self.X)
        C = self.X.T @ self.SiX
        C = 0.5 * (C + C.T)
        try:
            c_factor = SpdFactor(C, name="C = X^T Sigma^-1 X")
        except NotPositiveDefiniteError as exc:
            raise SingularSystemError("C = X^T Sigma^-1 X is singular: trend not identifiable from the design") from exc
        self.C = C
        self.D = c_factor.solve(np.eye(len(C)))
        self.D = 0.5 * (self.D + self.D.T)
        logger.debug("discrete predictor ready: {} observations, m={}", design.n_obs, trend.m)

    def blue(self) -> Tuple[np.ndarray, np.ndarray]:
        """(weights with weights^T X = I, D)"""
        return self.SiX @ self.D, self.D

    def _solve(self, kt: np.ndarray, ft: np.ndarray, ktt: float, target: Target,
               exact: Optional[int] = None) -> BlupSolution:
        a = self.factor.solve(kt)
        c = ft - self.X.T @ a
        if exact is not None:
            w = np.zeros(self.design.n_obs)
            w[exact] = 1.0
            mse = 0.0
        else:
            w = a + self.SiX @ (self.D @ c)
            h = self.factor.half_solve(kt)
            mse = _clamp_mse(float(ktt - h @ h + c @ self.D @ c), ktt)
        gap = self.X.T @ w - ft
        return BlupSolution(weights=w, mse=mse, D=self.D, c=c, gap=gap, design=self.design,
                            target=target, kernel=self.kernel, trend=self.trend)

    def predict(self, t0, p: Optional[Order] = None) -> BlupSolution:
        p = zero_pattern(self.design) if p is None else p
        kt = target_vector(self.kernel, self.design, t0, p)
        ft = np.atleast_1d(self.trend.value(np.asarray(t0, dtype=float), p)).reshape(-1)
        ktt = float(kernel_deriv(self.kernel, np.asarray(t0, dtype=float), np.asarray(t0, dtype=float), p, p))
        exact = self.design.find_site(t0, p)
        return self._solve(kt, ft, ktt, PointTarget(t0, p), exact)

    def predict_average(self, nu: AverageTarget) -> BlupSolution:
        """Average of the point BLUPs with respect to nu, with the averaged MSE"""
        p = zero_pattern(self.design)
        points = [np.asarray(x, dtype=float) for x, _ in nu.atoms]
        w_nu = np.array([w for _, w in nu.atoms], dtype=float)
        kt = sum(w * target_vector(self.kernel, self.design, x, p) for x, w in zip(points, w_nu))
        ft = sum(w * np.atleast_1d(self.trend.value(x, p)).reshape(-1) for x, w in zip(points, w_nu))
        ktt = float(sum(wi * wj * kernel_deriv(self.kernel, xi, xj, p, p)
                        for xi, wi in zip(points, w_nu) for xj, wj in zip(points, w_nu)))
        solution = self._solve(kt, ft, ktt, nu)
        solution.weights = sum(w * self.predict(x).weights for x, w in zip(points, w_nu))
        solution.gap = self.X.T @ solution.weights - ft
        return solution


# ============ OPERATIONS ============

def discrete_blup(k: KernelSpec, f: Trend, d: Design, t0, jitter: float = 0.0) -> BlupSolution:
    """BLUP of y(t0)"""
    return DiscretePredictor(k, f, d, jitter).predict(t0)


def discrete_blup_derivs(k: KernelSpec, f: Trend, d: Design, t0, p: Order, jitter: float = 0.0) -> BlupSolution:
    """BLUP of the p-th derivative (pattern in 2D) at t0 from value and derivative observations"""
    return DiscretePredictor(k, f, d, jitter).predict(t0, p)


def discrete_blup_average(k: KernelSpec, f: Trend, d: Design, nu: AverageTarget,
                          jitter: float = 0.0) -> BlupSolution:
    return DiscretePredictor(k, f, d, jitter).predict_average(nu)


def blue_discrete(k: KernelSpec, f: Trend, d: Design) -> Tuple[np.ndarray, np.ndarray]:
    """BLUE weights (n_obs x m) and D = (X^T Sigma^-1 X)^-1"""
    return DiscretePredictor(k, f, d).blue()


def kriging_weights(k: KernelSpec, f: Trend, d: Design, t0, p: Optional[Order] = None) -> np.ndarray:
    """Weights of f(t0)^T theta_BLUE + K_t0^T Sigma^-1 (Y - X theta_BLUE)"""
    pred = DiscretePredictor(k, f, d)
    p = zero_pattern(d) if p is None else p
    kt = target_vector(k, d, t0, p)
    ft = np.atleast_1d(f.value(np.asarray(t0, dtype=float), p)).reshape(-1)
    theta_weights, _ = pred.blue()
    residual_weights = pred.factor.solve(kt)
    return theta_weights @ ft + residual_weights - theta_weights @ (pred.X.T @ residual_weights)


def bordered_solution(k: KernelSpec, f: Trend, d: Design, t0, p: Optional[Order] = None) -> Tuple[np.ndarray, float]:
    """Weights and MSE from the bordered system [[0, X^T], [X, Sigma]]"""
    p = zero_pattern(d) if p is None else p
    X = design_matrix(f, d)
    Sigma = gram_matrix(k, d)
    kt = target_vector(k, d, t0, p)
    ft = np.atleast_1d(f.value(np.asarray(t0, dtype=float), p)).reshape(-1)
    rhs = np.concatenate([ft, kt])
    z = solve_bordered(X, Sigma, rhs)
    ktt = float(kernel_deriv(k, np.asarray(t0, dtype=float), np.asarray(t0, dtype=float), p, p))
    mse = _clamp_mse(float(ktt - rhs @ z), ktt)
    return z[len(ft):], mse


def mse_of_weights(k: KernelSpec, f: Trend, d: Design, weights: Sequence[float], target: Target) -> float:
    """
    MSE of any unbiased linear predictor: K(t0,t0) - 2 w^T K_t0 + w^T Sigma w.

    Raises UnbiasednessError when w^T X differs from the target trend.
    """
    w = np.asarray(weights, dtype=float)
    X = design_matrix(f, d)
    Sigma = gram_matrix(k, d)
    if isinstance(target, PointTarget):
        atoms = [(np.asarray(target.t0, dtype=float), 1.0)]
        p = target.p
    else:
        atoms = [(np.asarray(x, dtype=float), wt) for x, wt in target.atoms]
        p = zero_pattern(d)
    kt = sum(wt * target_vector(k, d, x, p) for x, wt in atoms)
    ft = sum(wt * np.atleast_1d(f.value(x, p)).reshape(-1) for x, wt in atoms)
    ktt = float(sum(wi * wj * kernel_deriv(k, xi, xj, p, p) for xi, wi in atoms for xj, wj in atoms))
    gap = X.T @ w - ft
    if np.max(np.abs(gap)) > UNBIASED_TOL * max(1.0, float(np.max(np.abs(ft)))):
        raise UnbiasednessError(gap, UNBIASED_TOL)
    return float(ktt - 2.0 * w @ kt + w @ Sigma @ w)


# ============ DESIGNS ============

def equidistant_design(n: int, interval: Tuple[float, float] = (0.0, 1.0), orders: Sequence[int] = (0,),
                       descriptor: str = "") -> Design:
    """N equidistant sites i/(N-1) mapped to the interval, each observing `orders`"""
    a, b = interval
    sites = a + (b - a) * np.arange(n) / (n - 1) if n > 1 else np.array([a])
    return Design(sites, tuple(tuple(orders) for _ in range(n)), descriptor or f"equidistant N={n}")
