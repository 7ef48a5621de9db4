"""
Kriging Measures - Product Field
Location-scale prediction on a rectangle with a separable kernel: continuous
BLUP from tensor products of 1D measures, the xi design families and MSE
surface grids.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.blup_continuous import BlueMeasures, continuous_blue, zeta_t0
from src.blup_discrete import DiscretePredictor, equidistant_design
from src.errors import ConfigError, NumericalError, UnbiasednessError
from src.kernels import KernelSpec, kernel_deriv
from src.measures import ProductMeasure2D, product_kernel_bilinear, product_kernel_integral
from src.models import (PATTERNS_2D, BlupSolution, ClosedFormSolution, ContinuousModel, Design,
                        PointTarget, ProductModel, get_trend)


MSE_SLACK = 1e-10
UNBIASED_TOL = 1e-8
DEFAULT_REGION = ((0.5, 2.0), (0.5, 2.0))
DEFAULT_RESOLUTION = 61

ONE_DIM_TAGS = ("xi_N_0", "xi_N_2", "xi_N_N")
TWO_DIM_TAGS = ("xi_N2_0_0_0", "xi_N2_4_4_4", "xi_N2_N2_N2_0", "xi_N2_4N-4_4N-4_4N-4", "xi_N2_N2_N2_N2")
DESIGN_TAGS = ONE_DIM_TAGS + TWO_DIM_TAGS


# ============ CONTINUOUS PRODUCT BLUP ============

class ProductPredictor:
    """
    Continuous BLUP on a product set.

    The factor BLUE measures are computed once; predict() only builds the
    target measures, so one instance serves a whole grid.
    """

    def __init__(self, model: ProductModel):
        self.model = model
        self.kernel = model.kernel
        self.factors: List[ContinuousModel] = []
        for k, side in zip((model.left, model.right), model.domain):
            orders = tuple(range(k.smoothness + 1)) if model.derivatives else (0,)
            self.factors.append(ContinuousModel(k, get_trend("const1"), side, orders))
        self.blues: List[BlueMeasures] = [continuous_blue(m) for m in self.factors]
        if any(b.pinned for b in self.blues):
            raise NumericalError("product BLUE needs non-degenerate factor BLUEs")
        self.G = ProductMeasure2D.tensor(self.blues[0].G[0], self.blues[1].G[0])
        self.C = float(self.blues[0].C[0, 0] * self.blues[1].C[0, 0])
        self.D = float(self.blues[0].D[0, 0] * self.blues[1].D[0, 0])
        logger.debug("product BLUE for {}: C={:.10g}, D={:.10g}", self.kernel, self.C, self.D)

    def predict(self, T: Sequence[float]) -> ClosedFormSolution:
        T = (float(T[0]), float(T[1]))
        parts = [zeta_t0(m, t) for m, t in zip(self.factors, T)]
        zeta_T = ProductMeasure2D.tensor(parts[0][0], parts[1][0])
        c = 1.0 - zeta_T.total_mass()
        q_star = zeta_T + self.G.scaled(c)
        target_var = float(kernel_deriv(self.kernel, np.array(T), np.array(T)))
        mse = target_var + c * self.D - product_kernel_integral(self.kernel, q_star, T)
        if mse < 0.0:
            if mse < -MSE_SLACK * max(1.0, target_var):
                raise NumericalError(f"negative product mse {mse:.3e} at T={T}")
            mse = 0.0
        residuals = {}
        for axis, (_, path, res) in enumerate(parts, start=1):
            residuals.update({f"{key}_{axis}": value for key, value in res.items()})
        return ClosedFormSolution(
            model=self.model, target=PointTarget(T, (0, 0)), zeta_t0=zeta_T, G=(self.G,),
            C=np.array([[self.C]]), D=np.array([[self.D]]), c=np.array([c]), q_star=q_star, mse=float(mse),
            zeta_path="x".join(path for _, path, _ in parts), residuals=residuals,
        )


def product_blup(model: ProductModel, T: Sequence[float]) -> ClosedFormSolution:
    """Continuous BLUP of y(T) from observation of y on the whole rectangle"""
    return ProductPredictor(model).predict(T)


def product_blup_derivs(model: ProductModel, T: Sequence[float]) -> ClosedFormSolution:
    """Continuous BLUP of y(T) from y and its partial derivatives up to pattern (1, 1)"""
    if not model.derivatives:
        raise ConfigError("product_blup_derivs needs a model with derivatives=True")
    return ProductPredictor(model).predict(T)


def product_mse_of_measure(k: KernelSpec, Q: ProductMeasure2D, T: Sequence[float]) -> float:
    """K(T, T) - 2 int K(., T) dQ + int int K dQ dQ for an unbiased product measure"""
    gap = Q.total_mass() - 1.0
    if abs(gap) > UNBIASED_TOL:
        raise UnbiasednessError([gap], UNBIASED_TOL)
    T = (float(T[0]), float(T[1]))
    return float(kernel_deriv(k, np.array(T), np.array(T))
                 - 2.0 * product_kernel_integral(k, Q, T) + product_kernel_bilinear(k, Q, Q))


# ============ DESIGN FAMILIES ============

def _grid_sites(n: int, domain) -> np.ndarray:
    (a1, b1), (a2, b2) = domain
    u = np.arange(n) / (n - 1)
    return np.array([(a1 + (b1 - a1) * x, a2 + (b2 - a2) * y) for x in u for y in u])


def design_family(tag: str, n: int, domain=((0.0, 1.0), (0.0, 1.0))) -> Design:
    """
    Named observation layouts.

    1D tags use `domain` as an interval; 2D tags place an n x n grid with
    sites (i/(n-1), j/(n-1)) mapped to the rectangle. Derivative patterns go
    to the 4 corners, to the 4n-4 boundary sites or to every site.
    """
    if tag not in DESIGN_TAGS:
        raise ConfigError(f"unknown design tag '{tag}'; known: {list(DESIGN_TAGS)}")
    if n < 2:
        raise ConfigError(f"design size N must be >= 2, got {n}")

    if tag in ONE_DIM_TAGS:
        interval = tuple(float(x) for x in domain) if np.ndim(domain) == 1 else (0.0, 1.0)
        if tag == "xi_N_0":
            return equidistant_design(n, interval, (0,), f"{tag} N={n}")
        if tag == "xi_N_N":
            return equidistant_design(n, interval, (0, 1), f"{tag} N={n}")
        base = equidistant_design(n, interval, (0,))
        orders = tuple((0, 1) if k in (0, n - 1) else (0,) for k in range(n))
        return Design(base.sites, orders, f"{tag} N={n}")

    sites = _grid_sites(n, domain)
    index = [(i, j) for i in range(n) for j in range(n)]
    corner = [i in (0, n - 1) and j in (0, n - 1) for i, j in index]
    boundary = [i in (0, n - 1) or j in (0, n - 1) for i, j in index]
    full = PATTERNS_2D
    value_only = ((0, 0),)

    if tag == "xi_N2_0_0_0":
        orders = [value_only] * len(index)
    elif tag == "xi_N2_4_4_4":
        orders = [full if c else value_only for c in corner]
    elif tag == "xi_N2_N2_N2_0":
        orders = [((0, 0), (1, 0), (0, 1))] * len(index)
    elif tag == "xi_N2_4N-4_4N-4_4N-4":
        orders = [full if b else value_only for b in boundary]
    else:
        orders = [full] * len(index)
    return Design(sites, tuple(orders), f"{tag} N={n}")


def interior_derivative_weights(solution: BlupSolution, domain=((0.0, 1.0), (0.0, 1.0)),
                                tol: float = 0.0) -> List[Tuple[Tuple[float, float], Tuple[int, int], float]]:
    """BLUP weights on derivative observations at sites strictly inside the rectangle"""
    (a1, b1), (a2, b2) = domain
    rows = []
    for site, pattern, w in solution.weight_rows():
        if pattern == (0, 0):
            continue
        if a1 < site[0] < b1 and a2 < site[1] < b2 and abs(w) >= tol:
            rows.append(((float(site[0]), float(site[1])), pattern, w))
    return rows


# ============ MSE SURFACES ============

def _axis(side: Tuple[float, float], n: int) -> np.ndarray:
    if n < 2:
        raise ConfigError(f"grid resolution must be >= 2 per axis, got {n}")
    return np.linspace(float(side[0]), float(side[1]), n)


def mse_grid(model: ProductModel, design: Optional[Design] = None, region=DEFAULT_REGION,
             resolution: Union[int, Tuple[int, int]] = DEFAULT_RESOLUTION,
             workers: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    sqrt(mse) on a region grid; returns (t1 axis, t2 axis, values[i1, i2]).

    design=None evaluates the continuous BLUP. Rows are independent and may
    run on a thread pool sharing one factorization.
    """
    n1, n2 = (resolution, resolution) if isinstance(resolution, int) else resolution
    t1 = _axis(region[0], n1)
    t2 = _axis(region[1], n2)
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    if design is None:
        predictor = ProductPredictor(model)
    else:
        if design.dim != 2:
            raise ConfigError("mse_grid needs a two-dimensional design")
        predictor = DiscretePredictor(model.kernel, model.trend, design)

    def row(i: int) -> np.ndarray:
        return np.array([predictor.predict((t1[i], x)).rmse for x in t2])

    if workers == 1:
        rows = [row(i) for i in range(n1)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(n1)))
    logger.info("MSE grid {}x{} over {} for {}", n1, n2, region,
                design.descriptor if design is not None else "continuous observation")
    return t1, t2, np.vstack(rows)


def write_grid_csv(path: Union[str, Path], t1: np.ndarray, t2: np.ndarray, values: np.ndarray) -> Path:
    """One row per grid node: t1,t2,rmse with 10 significant digits"""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t1", "t2", "rmse"])
        for i, x in enumerate(t1):
            for j, y in enumerate(t2):
                writer.writerow([f"{x:.10g}", f"{y:.10g}", f"{values[i, j]:.10g}"])
    return path
