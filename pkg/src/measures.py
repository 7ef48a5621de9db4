"""
Kriging Measures - Signed Measures
Atoms plus a smooth density on an interval, vector and 2D tensor variants,
and their integrals against functions and kernels.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ConfigError
from src.kernels import KernelSpec, kernel_deriv
from src.models import pattern_rank
from src.numerics import DEFAULT_ORDER, QuadratureRule, composite_rule, default_panels


Density = Callable[[np.ndarray], np.ndarray]
ATOM_TOL = 1e-12


def _values(g: Callable, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)


def _combine(d1: Optional[Density], c1: float, d2: Optional[Density], c2: float) -> Optional[Density]:
    parts = [(d, c) for d, c in ((d1, c1), (d2, c2)) if d is not None and c != 0.0]
    if not parts:
        return None
    if len(parts) == 1:
        d, c = parts[0]
        return d if c == 1.0 else (lambda t, d=d, c=c: c * _values(d, np.asarray(t, dtype=float)))
    (da, ca), (db, cb) = parts
    return lambda t: ca * _values(da, np.asarray(t, dtype=float)) + cb * _values(db, np.asarray(t, dtype=float))


# ============ SIGNED MEASURE ============

@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """Q(dt) = sum of weighted atoms + density(t) dt on [a, b]"""
    a: float
    b: float
    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Optional[Density] = None
    rate: float = 4.0
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not self.a <= self.b:
            raise ConfigError(f"invalid support [{self.a}, {self.b}]")
        span = max(self.b - self.a, 1.0)
        merged: Dict[float, float] = {}
        for x, w in self.atoms:
            x = float(x)
            if x < self.a - ATOM_TOL * span or x > self.b + ATOM_TOL * span:
                raise ConfigError(f"atom at {x} outside support [{self.a}, {self.b}]")
            x = min(max(x, self.a), self.b)
            key = next((y for y in merged if abs(y - x) <= ATOM_TOL * span), x)
            merged[key] = merged.get(key, 0.0) + float(w)
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def zero(cls, a: float, b: float) -> "SignedMeasure":
        return cls(a, b)

    @classmethod
    def dirac(cls, x: float, a: float, b: float, weight: float = 1.0) -> "SignedMeasure":
        return cls(a, b, atoms=((x, weight),))

    @property
    def support(self) -> Tuple[float, float]:
        return (self.a, self.b)

    @property
    def is_zero(self) -> bool:
        return self.density is None and all(w == 0.0 for _, w in self.atoms)

    @property
    def atom_locations(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms], dtype=float)

    @property
    def atom_weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    def weight_at(self, x: float) -> float:
        """Atom weight at x (0 when there is no atom)"""
        for y, w in self.atoms:
            if abs(y - x) <= ATOM_TOL * max(self.b - self.a, 1.0):
                return w
        return 0.0

    def rule(self, breakpoints: Iterable[float] = ()) -> QuadratureRule:
        return composite_rule(self.a, self.b, self.order, panels=default_panels(self.a, self.b, self.rate),
                              breakpoints=breakpoints)

    @cached_property
    def default_rule(self) -> QuadratureRule:
        return self.rule()

    def density_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.density is None:
            return np.zeros_like(t)
        return _values(self.density, t)

    def discretize(self, breakpoints: Iterable[float] = ()) -> Tuple[np.ndarray, np.ndarray]:
        """Atoms plus density point masses density(node) * weight at quadrature nodes"""
        breakpoints = tuple(breakpoints)
        locs = [self.atom_locations]
        wts = [self.atom_weights]
        if self.density is not None and self.b > self.a:
            rule = self.rule(breakpoints) if breakpoints else self.default_rule
            locs.append(rule.nodes)
            wts.append(rule.weights * self.density_values(rule.nodes))
        return np.concatenate(locs), np.concatenate(wts)

    def total_mass(self) -> float:
        return integrate(self, lambda t: np.ones_like(t))

    def scaled(self, c: float) -> "SignedMeasure":
        return SignedMeasure(self.a, self.b, tuple((x, c * w) for x, w in self.atoms),
                             _combine(self.density, c, None, 0.0), self.rate, self.order)

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        if (self.a, self.b) != (other.a, other.b):
            raise ConfigError(f"mismatched supports [{self.a}, {self.b}] and [{other.a}, {other.b}]")
        return SignedMeasure(self.a, self.b, self.atoms + other.atoms,
                             _combine(self.density, 1.0, other.density, 1.0),
                             max(self.rate, other.rate), max(self.order, other.order))

    def __neg__(self) -> "SignedMeasure":
        return self.scaled(-1.0)

    def __sub__(self, other: "SignedMeasure") -> "SignedMeasure":
        return self + other.scaled(-1.0)

    def __rmul__(self, c: float) -> "SignedMeasure":
        return self.scaled(float(c))


def integrate(m: SignedMeasure, g: Callable, breakpoints: Iterable[float] = ()) -> float:
    """Sum of atom weights times g plus quadrature of density times g"""
    breakpoints = tuple(breakpoints)
    total = 0.0
    if m.atoms:
        x = m.atom_locations
        total += float(np.dot(m.atom_weights, _values(g, x)))
    if m.density is not None and m.b > m.a:
        rule = m.rule(breakpoints) if breakpoints else m.default_rule
        total += rule.integrate(lambda t: m.density_values(t) * _values(g, t))
    return total


# ============ VECTOR MEASURE ============

@dataclass(frozen=True, eq=False)
class VectorMeasure:
    """(Q_0, ..., Q_q): component i acts on the i-th derivative of y"""
    components: Tuple[SignedMeasure, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ConfigError("vector measure needs at least one component")
        first = comps[0].support
        for m in comps[1:]:
            if m.support != first:
                raise ConfigError("vector measure components must share one support interval")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, q: int, a: float, b: float) -> "VectorMeasure":
        return cls(tuple(SignedMeasure.zero(a, b) for _ in range(q + 1)))

    @classmethod
    def of(cls, *components: SignedMeasure) -> "VectorMeasure":
        return cls(tuple(components))

    @property
    def q(self) -> int:
        return len(self.components) - 1

    @property
    def support(self) -> Tuple[float, float]:
        return self.components[0].support

    @property
    def is_zero(self) -> bool:
        return all(m.is_zero for m in self.components)

    def __getitem__(self, i: int) -> SignedMeasure:
        return self.components[i]

    def __len__(self) -> int:
        return len(self.components)

    def atom_locations(self) -> List[float]:
        return sorted({x for m in self.components for x, _ in m.atoms})

    def scaled(self, c: float) -> "VectorMeasure":
        return VectorMeasure(tuple(m.scaled(c) for m in self.components))

    def __add__(self, other: "VectorMeasure") -> "VectorMeasure":
        if not isinstance(other, VectorMeasure):
            return NotImplemented
        if len(self) != len(other):
            raise ConfigError(f"vector measures of lengths {len(self)} and {len(other)} cannot be added")
        return VectorMeasure(tuple(x + y for x, y in zip(self.components, other.components)))

    def __rmul__(self, c: float) -> "VectorMeasure":
        return self.scaled(float(c))


AnyMeasure = Union[SignedMeasure, VectorMeasure, "ProductMeasure2D"]


def as_vector(m: Union[SignedMeasure, VectorMeasure]) -> VectorMeasure:
    return m if isinstance(m, VectorMeasure) else VectorMeasure((m,))


def integrate_vector(vm: VectorMeasure, gs: Sequence[Optional[Callable]]) -> float:
    """Sum over components of the integral of y^(i) = gs[i] against Q_i"""
    total = 0.0
    for i, m in enumerate(vm.components):
        if m.is_zero:
            continue
        if i >= len(gs) or gs[i] is None:
            raise ConfigError(f"missing derivative callable for component {i}")
        total += integrate(m, gs[i])
    return total


def axpy(a: Sequence[float], measures: Sequence, base):
    """base + sum_i a_i * measures_i"""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if len(a) != len(measures):
        raise ConfigError(f"{len(a)} coefficients for {len(measures)} measures")
    out = base
    for coef, m in zip(a, measures):
        if coef != 0.0:
            out = out + m.scaled(float(coef))
    return out


# ============ KERNEL INTEGRALS ============

def component_kernel_integral(k: KernelSpec, m: SignedMeasure, s: float, i: int, j: int) -> float:
    """Integral over t of d^{i+j}K(t, s)/dt^i ds^j against m(dt), split at s"""
    if m.is_zero:
        return 0.0
    return integrate(m, lambda t: kernel_deriv(k, t, s, i, j) * np.ones_like(t), breakpoints=(s,))


def kernel_integral(k: KernelSpec, vm: Union[SignedMeasure, VectorMeasure], s: float, j: int = 0) -> float:
    """Integral of the j-th s-derivative of the kernel vector against a vector measure"""
    vm = as_vector(vm)
    return sum(component_kernel_integral(k, m, s, i, j) for i, m in enumerate(vm.components))


def component_bilinear(k: KernelSpec, m1: SignedMeasure, m2: SignedMeasure, i: int, j: int) -> float:
    """Double integral of d^{i+j}K(t, s) against m1(dt) m2(ds)"""
    if m1.is_zero or m2.is_zero:
        return 0.0
    locs, wts = m2.discretize(breakpoints=[x for x, _ in m1.atoms])
    return float(sum(w * component_kernel_integral(k, m1, s, i, j) for s, w in zip(locs, wts) if w != 0.0))


def kernel_bilinear(k: KernelSpec, m1: Union[SignedMeasure, VectorMeasure],
                    m2: Union[SignedMeasure, VectorMeasure]) -> float:
    """Sum over (i, j) of the double integrals of the kernel derivative blocks"""
    v1, v2 = as_vector(m1), as_vector(m2)
    return sum(component_bilinear(k, a, b, i, j)
               for i, a in enumerate(v1.components) for j, b in enumerate(v2.components))


def equation_residual(k: KernelSpec, vm: Union[SignedMeasure, VectorMeasure], rhs: Callable[[float, int], float],
                      s_grid: Iterable[float], orders: Iterable[int] = (0,)) -> float:
    """max over s and j of |integral of the j-th kernel row against vm - rhs(s, j)|"""
    worst = 0.0
    for j in orders:
        for s in s_grid:
            worst = max(worst, abs(kernel_integral(k, vm, float(s), j) - rhs(float(s), j)))
    return worst


# ============ 2D TENSOR MEASURES ============

@dataclass(frozen=True)
class TensorTerm:
    """coef * first(dt1) second(dt2)"""
    coef: float
    first: SignedMeasure
    second: SignedMeasure


@dataclass(frozen=True, eq=False)
class ProductMeasure2D:
    """Components indexed by derivative pattern, each a sum of tensor terms"""
    components: Dict[Tuple[int, int], Tuple[TensorTerm, ...]] = field(default_factory=dict)

    @classmethod
    def tensor(cls, v1: VectorMeasure, v2: VectorMeasure) -> "ProductMeasure2D":
        comps = {}
        for i2, m2 in enumerate(v2.components):
            for i1, m1 in enumerate(v1.components):
                if m1.is_zero or m2.is_zero:
                    continue
                comps[(i1, i2)] = (TensorTerm(1.0, m1, m2),)
        return cls(comps)

    @property
    def patterns(self) -> List[Tuple[int, int]]:
        return sorted(self.components, key=pattern_rank)

    def scaled(self, c: float) -> "ProductMeasure2D":
        return ProductMeasure2D({p: tuple(TensorTerm(c * t.coef, t.first, t.second) for t in terms)
                                 for p, terms in self.components.items()})

    def __add__(self, other: "ProductMeasure2D") -> "ProductMeasure2D":
        if not isinstance(other, ProductMeasure2D):
            return NotImplemented
        comps = dict(self.components)
        for p, terms in other.components.items():
            comps[p] = comps.get(p, ()) + terms
        return ProductMeasure2D(comps)

    def integrate_separable(self, g1: Sequence[Callable], g2: Sequence[Callable],
                            patterns: Optional[Iterable[Tuple[int, int]]] = None) -> float:
        """Integral of g1[i1](t1) g2[i2](t2) against component (i1, i2), summed"""
        total = 0.0
        wanted = self.components if patterns is None else {p: self.components.get(p, ()) for p in patterns}
        for (i1, i2), terms in wanted.items():
            for term in terms:
                total += term.coef * integrate(term.first, g1[i1]) * integrate(term.second, g2[i2])
        return total

    def total_mass(self) -> float:
        """Integral of the constant 1 against the (0, 0) component"""
        ones = [lambda t: np.ones_like(t)]
        return self.integrate_separable(ones, ones, patterns=[(0, 0)])


def product_kernel_integral(k: KernelSpec, pm: ProductMeasure2D, T: Sequence[float],
                            j: Tuple[int, int] = (0, 0)) -> float:
    """Sum over patterns of the integral of the kernel derivative block against pm at T"""
    total = 0.0
    for (i1, i2), terms in pm.components.items():
        for term in terms:
            total += (term.coef
                      * component_kernel_integral(k.left, term.first, float(T[0]), i1, j[0])
                      * component_kernel_integral(k.right, term.second, float(T[1]), i2, j[1]))
    return total


def product_kernel_bilinear(k: KernelSpec, p1: ProductMeasure2D, p2: ProductMeasure2D) -> float:
    total = 0.0
    for (i1, i2), terms1 in p1.components.items():
        for (j1, j2), terms2 in p2.components.items():
            for t1 in terms1:
                for t2 in terms2:
                    total += (t1.coef * t2.coef
                              * component_bilinear(k.left, t1.first, t2.first, i1, j1)
                              * component_bilinear(k.right, t1.second, t2.second, i2, j2))
    return total


# ============ SERIALIZATION ============

def measure_record(m: SignedMeasure) -> dict:
    """{support, atoms, density_samples} with the density sampled at quadrature nodes"""
    record = {
        "support": [m.a, m.b],
        "atoms": [[float(x), float(w)] for x, w in m.atoms],
        "density_samples": [],
    }
    if m.density is not None and m.b > m.a:
        nodes = m.default_rule.nodes
        record["density_samples"] = [[float(t), float(v)] for t, v in zip(nodes, m.density_values(nodes))]
    return record


def vector_record(vm: VectorMeasure) -> List[dict]:
    return [measure_record(m) for m in vm.components]


def product_record(pm: ProductMeasure2D) -> Dict[str, list]:
    return {
        f"{p[0]}{p[1]}": [{"coef": t.coef, "first": measure_record(t.first), "second": measure_record(t.second)}
                          for t in terms]
        for p, terms in sorted(pm.components.items())
    }
