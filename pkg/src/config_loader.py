"""
Kriging Measures - Config Loader
Loads run defaults from YAML, merges config files and flags, and builds the
kernel, trend, design and target a command needs.
"""

import copy
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from src.errors import ConfigError
from src.kernels import KIND_ALIASES, KernelKind, KernelSpec, brownian, exponential, integrated_brownian, markovian, matern32
from src.models import AverageTarget, ContinuousModel, Design, PointTarget, ProductModel, Target, Trend, get_trend
from src.product_field import DESIGN_TAGS, TWO_DIM_TAGS, design_family


DEFAULT_CONFIG_PATH = "blup.yaml"

# Built-in defaults; blup.yaml, --config files and flags override them in that order
DEFAULTS: Dict[str, Any] = {
    "kernel": {"kind": "ou", "lambda": 2.0, "markov": "u=exp(lt),v=exp(-lt)"},
    "interval": [0.0, 1.0],
    "domain": [[0.0, 1.0], [0.0, 1.0]],
    "trend": "const1",
    "design": {"family": "xi_N_0", "N": 8, "continuous": False, "orders": None, "derivatives": None},
    "target": {"point": [2.0], "p": 0, "nu": None},
    "grid": {"region": [[0.5, 2.0], [0.5, 2.0]], "resolution": 61, "workers": 1},
    "output": {"path": None, "format": "csv"},
    "verify": {"mc_samples": 100_000, "seed": 42, "streams": 4, "trials": 100},
    "numerics": {"jitter": 0.0},
}


def _unset(value: Any) -> bool:
    """None, or a mapping holding nothing but unset values"""
    if isinstance(value, dict):
        return all(_unset(v) for v in value.values())
    return value is None


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; unset values in override are ignored"""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if _unset(value):
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = value
    return out


# Sections that may be given as a single scalar, e.g. "kernel: ou"
SHORTHAND_KEYS = {"kernel": "kind", "design": "family", "target": "point"}


def expand_shorthand(config: Dict[str, Any]) -> Dict[str, Any]:
    """Turn scalar shorthand sections into one-key mappings"""
    out = dict(config)
    for section, key in SHORTHAND_KEYS.items():
        value = out.get(section)
        if value is not None and not isinstance(value, dict):
            out[section] = {key: value}
    return out


class ConfigLoader:
    """Reads one YAML (or JSON) config file"""

    def __init__(self, yaml_path: Union[str, Path]):
        with open(yaml_path, "r", encoding="utf-8") as f:
            try:
                self.config = yaml.safe_load(f) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{yaml_path}: not valid YAML or JSON: {exc}") from exc
        if not isinstance(self.config, dict):
            raise ConfigError(f"{yaml_path}: top level must be a mapping")
        self.config = expand_shorthand(self.config)
        self.path = str(yaml_path)

    def section(self, name: str) -> Any:
        return self.config.get(name)


# ============ RESOLVED CONFIG ============

@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters"""
    kernel: str
    lam: float
    markov: str
    interval: Tuple[float, float]
    domain: Tuple[Tuple[float, float], Tuple[float, float]]
    trend: str
    design: str
    n: int
    continuous: bool
    orders: Optional[Tuple[int, ...]]
    derivatives: Optional[bool]
    point: Tuple[float, ...]
    p: int
    nu: Optional[Tuple[Tuple[float, float], ...]]
    region: Tuple[Tuple[float, float], Tuple[float, float]]
    resolution: int
    workers: int
    output_path: Optional[str]
    output_format: str
    mc_samples: int
    seed: int
    streams: int
    trials: int
    jitter: float

    @property
    def dim(self) -> int:
        return 2 if len(self.point) == 2 or self.design in TWO_DIM_TAGS else 1

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.as_dict().items())


def _pair(value, name: str) -> Tuple[float, float]:
    try:
        a, b = (float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be two numbers, got {value!r}") from exc
    if not a < b:
        raise ConfigError(f"{name} [{a}, {b}] needs {a} < {b}")
    return a, b


def _from_dict(raw: Dict[str, Any]) -> RunConfig:
    try:
        return _resolve(raw)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"malformed config value: {type(exc).__name__}: {exc}") from exc


def _resolve(raw: Dict[str, Any]) -> RunConfig:
    kernel, design, target = raw["kernel"], raw["design"], raw["target"]
    grid, output, verify, numerics = raw["grid"], raw["output"], raw["verify"], raw["numerics"]

    kind = str(kernel["kind"]).lower()
    if kind not in KIND_ALIASES or KIND_ALIASES[kind] == KernelKind.PRODUCT:
        raise ConfigError(f"unknown kernel kind '{kind}'; known: {sorted(k for k in KIND_ALIASES if k != 'product')}")
    family = str(design["family"])
    if family not in DESIGN_TAGS:
        raise ConfigError(f"unknown design family '{family}'; known: {list(DESIGN_TAGS)}")
    point = tuple(float(x) for x in (target["point"] if isinstance(target["point"], (list, tuple))
                                     else [target["point"]]))
    if len(point) not in (1, 2):
        raise ConfigError(f"target point must have 1 or 2 coordinates, got {point}")
    nu = target.get("nu")
    if nu is not None:
        nu = tuple((float(x), float(w)) for x, w in nu)
    fmt = str(output["format"]).lower()
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output format must be csv or json, got '{fmt}'")
    orders = design.get("orders")
    cfg = RunConfig(
        kernel=kind,
        lam=float(kernel["lambda"]),
        markov=str(kernel["markov"]),
        interval=_pair(raw["interval"], "interval"),
        domain=(_pair(raw["domain"][0], "domain side 1"), _pair(raw["domain"][1], "domain side 2")),
        trend=str(raw["trend"]),
        design=family,
        n=int(design["N"]),
        continuous=bool(design["continuous"]),
        orders=tuple(int(o) for o in orders) if orders is not None else None,
        derivatives=design.get("derivatives"),
        point=point,
        p=int(target["p"]),
        nu=nu,
        region=(_pair(grid["region"][0], "grid region side 1"), _pair(grid["region"][1], "grid region side 2")),
        resolution=int(grid["resolution"]),
        workers=int(grid["workers"]),
        output_path=output["path"],
        output_format=fmt,
        mc_samples=int(verify["mc_samples"]),
        seed=int(verify["seed"]),
        streams=int(verify["streams"]),
        trials=int(verify["trials"]),
        jitter=float(numerics["jitter"]),
    )
    if cfg.n < 2:
        raise ConfigError(f"design N must be >= 2, got {cfg.n}")
    if cfg.jitter < 0:
        raise ConfigError("numerics.jitter must be >= 0")
    if cfg.nu is not None and cfg.p != 0:
        raise ConfigError(f"averaging target nu and derivative order p={cfg.p} cannot be combined")
    return cfg


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None,
                    defaults_path: Optional[Union[str, Path]] = DEFAULT_CONFIG_PATH) -> RunConfig:
    """
    Resolve defaults < blup.yaml (when present) < config file < overrides.

    A missing explicit config file raises FileNotFoundError.
    """
    raw = copy.deepcopy(DEFAULTS)
    if defaults_path is not None and Path(defaults_path).is_file():
        raw = deep_merge(raw, ConfigLoader(defaults_path).config)
    if path is not None:
        raw = deep_merge(raw, ConfigLoader(path).config)
    raw = deep_merge(raw, overrides or {})
    return _from_dict(raw)


# ============ BUILDERS ============

def build_kernel(cfg: RunConfig) -> KernelSpec:
    """The one-dimensional kernel (each factor of the product in 2D)"""
    kind = KIND_ALIASES[cfg.kernel]
    if kind == KernelKind.EXPONENTIAL:
        return exponential(cfg.lam)
    if kind == KernelKind.MATERN32:
        return matern32(cfg.lam)
    if kind == KernelKind.BROWNIAN:
        return brownian()
    if kind == KernelKind.INTEGRATED_BROWNIAN:
        return integrated_brownian()
    return markovian(cfg.markov, cfg.lam)


def build_trend(cfg: RunConfig) -> Trend:
    return get_trend(cfg.trend, cfg.dim)


def build_design(cfg: RunConfig, dim: Optional[int] = None) -> Design:
    if (dim or cfg.dim) == 2:
        if cfg.design not in TWO_DIM_TAGS:
            raise ConfigError(f"design '{cfg.design}' is one-dimensional; a two-dimensional design is needed")
        return design_family(cfg.design, cfg.n, cfg.domain)
    if cfg.design in TWO_DIM_TAGS:
        raise ConfigError(f"design '{cfg.design}' needs a 2D target point")
    return design_family(cfg.design, cfg.n, cfg.interval)


def build_target(cfg: RunConfig) -> Target:
    if cfg.nu is not None:
        return AverageTarget(cfg.nu)
    if cfg.dim == 2:
        if len(cfg.point) != 2:
            raise ConfigError(f"design '{cfg.design}' needs a target point with two coordinates")
        if cfg.p != 0:
            raise ConfigError("2D targets are values y(T) only")
        return PointTarget(cfg.point, (0, 0))
    return PointTarget(cfg.point[0], cfg.p)


def build_continuous_model(cfg: RunConfig) -> ContinuousModel:
    return ContinuousModel(build_kernel(cfg), build_trend(cfg), cfg.interval, cfg.orders)


def build_product_model(cfg: RunConfig) -> ProductModel:
    k = build_kernel(cfg)
    derivatives = cfg.derivatives if cfg.derivatives is not None else k.smoothness >= 1
    return ProductModel(k, k, cfg.domain, bool(derivatives))
