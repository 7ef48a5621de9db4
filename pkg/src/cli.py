"""
Kriging Measures - Command Line
predict, table, grid and verify subcommands with config echo and exit codes.
"""

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src import __version__
from src.blup_continuous import continuous_blup, continuous_blup_average, ibm_blup
from src.blup_discrete import DiscretePredictor
from src.config_loader import (RunConfig, build_continuous_model, build_design, build_kernel, build_product_model,
                               build_target, build_trend, load_run_config)
from src.errors import ConfigError, NumericalError
from src.kernels import KernelKind
from src.measures import ProductMeasure2D, product_record, vector_record
from src.models import AverageTarget, BlupSolution, ClosedFormSolution
from src.product_field import ProductPredictor, mse_grid, write_grid_csv
from src.tables import compute_table, format_table, write_table_csv
from src.reference import TABLE_IDS
from src.report_pdf import generate_table_sheet
from src.verify import run_verification_suite


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TABLE = 4
EXIT_VERIFY = 5


def configure_logging(verbosity: int) -> None:
    """One stderr sink: WARNING by default, INFO with -v, DEBUG with -vv"""
    logger.remove()
    level = "WARNING" if verbosity <= 0 else "INFO" if verbosity == 1 else "DEBUG"
    logger.add(sys.stderr, level=level, format="{time:HH:mm:ss} | {level: <8} | {name}:{function} - {message}")


def _g(x: float) -> str:
    return f"{x:.10g}"


def flatten_record(value: Any, prefix: str = "") -> Iterator[Tuple[str, str]]:
    """(dotted key, text) rows of a nested record; list items are indexed as key[i]"""
    if isinstance(value, dict):
        for key, item in value.items():
            yield from flatten_record(item, f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from flatten_record(item, f"{prefix}[{i}]")
    elif isinstance(value, float):
        yield prefix, _g(value)
    else:
        yield prefix, "" if value is None else str(value)


class BlupCLI:
    """Runs one subcommand and prints a human report to stdout"""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    def display_header(self, text: str):
        print("\n" + "=" * 70)
        print(f"  {text}")
        print("=" * 70)

    def display_config(self):
        print(f"# kriging-measures {__version__}")
        for key, value in self.cfg.as_dict().items():
            print(f"# {key}: {value}")

    # ============ PREDICT ============

    def solve(self):
        cfg = self.cfg
        target = build_target(cfg)
        if cfg.dim == 2:
            if cfg.continuous:
                return ProductPredictor(build_product_model(cfg)).predict(target.t0)
            model = build_product_model(cfg)
            return DiscretePredictor(model.kernel, model.trend, build_design(cfg), cfg.jitter).predict(target.t0)
        if cfg.continuous:
            model = build_continuous_model(cfg)
            if isinstance(target, AverageTarget):
                return continuous_blup_average(model, target)
            if model.kernel.kind == KernelKind.INTEGRATED_BROWNIAN:
                return ibm_blup(model, target.t0, target.p)
            return continuous_blup(model, target.t0, target.p)
        predictor = DiscretePredictor(build_kernel(cfg), build_trend(cfg), build_design(cfg), cfg.jitter)
        if isinstance(target, AverageTarget):
            return predictor.predict_average(target)
        return predictor.predict(target.t0, target.p)

    def display_discrete(self, solution: BlupSolution):
        print(f"\nWeights ({solution.design.descriptor}):")
        for site, pattern, w in solution.weight_rows():
            loc = _g(site) if np.ndim(site) == 0 else f"({_g(site[0])}, {_g(site[1])})"
            print(f"  {loc:>24}  order {str(pattern):6}  {_g(w)}")

    def display_measure(self, solution: ClosedFormSolution):
        q = solution.q_star
        print(f"\nPredictor measure Q* (zeta path: {solution.zeta_path}):")
        if isinstance(q, ProductMeasure2D):
            for pattern, terms in sorted(q.components.items()):
                print(f"  pattern {pattern}: {len(terms)} tensor term(s)")
                for term in terms:
                    dens = term.first.density is not None or term.second.density is not None
                    print(f"    {_g(term.coef)} x atoms {list(term.first.atoms)} (x) atoms {list(term.second.atoms)}"
                          + (" with densities" if dens else ""))
            return
        for i, m in enumerate(q.components):
            atoms = ", ".join(f"{_g(x)}: {_g(w)}" for x, w in m.atoms) or "none"
            density = "yes" if m.density is not None else "no"
            print(f"  component {i}: atoms {{{atoms}}}, density {density}")
        if solution.printed_mse is not None:
            print(f"  closed-form mse (reported only): {_g(solution.printed_mse)}")

    def record(self, solution) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "version": __version__,
            "config": self.cfg.as_dict(),
            "target": str(solution.target),
            "mse": solution.mse,
            "rmse": solution.rmse,
            "c": np.atleast_1d(solution.c).tolist(),
            "D": np.atleast_2d(solution.D).tolist(),
        }
        if isinstance(solution, BlupSolution):
            out["weights"] = [{"site": np.atleast_1d(s).tolist(), "order": p, "weight": w}
                              for s, p, w in solution.weight_rows()]
        else:
            q = solution.q_star
            out["q_star"] = product_record(q) if isinstance(q, ProductMeasure2D) else vector_record(q)
            out["zeta_path"] = solution.zeta_path
            out["residuals"] = solution.residuals
        return out

    def cmd_predict(self) -> int:
        solution = self.solve()
        self.display_config()
        self.display_header(f"BLUP of {solution.target}")
        if isinstance(solution, BlupSolution):
            self.display_discrete(solution)
        else:
            self.display_measure(solution)
        print(f"\nc: {[_g(x) for x in np.atleast_1d(solution.c)]}")
        print(f"D: {[[_g(x) for x in row] for row in np.atleast_2d(solution.D)]}")
        print(f"mse: {_g(solution.mse)}")
        print(f"sqrt(mse): {_g(solution.rmse)}")
        if self.cfg.output_path:
            path = Path(self.cfg.output_path)
            record = self.record(solution)
            if self.cfg.output_format == "json":
                path.write_text(json.dumps(record, indent=2, default=str))
            else:
                with path.open("w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["key", "value"])
                    writer.writerows(flatten_record(record))
            logger.info("wrote {}", path)
        return EXIT_OK

    # ============ TABLE / GRID / VERIFY ============

    def cmd_table(self, ids: Sequence[str], pdf: Optional[str]) -> int:
        keys = list(TABLE_IDS) if "all" in ids else list(ids)
        results = [compute_table(key) for key in keys]
        self.display_config()
        for result in results:
            self.display_header(result.title)
            print(format_table(result))
        if self.cfg.output_path:
            write_table_csv(self.cfg.output_path, results)
            logger.info("wrote {}", self.cfg.output_path)
        if pdf:
            generate_table_sheet(results, pdf, version=__version__, config_lines=[self.cfg.describe()])
            logger.info("wrote {}", pdf)
        failed = [f for r in results for f in r.failures()]
        if failed:
            print(f"\n{len(failed)} cell(s) or identities outside tolerance")
            return EXIT_TABLE
        return EXIT_OK

    def cmd_grid(self) -> int:
        cfg = self.cfg
        model = build_product_model(cfg)
        design = None if cfg.continuous else build_design(cfg, dim=2)
        t1, t2, values = mse_grid(model, design, cfg.region, cfg.resolution, cfg.workers)
        path = write_grid_csv(cfg.output_path or "mse_grid.csv", t1, t2, values)
        self.display_config()
        self.display_header("sqrt(MSE) grid")
        print(f"{len(t1)} x {len(t2)} nodes over {cfg.region}; min {_g(values.min())}, max {_g(values.max())}")
        print(f"written to {path}")
        return EXIT_OK

    def cmd_verify(self, mc: bool, perturb: bool) -> int:
        cfg = self.cfg
        results = run_verification_suite(mc=mc, samples=cfg.mc_samples, seed=cfg.seed,
                                         perturb=perturb, trials=cfg.trials)
        self.display_config()
        self.display_header("Verification")
        for r in results:
            print(str(r))
        failed = [r for r in results if not r.passed]
        print(f"\n{len(results) - len(failed)}/{len(results)} checks passed")
        return EXIT_VERIFY if failed else EXIT_OK


# ============ ARGUMENTS ============

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kriging-measures", description="BLUPs and their MSE for discrete and "
                                     "continuous observations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run config")
    common.add_argument("--out", help="output path (csv or json)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="count", default=0)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--kernel")
    model.add_argument("--lambda", dest="lam", type=float)
    model.add_argument("--markov", help="Markovian factors, e.g. 'u=t,v=1'")
    model.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
    model.add_argument("--domain", nargs=4, type=float, metavar=("A1", "B1", "A2", "B2"))
    model.add_argument("--trend")
    model.add_argument("--design", help="design family tag")
    model.add_argument("--N", dest="n", type=int)
    model.add_argument("--continuous", action="store_true", default=None)
    model.add_argument("--orders", nargs="+", type=int)
    model.add_argument("--jitter", type=float)

    sub = parser.add_subparsers(dest="command", required=True)

    predict = sub.add_parser("predict", parents=[common, model], help="single BLUP")
    predict.add_argument("--t0", nargs="+", type=float, help="t0 or T1 T2")
    predict.add_argument("--p", type=int, help="derivative order of the target")
    predict.add_argument("--nu", nargs="+", metavar="X:W", help="averaging atoms")

    table = sub.add_parser("table", parents=[common], help="reproduce published tables")
    table.add_argument("ids", nargs="+", help="exp-square, matern-line, matern-square, ou-line, 1-4 or all")
    table.add_argument("--pdf", help="also write a printable sheet")

    grid = sub.add_parser("grid", parents=[common, model], help="sqrt(MSE) surface on a 2D grid")
    grid.add_argument("--region", nargs=4, type=float, metavar=("X1", "X2", "Y1", "Y2"))
    grid.add_argument("--resolution", type=int)
    grid.add_argument("--workers", type=int)

    verify = sub.add_parser("verify", parents=[common], help="residual, Monte Carlo and perturbation checks")
    verify.add_argument("--mc", action="store_true")
    verify.add_argument("--samples", type=int)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--perturb", action="store_true")
    verify.add_argument("--trials", type=int)
    return parser


def _nu_atoms(items: Optional[List[str]]):
    if not items:
        return None
    atoms = []
    for item in items:
        try:
            x, w = item.split(":")
            atoms.append([float(x), float(w)])
        except ValueError as exc:
            raise ConfigError(f"averaging atom '{item}' must look like X:W") from exc
    return atoms


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested override dict; flags that were not given stay None and are skipped"""
    get = lambda name: getattr(args, name, None)
    domain = get("domain")
    region = get("region")
    return {
        "kernel": {"kind": get("kernel"), "lambda": get("lam"), "markov": get("markov")},
        "interval": get("interval"),
        "domain": [domain[:2], domain[2:]] if domain else None,
        "trend": get("trend"),
        "design": {"family": get("design"), "N": get("n"), "continuous": get("continuous"), "orders": get("orders")},
        "target": {"point": get("t0"), "p": get("p"), "nu": _nu_atoms(get("nu"))},
        "grid": {"region": [region[:2], region[2:]] if region else None, "resolution": get("resolution"),
                 "workers": get("workers")},
        "output": {"path": get("out"), "format": get("format")},
        "verify": {"mc_samples": get("samples"), "seed": get("seed"), "trials": get("trials")},
        "numerics": {"jitter": get("jitter")},
    }


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        cfg = load_run_config(args.config, overrides_from_args(args))
        logger.info("config resolved: {}", cfg.describe())
        cli = BlupCLI(cfg)
        if args.command == "predict":
            return cli.cmd_predict()
        if args.command == "table":
            return cli.cmd_table(args.ids, args.pdf)
        if args.command == "grid":
            return cli.cmd_grid()
        return cli.cmd_verify(args.mc, args.perturb)
    except FileNotFoundError as exc:
        print(f"ERROR: config file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"ERROR (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"ERROR (numerical): {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
