#!/usr/bin/env python3
"""
Batch command-line interface for stripe-formation energies.

    python stripe_energy.py jc --d 1 --p 3
    python stripe_energy.py decompose --grid config.grid --p 4 --tau 0.5
    python stripe_energy.py stripes --p 3 --tau 0 0.1 0.2 --format csv
    python stripe_energy.py search --d 1 --n 8 --p 3 --tau 0.7 --family euclidean

Exit codes: 0 success, 1 invalid parameters, 2 tolerance not reached.
"""

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from dotenv import load_dotenv
from tabulate import tabulate

from src.core import (
    ConfigurationError,
    PreconditionError,
    StripeEnergyError,
    ToleranceError,
    configure_logging,
    get_logger,
)
from src.stripes.diagnostics import checkerboard_report, region_decompose, verification_report
from src.stripes.energy import EnergyModel, decompose, jc_continuum, jc_dsc_with_error
from src.stripes.kernels import KernelFamily, KernelSpec
from src.stripes.lattice import TorusConfig, read_grid
from src.stripes.search import (
    AnnealSchedule,
    anneal_restarts,
    build_model,
    enumerate_configs,
    stripe_scan,
)
from src.stripes.stripes1d import BRACKET, sweep, tau_zero_optimum
from version import get_version

logger = get_logger(__name__, "cli")

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_TOLERANCE = 2


def _setup_logging(verbose: bool) -> None:
    load_dotenv()
    configure_logging(
        log_level="DEBUG" if verbose else os.environ.get("LOG_LEVEL", "WARNING"),
        enable_console=os.environ.get("LOG_ENABLE_CONSOLE", "true").lower() == "true",
        enable_file=os.environ.get("LOG_ENABLE_FILE", "false").lower() == "true",
        enable_structured=os.environ.get("LOG_ENABLE_STRUCTURED", "true").lower() == "true",
        log_dir=os.environ.get("LOG_DIR", "logs"),
        log_file=os.environ.get("LOG_FILE", "stripe-energy.log"),
    )


def _render(rows: List[Dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=2) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buffer.getvalue()
    return tabulate(rows, headers="keys", tablefmt="grid", floatfmt=".12g") + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
        logger.info(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _kernel(args: argparse.Namespace, d: Optional[int] = None) -> KernelSpec:
    return KernelSpec(d if d is not None else args.d, args.p, args.tau, KernelFamily(args.family))


def _grid(args: argparse.Namespace) -> TorusConfig:
    if not Path(args.grid).exists():
        raise PreconditionError(f"grid file not found: {args.grid}")
    return read_grid(args.grid)


def _model(args: argparse.Namespace) -> EnergyModel:
    if args.J is not None:
        return build_model(args.d, args.n, coupling=args.J, p=args.p)
    return build_model(args.d, args.n, _kernel(args), spacing=args.kappa)


def cmd_jc(args: argparse.Namespace) -> int:
    if args.continuum:
        rows = [{"d": args.d, "p": args.p, "jc_continuum": jc_continuum(args.d, args.p)}]
    else:
        value, error = jc_dsc_with_error(args.d, args.p, args.tol)
        rows = [{"d": args.d, "p": args.p, "jc_dsc": value, "error": error}]
    _emit(_render(rows, args.format), args.out)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _grid(args)
    if args.J is not None:
        model = EnergyModel.coupled(args.J, args.p, cfg.d, cfg.n)
    else:
        model = EnergyModel.rescaled(_kernel(args, cfg.d), cfg.n, cfg.spacing)
    rows = [{"d": cfg.d, "n": cfg.n, "kappa": cfg.spacing, "energy": model.evaluate(cfg)}]
    _emit(_render(rows, args.format), args.out)
    return EXIT_OK


def cmd_decompose(args: argparse.Namespace) -> int:
    cfg = _grid(args)
    breakdown = decompose(cfg, _kernel(args, cfg.d))
    if args.format == "json":
        text = breakdown.to_json() + "\n"
    elif args.format == "csv":
        text = breakdown.to_csv_row()
    else:
        text = _render([breakdown.to_record()], "table")
    _emit(text, args.out)
    return EXIT_OK


def cmd_stripes(args: argparse.Namespace) -> int:
    bracket = tuple(args.bracket) if args.bracket else BRACKET
    if not 0 < bracket[0] < bracket[1]:
        raise PreconditionError(f"invalid bracket {bracket}")
    rows = sweep(args.tau, args.p, args.d, args.workers, bracket)
    for row in rows:
        if row["tau"] == 0:
            row["h_closed_form"] = tau_zero_optimum(KernelSpec(args.d, row["p"], 0.0))[0]
    _emit(_render(rows, args.format), args.out)
    return EXIT_OK


def _search_output(report, args: argparse.Namespace) -> int:
    if args.format == "json" or args.out:
        _emit(report.to_json() + "\n", args.out)
    else:
        rows = [
            {"canonical": cfg.to_bits(), "energy": report.best_energy, "stripe": flag}
            for cfg, flag in zip(report.minimizers, report.is_stripe)
        ]
        print(f"{report.label}: E* = {report.best_energy:.12g} ({report.visited} visited)")
        print(tabulate(rows, headers="keys", tablefmt="grid"))
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    model = _model(args)
    if args.stripes_only:
        report = stripe_scan(model)
    else:
        report = enumerate_configs(model, args.budget, args.workers)
    return _search_output(report, args)


def cmd_anneal(args: argparse.Namespace) -> int:
    model = _model(args)
    schedule = AnnealSchedule(args.t0, args.cool, args.steps, args.seed)
    start = read_grid(args.start) if args.start else None
    report = anneal_restarts(model, schedule, args.restarts, args.workers, start)
    return _search_output(report, args)


def cmd_regions(args: argparse.Namespace) -> int:
    cfg = _grid(args)
    spec = _kernel(args, cfg.d) if args.p is not None else None
    region = region_decompose(cfg, args.l, args.eta, args.delta, args.rho, args.M, spec)
    if args.format == "json":
        _emit(region.to_json() + "\n", args.out)
    else:
        _emit(region.format_grid(), args.out)
        if args.out:
            counts = sorted(region.counts().items())
            print(tabulate(counts, headers=["label", "cubes"], tablefmt="grid"))
    return EXIT_OK


def cmd_checkerboard(args: argparse.Namespace) -> int:
    report = checkerboard_report(args.d, args.n, _kernel(args), args.kappa)
    _emit(_render([report.to_record()], args.format), args.out)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _grid(args)
    spec = _kernel(args, cfg.d)
    c_star = args.c_star
    if c_star is None and args.compare_stripes:
        c_star = stripe_scan(EnergyModel.rescaled(spec, cfg.n, cfg.spacing)).best_energy
    report = verification_report(cfg, spec, args.l, args.eta, args.delta, args.rho, args.M, c_star)
    if args.format == "json":
        text = json.dumps(report.to_record(), indent=2) + "\n"
    else:
        text = report.to_text()
    _emit(text, args.out)
    return EXIT_OK


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["table", "json", "csv"], default="table")
    parser.add_argument("--out", help="Write the result to this file instead of stdout")
    parser.add_argument("--workers", type=int, default=None, help="Overrides STRIPES_WORKERS")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")


def _kernel_options(parser: argparse.ArgumentParser, p_required: bool = True) -> None:
    parser.add_argument("--p", type=float, required=p_required, help="Kernel exponent, p >= d+2")
    parser.add_argument("--tau", type=float, default=0.0, help="Kernel regularization tau >= 0")
    parser.add_argument(
        "--family",
        choices=[f.value for f in KernelFamily],
        default=KernelFamily.ONE_NORM.value,
        help="Kernel family",
    )


def _torus_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d", type=int, required=True, help="Dimension")
    parser.add_argument("--n", type=int, required=True, help="Cells per side")
    parser.add_argument("--kappa", type=float, default=None, help="Lattice spacing")
    parser.add_argument(
        "--J", type=float, default=None, help="Coupling of the unrescaled functional"
    )


def _region_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", required=True, help="Grid file of the configuration")
    parser.add_argument("--l", type=float, required=True, help="Cube side, a multiple of kappa")
    parser.add_argument("--eta", type=float, default=1.0, help="Minimal stripe gap")
    parser.add_argument("--delta", type=float, default=0.1, help="Closeness to stripes")
    parser.add_argument("--rho", type=float, default=1.0, help="Dilation radius of A_0")
    parser.add_argument("--M", type=float, default=0.0, help="Energy threshold on A_0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Stripe-formation energies on lattices and in the 1D reduction."
    )
    parser.add_argument("--version", action="version", version=get_version())
    commands = parser.add_subparsers(dest="command", required=True)

    jc = commands.add_parser("jc", help="Critical constants")
    jc.add_argument("--d", type=int, required=True)
    jc.add_argument("--p", type=float, required=True)
    jc.add_argument("--tol", type=float, default=1e-10)
    jc.add_argument("--continuum", action="store_true", help="Continuum constant instead")
    _common(jc)
    jc.set_defaults(handler=cmd_jc)

    for name, handler in (("eval", cmd_eval), ("decompose", cmd_decompose)):
        sub = commands.add_parser(name, help=f"{name.capitalize()} a grid configuration")
        sub.add_argument("--grid", required=True)
        sub.add_argument("--J", type=float, default=None)
        _kernel_options(sub)
        _common(sub)
        sub.set_defaults(handler=handler)

    stripes = commands.add_parser("stripes", help="Optimal stripe widths over tau and p")
    stripes.add_argument("--d", type=int, default=1)
    stripes.add_argument("--p", type=float, nargs="+", required=True)
    stripes.add_argument("--tau", type=float, nargs="+", default=[0.0])
    stripes.add_argument("--bracket", type=float, nargs=2, default=None)
    _common(stripes)
    stripes.set_defaults(handler=cmd_stripes)

    search = commands.add_parser("search", help="Exhaustive ground-state search")
    _torus_options(search)
    _kernel_options(search)
    search.add_argument("--budget", type=int, default=None, help="Maximal number of cells")
    search.add_argument("--stripes-only", action="store_true", help="Scan stripe widths only")
    _common(search)
    search.set_defaults(handler=cmd_search)

    anneal = commands.add_parser("anneal", help="Simulated annealing")
    _torus_options(anneal)
    _kernel_options(anneal)
    anneal.add_argument("--steps", type=int, default=20_000)
    anneal.add_argument("--t0", type=float, default=1.0)
    anneal.add_argument("--cool", type=float, default=0.95)
    anneal.add_argument("--seed", type=int, default=0)
    anneal.add_argument("--restarts", type=int, default=20)
    anneal.add_argument("--start", help="Grid file of the starting configuration")
    _common(anneal)
    anneal.set_defaults(handler=cmd_anneal)

    regions = commands.add_parser("regions", help="Region decomposition of a configuration")
    _region_options(regions)
    _kernel_options(regions, p_required=False)
    _common(regions)
    regions.set_defaults(handler=cmd_regions)

    checkerboard = commands.add_parser("checkerboard", help="Checkerboard against stripes")
    checkerboard.add_argument("--d", type=int, default=2)
    checkerboard.add_argument("--n", type=int, required=True)
    checkerboard.add_argument("--kappa", type=float, default=None)
    _kernel_options(checkerboard)
    _common(checkerboard)
    checkerboard.set_defaults(handler=cmd_checkerboard)

    report = commands.add_parser("report", help="Verification report of the local energy")
    _region_options(report)
    _kernel_options(report)
    report.add_argument("--c-star", type=float, default=None, help="Reference stripe energy")
    report.add_argument(
        "--compare-stripes", action="store_true", help="Use the best stripe energy on the torus"
    )
    _common(report)
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)

    try:
        return args.handler(args)
    except ToleranceError as e:
        logger.error(f"{args.command}: tolerance not reached: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (PreconditionError, ConfigurationError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except StripeEnergyError as e:
        logger.exception(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
