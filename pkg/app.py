#!/usr/bin/env python3
"""
Central Spin Model Bounds - command-line entry point.
Run with: python app.py <command> [options]

Commands:
  bound                  single Mazur bound, JSON record
  scan                   sweep over N, x, h and quantity sets, CSV rows
  extrapolate            1/N extrapolation of an `N,value` series
  fit-log                A ln(x/B)/x fit of an `x,S` file
  solve-elements         closed-form scalar products from exact traces
  regenerate-appendix-c  re-derive and verify the shipped element table
  ed                     exact persisting correlation by full diagonalization
  gaussian-check         analytic Gaussian moments against Monte Carlo

Exit codes: 0 success, 1 error, 2 result printed but flagged (ill-conditioned or ambiguous).
"""
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from csm_bounds import __version__
from csm_bounds.commands.bound_commands import cmd_bound, cmd_scan
from csm_bounds.commands.common import EXIT_ERROR
from csm_bounds.commands.element_commands import cmd_regenerate_appendix_c, cmd_solve_elements
from csm_bounds.commands.fit_commands import cmd_extrapolate, cmd_fit_log
from csm_bounds.commands.oracle_commands import cmd_ed, cmd_gaussian_check
from csm_bounds.exceptions import CsmError
from csm_bounds.models import RunConfig, read_config
from csm_bounds.settings import get_settings

logger = logging.getLogger(__name__)

# argparse keys that are not RunConfig fields
_GLOBAL_KEYS = {"handler", "config", "log_level", "workers", "no_cache", "pair"}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for flagged results."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"❌ {self.prog}: {message}\n")
        raise SystemExit(EXIT_ERROR)


def _add_couplings(p: argparse.ArgumentParser, many: bool = False) -> None:
    nargs = "+" if many else None
    p.add_argument("--N", type=int, nargs=nargs, help="bath size(s) for exponential couplings")
    p.add_argument("--x", type=float, nargs=nargs, help="spread(s) x = N/N_0")
    p.add_argument("--h", type=float, nargs=nargs, help="field strength(s), units of J_Q when normalized")
    p.add_argument("--J", nargs="+", help="explicit couplings (integers, p/q or decimals)")
    p.add_argument("--couplings", help="couplings file, one value per line")
    p.add_argument("--normalization", type=str.upper, choices=["RAW", "SIGMA2_UNIT"],
                   help="SIGMA2_UNIT (default, h in units of J_Q) or RAW")
    p.add_argument("--precision-bits", type=int)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument("--format", choices=["csv", "json"])


def _add_bound_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", help="s0z, bz, or bb (field-field bound)")
    p.add_argument("--set", dest="quantity_set", help="named quantity set(s), comma-separated for scan")
    p.add_argument("--quantities", nargs="+", help="explicit descriptors, e.g. Iz IzH0^3 'Hlz[*]'")
    p.add_argument("--backend", help="TABLES, DENSE, SYMBOLIC or GAUSSIAN")
    p.add_argument("--m-max", type=int, help="Gaussian backend: number of odd powers I^z H_0^(2k-1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="app.py", description="Mazur lower bounds for the central spin model")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="flat key=value run configuration; flags override it")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR")
    parser.add_argument("--workers", type=int, help="thread pool width")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("bound", help="single bound computation")
    _add_couplings(p)
    _add_bound_options(p)
    _add_output(p)
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("scan", help="sweep N, x, h and quantity sets")
    _add_couplings(p, many=True)
    _add_bound_options(p)
    p.add_argument("--min-density", type=float, help="drop points with N < min_density * x (default 8)")
    _add_output(p)
    p.set_defaults(handler=cmd_scan)

    p = sub.add_parser("extrapolate", help="1/N extrapolation of a series")
    p.add_argument("--in", dest="input", help="CSV with `N,value` rows and a `# x=` header")
    p.add_argument("--x", type=float, nargs=1, help="override the spread from the header")
    p.add_argument("--degree", type=int, help="polynomial degree (default 3 for x <= 50, else 2)")
    p.add_argument("--min-density", type=float)
    _add_output(p)
    p.set_defaults(handler=cmd_extrapolate)

    p = sub.add_parser("fit-log", help="fit S(x) = A ln(x/B)/x")
    p.add_argument("--in", dest="input", help="CSV with `x,S` rows")
    p.add_argument("--xstart", dest="x_start", type=float)
    p.add_argument("--xend", dest="x_end", type=float)
    _add_output(p)
    p.set_defaults(handler=cmd_fit_log)

    p = sub.add_parser("solve-elements", help="solve closed-form scalar products")
    p.add_argument("--pair", nargs=2, action="append", metavar=("LHS", "RHS"),
                   help="repeatable; default: every zero-field table entry")
    p.add_argument("--with-field", action="store_true", default=None)
    p.add_argument("--no-cache", action="store_true", help="ignore the on-disk closed-form cache")
    _add_output(p)
    p.set_defaults(handler=cmd_solve_elements)

    p = sub.add_parser("regenerate-appendix-c", help="re-derive and verify the element table")
    p.add_argument("--with-field", action="store_true", default=None,
                   help="also re-derive the arbitrary-h entries with the solver")
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--seed", type=int)
    _add_output(p)
    p.set_defaults(handler=cmd_regenerate_appendix_c)

    p = sub.add_parser("ed", help="exact persisting correlation")
    _add_couplings(p)
    p.add_argument("--component", choices=["x", "z"])
    p.add_argument("--deg-tol", type=float, help="degeneracy tolerance relative to the spectral width")
    p.add_argument("--strict", action="store_true", default=None,
                   help="fail on ambiguous degeneracies instead of flagging")
    _add_output(p)
    p.set_defaults(handler=cmd_ed)

    p = sub.add_parser("gaussian-check", help="analytic Gaussian moments against Monte Carlo")
    _add_couplings(p)
    p.add_argument("--m-max", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    _add_output(p)
    p.set_defaults(handler=cmd_gaussian_check)
    return parser


def _as_list(value: Any) -> Any:
    if value is None or isinstance(value, list):
        return value
    return [value]


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = read_config(args.config) if args.config else RunConfig()
    overrides: Dict[str, Any] = {k: v for k, v in vars(args).items() if k not in _GLOBAL_KEYS}
    for key in ("N", "x", "h"):
        if key in overrides:
            overrides[key] = _as_list(overrides[key])
    if getattr(args, "no_cache", False):
        overrides["use_cache"] = False
    if getattr(args, "pair", None):
        overrides["pairs"] = [f"{lhs} {rhs}" for lhs, rhs in args.pair]
    return cfg.merged(overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_settings()
    if args.workers is not None:
        settings.workers = max(1, args.workers)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        cfg = config_from_args(args)
        logger.debug(f"Running {cfg.command} with {cfg.model_dump(exclude_defaults=True)}")
        return args.handler(cfg)
    except (CsmError, ValueError, OSError) as exc:
        sys.stderr.write(f"❌ {args.command}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
