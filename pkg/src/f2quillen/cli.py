"""Command line interface.

Exit codes: 0 when every verdict holds, 1 when some verdict is false,
2 for configuration errors, 3 when a higher-limits run exceeds its budget.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from . import __version__
from .groups import GroupError, get_group
from .limits import DEFAULT_BUDGET, DEFAULT_S_MAX, BudgetExceeded
from .reports import (
    ConfigError,
    RunConfig,
    catalog_report,
    cohomology_report,
    dumps,
    higher_limits_report,
    quillen_report,
    render,
    table_csv,
    table_report,
)
from .resolve import CACHE_ENV, DEFAULT_MAX_DEGREE, ResolutionError, default_cache_dir

EXIT_OK, EXIT_FALSE, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 already; keep the message short
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, group: bool = True, degree: bool = True) -> None:
    if group:
        p.add_argument("--group", required=True, help="catalog group id, see list-groups")
    if degree:
        p.add_argument("--max-degree", type=int, default=DEFAULT_MAX_DEGREE, help="cohomological degree bound N")
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--cache-dir", default=None, help=f"resolution cache directory (default ${CACHE_ENV})")


def _verdict_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nilpotence-k", type=int, default=4, help="check that the k-th power of the kernel ideal vanishes")
    p.add_argument("--power-e", type=int, default=3, help="check that u^(2^e) lifts for every lim0 basis class u")
    p.add_argument("--power-degree", type=int, default=None, help="degree bound for the power check (default 2^(e+1))")
    p.add_argument("--s-max", type=int, default=DEFAULT_S_MAX, help="highest s for lim^s")
    p.add_argument("--limits-degree", type=int, default=1, help="coefficient degrees 0..L for reported higher limits")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="bound on elimination storage for the cobar differentials, in bits")
    p.add_argument("--timing", action="store_true", help="include wall times")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="f2quillen", description="Mod-2 group cohomology and the Quillen comparison for small 2-groups")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("list-groups", help="list the group catalog")
    p.add_argument("--order", type=int, default=None, help="only groups of this order")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("cohomology", help="Betti numbers, generators and products")
    _common(p)
    p.add_argument("--no-products", action="store_true", help="omit the product table from JSON")

    p = sub.add_parser("quillen", help="edge map, nilpotence and power verdicts for one group")
    _common(p)
    _verdict_opts(p)

    p = sub.add_parser("higher-limits", help="dim lim^s of H^t over the elementary abelian family")
    _common(p, degree=False)
    p.add_argument("--coeff-degree", type=int, required=True, help="degree t of the coefficient system H^t")
    p.add_argument("--s-max", type=int, default=DEFAULT_S_MAX, help="highest s for lim^s")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="bound on elimination storage, in bits")

    p = sub.add_parser("table", help="verification summary for many groups")
    p.add_argument("--group", action="append", default=None, help="group id; repeat for several (default: all of order <= 16)")
    _common(p, group=False)
    _verdict_opts(p)
    p.add_argument("--csv", action="store_true", help="emit CSV")
    p.add_argument("--jobs", type=int, default=1, help="worker processes, one group per task")

    p = sub.add_parser("render", help="render a saved JSON report as text")
    p.add_argument("path")
    return parser


def _config(args: argparse.Namespace, groups: list[str]) -> RunConfig:
    cfg = RunConfig(
        groups=groups,
        max_degree=args.max_degree,
        nilpotence_k=args.nilpotence_k,
        power_e=args.power_e,
        power_degree=args.power_degree,
        s_max=args.s_max,
        limits_degree=min(args.limits_degree, args.max_degree),
        budget=args.budget,
        cache_dir=args.cache_dir or default_cache_dir(),
        jobs=getattr(args, "jobs", 1),
        timing=args.timing,
    )
    cfg.validate()
    return cfg


def _emit(doc: dict, as_json: bool) -> None:
    sys.stdout.write(dumps(doc) if as_json else render(doc))


def _run(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "list-groups":
        _emit(catalog_report(args.order), args.json)
        return EXIT_OK
    if cmd == "render":
        with open(args.path, encoding="utf-8") as fh:
            sys.stdout.write(render(json.load(fh)))
        return EXIT_OK
    if cmd == "cohomology":
        if not 0 <= args.max_degree <= 20:
            raise ConfigError("max degree must lie in 0..20")
        doc = cohomology_report(get_group(args.group), args.max_degree, args.cache_dir or default_cache_dir(), not args.no_products)
        _emit(doc, args.json)
        return EXIT_OK
    if cmd == "higher-limits":
        if args.coeff_degree < 0 or args.coeff_degree > 20:
            raise ConfigError("coefficient degree must lie in 0..20")
        if not 0 <= args.s_max <= 6:
            raise ConfigError("s_max must lie in 0..6")
        g = get_group(args.group)
        try:
            doc = higher_limits_report(g, args.coeff_degree, args.s_max, args.budget, args.cache_dir or default_cache_dir())
        except BudgetExceeded as exc:
            print(f"f2quillen: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        _emit(doc, args.json)
        return EXIT_OK if doc["dd_zero"] else EXIT_FALSE
    if cmd == "quillen":
        cfg = _config(args, [args.group])
        doc = quillen_report(get_group(args.group), cfg)
        _emit(doc, args.json)
        return EXIT_OK if doc["nilpotence"]["verdict"] and doc["power"]["verdict"] else EXIT_FALSE
    if cmd == "table":
        cfg = _config(args, args.group or [])
        doc = table_report(cfg)
        if args.csv:
            sys.stdout.write(table_csv(doc))
        else:
            _emit(doc, args.json)
        return EXIT_OK if doc["all_verdicts"] else EXIT_FALSE
    raise ConfigError(f"unknown command {cmd!r}")


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="f2quillen: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except KeyError as exc:
        print(f"f2quillen: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, GroupError, ResolutionError, ValueError, OSError) as exc:
        print(f"f2quillen: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
