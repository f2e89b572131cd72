"""Command line entry point ``phasegeom``.

Exit codes: 0 all checks pass, 1 verdict or identity failure, 2 configuration
error, 3 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as C
from .metrics import CATALOG as METRIC_CATALOG
from .perturbations import EM_CATALOG
from .report import emit
from .runner import NoSamplesError, run
from .structures import StructureConsistencyError

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

SUBCOMMAND_SUITES = {
    "verify": None,
    "classify": ("structures",),
    "identities": ("kinematics",),
}


def catalog_text() -> str:
    lines = ["metrics:"]
    lines += [f"  {name}" for name in sorted(METRIC_CATALOG)]
    lines.append("em fields:")
    lines += [f"  {name}" for name in sorted(EM_CATALOG)]
    lines.append("connection kinds: " + ", ".join(C.CONNECTION_KINDS))
    lines.append("connection phi kinds: " + ", ".join(C.PHI_KINDS))
    lines.append("perturbation kinds: " + ", ".join(C.PERTURBATION_KINDS))
    lines.append("sigma kinds: " + ", ".join(C.SIGMA_KINDS))
    lines.append("suites: " + ", ".join(C.SUITES))
    return "\n".join(lines) + "\n"


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON run configuration")
    common.add_argument("--metric", help="metric identifier (overrides the file)")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--tol", type=float, help="one tolerance for every identity class")
    common.add_argument("--c", type=float, help="speed of light constant")
    common.add_argument("--format", choices=("json", "markdown"), default="json")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="phasegeom", description="Verify phase-space geometric structures.")
    parser.add_argument("--list-catalog", action="store_true", help="list catalog identifiers and exit")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("verify", parents=[common], help="run every configured suite")
    sub.add_parser("classify", parents=[common], help="structures suite and classifier only")
    sub.add_parser("identities", parents=[common], help="kinematic identity suite only")
    sub.add_parser("catalog", help="list metrics, fields and constructions")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.list_catalog or args.command == "catalog":
        sys.stdout.write(catalog_text())
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = C.load(args.config) if args.config else C.RunConfig()
        cfg = cfg.with_overrides(metric=args.metric, seed=args.seed, samples=args.samples, tol=args.tol,
                                 c=args.c, suites=SUBCOMMAND_SUITES[args.command])
    except (C.ConfigError, ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg)
        text = emit(report, args.format)
    except (C.ConfigError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSamplesError, StructureConsistencyError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_VERDICT


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
