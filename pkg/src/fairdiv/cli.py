"""Command-line front end.

Subcommands: ``solve``, ``check``, ``scan-r``, ``oracle``,
``counterexample``, ``version``.  Output goes to stdout as a single JSON
document (stable key order, so identical inputs give byte-identical
output); ``--pretty`` switches to an indented rendering, or to a plain-text
report for ``counterexample``.

Exit codes: 0 success/satisfied, 1 unsatisfied/none/failed-check, 2 usage
error (bad flags, malformed or oversized input, method/instance mismatch),
3 internal invariant failure.  The environment variable ``FAIRDIV_CAP``
overrides the enumeration cap used by ``oracle``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import __version__
from .algorithms import (
    ROUTE_IDENTICAL_PREFS,
    ROUTE_SINGLE_TYPE,
    ROUTE_TWO_TYPES,
    allocate_identical_prefs,
    allocate_single_type,
    allocate_two_types,
    route_for,
)
from .core import (
    Allocation,
    Instance,
    allocation_from_json,
    allocation_to_json,
    instance_from_json,
)
from .ef_feasibility import scan_min_r
from .errors import FairDivError, InvariantViolationError
from .fairness import CRITERIA, check_ef, check_ef1, check_efx
from .geometry import allocate_two_types_geometric, counterexample_t3
from .oracle import DEFAULT_CAP, EnumerationPlan, exists_fair

EXIT_OK = 0
EXIT_UNSATISFIED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

METHOD_GEOMETRIC = "geometric"

_CHECKERS = {"ef": check_ef, "ef1": check_ef1, "efx": check_efx}


class _UsageError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairdiv",
        description="Fair division of typed indivisible items with exact arithmetic.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="allocate an instance and report EFX")
    solve.add_argument("--instance", required=True, help="path to instance JSON")
    solve.add_argument(
        "--method",
        choices=["auto", ROUTE_IDENTICAL_PREFS, ROUTE_TWO_TYPES, METHOD_GEOMETRIC, ROUTE_SINGLE_TYPE],
        default="auto",
    )
    solve.add_argument("--trace", action="store_true", help="include the two-type trace")
    solve.add_argument("--pretty", action="store_true")

    check = sub.add_parser("check", help="check an allocation against a criterion")
    check.add_argument("--instance", required=True)
    check.add_argument("--allocation", required=True, help="path to allocation JSON")
    check.add_argument("--criterion", choices=list(CRITERIA), required=True)
    check.add_argument("--pretty", action="store_true")

    scan = sub.add_parser(
        "scan-r", help="smallest uniform supply with a certified EF cube"
    )
    scan.add_argument("--instance", required=True)
    scan.add_argument("--r-max", type=int, required=True)
    scan.add_argument("--radius-policy", choices=["r", "2r"], default="r")
    scan.add_argument("--pretty", action="store_true")

    oracle = sub.add_parser("oracle", help="brute-force existence by enumeration")
    oracle.add_argument("--instance", required=True)
    oracle.add_argument("--criterion", choices=list(CRITERIA))
    oracle.add_argument("--count-only", action="store_true")
    oracle.add_argument("--pretty", action="store_true")

    counter = sub.add_parser(
        "counterexample", help="replay the three-type stuck configuration"
    )
    counter.add_argument("--pretty", action="store_true")

    version = sub.add_parser("version", help="print the package version")
    version.add_argument("--pretty", action="store_true")

    return parser


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise _UsageError("io-error", f"cannot read {what} file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError("malformed-json", f"{what} file is not valid JSON: {exc}") from exc


def _load_instance(path: str) -> Instance:
    return instance_from_json(_load_json(path, "instance"))


def _load_allocation(path: str, instance: Instance) -> Allocation:
    return allocation_from_json(instance, _load_json(path, "allocation"))


def _oracle_cap() -> int:
    raw = os.environ.get("FAIRDIV_CAP")
    if raw is None:
        return DEFAULT_CAP
    try:
        return int(raw)
    except ValueError:
        raise _UsageError("bad-env", f"FAIRDIV_CAP must be an int, got {raw!r}") from None


def _emit(payload: dict, pretty: bool) -> None:
    print(json.dumps(payload, indent=2 if pretty else None))


def _cmd_solve(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    method = route_for(instance) if args.method == "auto" else args.method
    trace = None
    if method == ROUTE_SINGLE_TYPE:
        alloc = allocate_single_type(instance)
    elif method == ROUTE_IDENTICAL_PREFS:
        alloc = allocate_identical_prefs(instance)
    elif method == ROUTE_TWO_TYPES:
        alloc, trace = allocate_two_types(instance)
    else:
        alloc = allocate_two_types_geometric(instance)
    payload = {
        "method": method,
        "allocation": allocation_to_json(alloc),
        "efx": check_efx(alloc).to_json(),
    }
    if args.trace:
        payload["trace"] = trace.to_json() if trace is not None else None
    _emit(payload, args.pretty)
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    alloc = _load_allocation(args.allocation, instance)
    report = _CHECKERS[args.criterion](alloc)
    _emit(report.to_json(), args.pretty)
    return EXIT_OK if report.satisfied else EXIT_UNSATISFIED


def _cmd_scan_r(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    result = scan_min_r(instance.valuations, args.r_max, args.radius_policy)
    if result is None:
        _emit({"r": None, "xi_star": None, "certified_for": None}, args.pretty)
        return EXIT_UNSATISFIED
    _emit(result.to_json(), args.pretty)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    cap = _oracle_cap()
    if args.count_only:
        plan = EnumerationPlan.for_instance(instance, cap)
        _emit(
            {
                "total": plan.total,
                "per_type": list(plan.per_type_counts),
                "cap": plan.cap,
            },
            args.pretty,
        )
        return EXIT_OK
    if args.criterion is None:
        raise _UsageError("missing-flag", "oracle requires --criterion or --count-only")
    found = exists_fair(instance, args.criterion, cap)
    payload = {
        "criterion": args.criterion,
        "found": found is not None,
        "allocation": allocation_to_json(found) if found is not None else None,
    }
    _emit(payload, args.pretty)
    return EXIT_OK if found is not None else EXIT_UNSATISFIED


def _cmd_version(args: argparse.Namespace) -> int:
    _emit({"version": __version__}, args.pretty)
    return EXIT_OK


def _cmd_counterexample(args: argparse.Namespace) -> int:
    report = counterexample_t3()
    if args.pretty:
        for chk in report.checks:
            print(f"[{'PASS' if chk.passed else 'FAIL'}] {chk.name}: {chk.details}")
        print("all passed" if report.all_passed else "FAILURES present")
    else:
        _emit(report.to_json(), False)
    return EXIT_OK if report.all_passed else EXIT_UNSATISFIED


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, execute, and return the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "solve": _cmd_solve,
        "check": _cmd_check,
        "scan-r": _cmd_scan_r,
        "oracle": _cmd_oracle,
        "counterexample": _cmd_counterexample,
        "version": _cmd_version,
    }
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        _emit({"error": {"code": exc.code, "message": str(exc)}}, False)
        return EXIT_USAGE
    except InvariantViolationError as exc:
        _emit({"error": {"code": "invariant-violation", "message": str(exc)}}, False)
        return EXIT_INTERNAL
    except FairDivError as exc:
        code = type(exc).__name__.removesuffix("Error")
        kebab = "".join(
            "-" + ch.lower() if ch.isupper() else ch for ch in code
        ).lstrip("-")
        _emit({"error": {"code": kebab, "message": str(exc)}}, False)
        return EXIT_USAGE
    except AssertionError as exc:
        _emit({"error": {"code": "invariant-violation", "message": str(exc)}}, False)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
