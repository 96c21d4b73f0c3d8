"""Command-line front end: solve a problem file, write a result file."""

from __future__ import annotations

import argparse
import os
import sys

from .engine import SolverOptions, solve
from .fileio import ProblemFormatError, parse_problem, write_result

USAGE_EXIT = 64

# A definitive answer (optimal or a certified infeasibility) exits 0; hitting
# a resource limit or a numerical failure exits 1.
_DEFINITIVE_CODES = {0, 2, 3, 4, 5}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="conic-pdhg", description=__doc__)
    p.add_argument("--input", required=True, help="problem file (JSON)")
    p.add_argument("--output", help="result file to write (JSON)")
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--abs-tol", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=1000.0, help="seconds")
    p.add_argument("--max-iter", type=int, default=1_000_000)
    p.add_argument("--method", choices=("average", "halpern"), default="halpern")
    p.add_argument("--no-preconditioner", action="store_true")
    p.add_argument("--no-adaptive-restart", action="store_true")
    p.add_argument("--kkt-restart", action="store_true")
    p.add_argument("--kkt-restart-freq", type=int, default=2000)
    p.add_argument("--gap-restart-freq", type=int, default=2000)
    p.add_argument("--print-freq", type=int, default=2000)
    p.add_argument("--verbose", type=int, choices=(0, 1, 2), default=0)
    p.add_argument("--logfile", help="write iteration log lines to this file")
    p.add_argument("--seed", type=int, default=None,
                   help="reserved for future randomized features; currently unused")
    return p


def options_from_args(args) -> SolverOptions:
    return SolverOptions(
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        time_limit=args.time_limit,
        max_iter=args.max_iter,
        method=args.method,
        use_preconditioner=not args.no_preconditioner,
        use_adaptive_restart=not args.no_adaptive_restart,
        use_kkt_restart=args.kkt_restart,
        kkt_restart_freq=args.kkt_restart_freq,
        duality_gap_restart_freq=args.gap_restart_freq,
        print_freq=args.print_freq,
        verbose=args.verbose,
        logfile=args.logfile,
    )


def _parse_workers_env() -> int | None:
    """CONIC_PDHG_THREADS caps internal data-parallel workers.  The current
    kernels are sequential, so the value is validated and recorded only."""
    raw = os.environ.get("CONIC_PDHG_THREADS")
    if raw is None:
        return None
    try:
        workers = int(raw)
    except ValueError as exc:
        raise SystemExit(f"CONIC_PDHG_THREADS must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise SystemExit("CONIC_PDHG_THREADS must be at least 1")
    return workers


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    _parse_workers_env()

    try:
        problem = parse_problem(args.input)
    except FileNotFoundError:
        sys.stderr.write(f"error: no such file: {args.input}\n")
        return USAGE_EXIT
    except (ProblemFormatError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_EXIT

    options = options_from_args(args)
    try:
        options.validate()
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_EXIT

    result = solve(problem, options)
    if args.output:
        write_result(result, options, args.output)
    if args.verbose >= 1:
        print(f"exit_status {result.exit_status} pObj {result.p_obj:.9e} dObj {result.d_obj:.9e}")
    return 0 if result.exit_code in _DEFINITIVE_CODES else 1


if __name__ == "__main__":
    raise SystemExit(main())
