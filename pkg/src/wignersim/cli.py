"""Command-line interface.

Exit codes: 0 success, 2 negativity (program not samplable), 3 parse or
configuration error, 4 oracle size cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .circuit import DEFAULT_TOL, Circuit, audit, compile_to_wigner, load_circuit
from .errors import NotSamplable, TooLarge, WignerSimError
from .oracle import (
    DEFAULT_MAX_DENSE,
    OutcomeDistribution,
    chi_squared_test,
    compare_distributions,
    dense_simulate,
    robustness_experiment,
    wigner_chain_distribution,
)
from .sampler import sample_shots

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_CONFIG = 3
EXIT_TOO_LARGE = 4


class _ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ConfigError(message)


def _outcome_key(outcome) -> str:
    return ",".join(str(k) for k in outcome)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="positivity tolerance (default 1e-10)")
    common.add_argument("--max-dense", type=int, default=DEFAULT_MAX_DENSE, help="largest d**n for exact oracles")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="sampler workers; does not change output")

    parser = _Parser(prog="wignersim", description="Sample qudit circuits with positive Wigner functions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="audit Wigner negativity of every element")
    p.add_argument("circuit")

    p = sub.add_parser("sample", parents=[common], help="draw outcomes with the phase-space sampler")
    p.add_argument("circuit")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--json", action="store_true", help="JSON summary instead of CSV records")

    p = sub.add_parser("exact", parents=[common], help="exact distribution from both oracles")
    p.add_argument("circuit")

    p = sub.add_parser("compare", parents=[common], help="sample and compare against the exact distribution")
    p.add_argument("circuit")
    p.add_argument("--shots", type=int, required=True)

    p = sub.add_parser("perturb", parents=[common], help="robustness of outcomes to element errors")
    p.add_argument("circuit")
    p.add_argument("--epsilon", type=float, action="append", required=True)
    return parser


def _cmd_validate(c: Circuit, args) -> int:
    report = audit(c, args.tol)
    _emit(report.to_dict())
    return EXIT_OK if report.samplable else EXIT_NEGATIVE


def _cmd_sample(c: Circuit, args) -> int:
    if args.shots < 0:
        raise _ConfigError("--shots must be nonnegative")
    prog = compile_to_wigner(c, args.tol)
    counts = sample_shots(prog, args.shots, args.seed, threads=args.threads)
    if args.json:
        _emit({
            "shots": args.shots,
            "seed": args.seed,
            "counts": [{"outcome": list(k), "count": v} for k, v in counts.items()],
        })
    else:
        for outcome, count in counts.items():
            sys.stdout.write(f"{_outcome_key(outcome)},{count}\n")
    return EXIT_OK


def _exact(c: Circuit, args):
    prog = compile_to_wigner(c, args.tol)
    dense = dense_simulate(c, max_dense=args.max_dense)
    chain = wigner_chain_distribution(prog, max_points=args.max_dense**2)
    return prog, dense, chain


def _cmd_exact(c: Circuit, args) -> int:
    prog, dense, chain = _exact(c, args)
    _emit({
        "samplable": prog.samplable,
        "dense": {_outcome_key(k): p for k, p in dense.as_dict().items()},
        "wigner_chain": {_outcome_key(k): p for k, p in chain.as_dict().items()},
        "max_abs_difference": compare_distributions(dense, chain).linf,
    })
    return EXIT_OK


def _cmd_compare(c: Circuit, args) -> int:
    if args.shots <= 0:
        raise _ConfigError("--shots must be positive")
    prog, dense, _ = _exact(c, args)
    counts = sample_shots(prog, args.shots, args.seed, threads=args.threads)
    empirical = OutcomeDistribution.from_counts(c.d, counts, dense.shape)
    cmp = compare_distributions(empirical, dense)
    chi = chi_squared_test(counts, dense)
    _emit({
        "shots": args.shots,
        "seed": args.seed,
        **cmp.to_dict(),
        "chi2": {"statistic": chi.statistic, "dof": chi.dof, "pvalue": chi.pvalue},
    })
    return EXIT_OK


def _cmd_perturb(c: Circuit, args) -> int:
    if any(e < 0 for e in args.epsilon):
        raise _ConfigError("--epsilon must be nonnegative")
    if c.d**c.n > args.max_dense:
        raise TooLarge(f"robustness experiment needs d**n = {c.d**c.n} <= {args.max_dense}")
    report = robustness_experiment(c, args.epsilon, seed=args.seed, tol=args.tol, max_points=args.max_dense**2)
    _emit(report.to_dict())
    return EXIT_OK


COMMANDS = {
    "validate": _cmd_validate,
    "sample": _cmd_sample,
    "exact": _cmd_exact,
    "compare": _cmd_compare,
    "perturb": _cmd_perturb,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        c = load_circuit(args.circuit)
        return COMMANDS[args.command](c, args)
    except NotSamplable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (_ConfigError, WignerSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())
