"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, verify
from .model import InvalidInstanceError, NetworkInstance, SolverConfig, SolverError
from .scenario import LayoutConfig, generate_instance

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uplink-maxmin",
                                     description="Max-min SINR uplink association and power control.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="draw one network instance from a layout config")
    gen.add_argument("--config", required=True, type=Path)
    gen.add_argument("--seed", required=True, type=_u64)
    gen.add_argument("--out", required=True, type=Path)

    sol = sub.add_parser("solve", help="solve one instance file")
    sol.add_argument("--instance", required=True, type=Path)
    sol.add_argument("--algorithm", required=True, choices=harness.ALGORITHMS)
    sol.add_argument("--gamma-tol", type=float, default=SolverConfig.gamma_tol)
    sol.add_argument("--tol", type=float, default=SolverConfig.tol)
    sol.add_argument("--out", required=True, type=Path)

    sw = sub.add_parser("sweep", help="Monte Carlo sweep over SNR")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--algorithms", required=True, type=_names)
    sw.add_argument("--snr", required=True, type=_floats, help="SNR points in dB, e.g. 0,5,10")
    sw.add_argument("--trials", required=True, type=int)
    sw.add_argument("--seed", required=True, type=_u64)
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.add_argument("--out", required=True, type=Path)
    sw.add_argument("--workers", type=int, default=1)

    ver = sub.add_parser("verify", help="run the built-in property checks")
    ver.add_argument("--suite", choices=("siso", "simo", "all"), default="all")
    ver.add_argument("--trials", type=int)
    return parser


def _generate(args):
    cfg = LayoutConfig.load(args.config)
    generate_instance(cfg, args.seed).save(args.out)
    return EXIT_OK


def _solve(args):
    inst = NetworkInstance.load(args.instance)
    cfg = SolverConfig(tol=args.tol, gamma_tol=args.gamma_tol)
    res = harness.solve(inst, args.algorithm, cfg)
    args.out.write_text(json.dumps(res.to_dict(), indent=1))
    print(f"{args.algorithm}: gamma*={res.gamma_star:.6g} ({res.gamma_star_db:.3f} dB) "
          f"iterations={res.iterations} status={res.status.value}")
    return EXIT_OK


def _sweep(args):
    cfg = LayoutConfig.load(args.config)
    for a in args.algorithms:
        if a not in harness.ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    summary = harness.run_sweep(cfg, args.algorithms, args.snr, args.trials, args.seed, workers=args.workers)
    harness.emit(summary, args.format, args.out)
    for (alg, snr), st in summary.stats.items():
        print(f"{alg:>12} snr={snr:g} dB trials={st['trials']} mean gamma*={st['mean_gamma_star']:.6g} "
              f"median iterations={st['median_iterations']:g}")
    if summary.failures:
        print(f"{len(summary.failures)} failed runs", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _verify(args):
    results = verify.run_suite(args.suite, args.trials)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {"generate": _generate, "solve": _solve, "sweep": _sweep, "verify": _verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidInstanceError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
