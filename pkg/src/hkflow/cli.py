"""Command-line front end.

Commands: `space` builds example spaces and generators, `dist` computes a
distance or divergence between two measure files, `flow` evolves a measure
under the adjoint heat semigroup, and `verify` runs the inequality suite.

Exit codes: 0 success, 1 check failure, 2 input validation, 3 operation
precondition (mass mismatch, non-dominating measure), 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import divergences as dv
from . import heat, spaces, transport
from .hk import hk as hk_solve
from .suite import run_suite, validate_config

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_INTERNAL = 4


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _add_shared(parser, suppress=False):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="override the suite seed")
    parser.add_argument("--threads", type=int, default=d, help="worker pool size for verify")
    parser.add_argument(
        "--strict",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="treat inconclusive checks as failures",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hkflow",
        description="distances, divergences and heat-flow inequality checks on finite metric-measure spaces",
    )
    _add_shared(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="write a space (and generator) to JSON files")
    _add_shared(sp, suppress=True)
    sp.add_argument("kind", choices=["cycle", "ou", "custom"])
    sp.add_argument("--n", type=int, default=8, help="point count (cycle)")
    sp.add_argument("--length", type=float, default=2 * math.pi, help="circumference (cycle)")
    sp.add_argument("--h", type=float, default=0.1, help="grid spacing (ou)")
    sp.add_argument("--radius", type=float, default=5.0, help="grid half-width (ou)")
    sp.add_argument("--input", help="space JSON to validate (custom)")
    sp.add_argument("--out", required=True, help="output path for the space JSON")
    sp.add_argument("--generator-out", help="output path for the generator JSON (cycle/ou)")

    dist = sub.add_parser("dist", help="distance/divergence between two measure files")
    _add_shared(dist, suppress=True)
    dist.add_argument("metric", choices=["he", "tv", "wp", "hk", "kl", "csiszar"])
    dist.add_argument("space", help="space JSON file")
    dist.add_argument("mu0", help="first measure JSON file")
    dist.add_argument("mu1", help="second measure JSON file")
    dist.add_argument("--p", type=float, default=2.0, help="exponent for he/wp")
    dist.add_argument("--alpha", type=float, default=1.0, help="scale parameter for hk")
    dist.add_argument("--entropy", default="E1", help="entropy function for csiszar (E<p> or F<p>)")
    dist.add_argument("--epsilon-schedule", type=float, nargs="+", default=None)
    dist.add_argument("--max-iter", type=int, default=None)
    dist.add_argument("--tol", type=float, default=None)

    flow = sub.add_parser("flow", help="evolve a measure by the adjoint heat semigroup")
    _add_shared(flow, suppress=True)
    flow.add_argument("generator", help="generator JSON file")
    flow.add_argument("mu", help="measure JSON file")
    flow.add_argument("--t", type=float, required=True)
    flow.add_argument("--out", required=True)

    verify = sub.add_parser("verify", help="run the verification suite")
    _add_shared(verify, suppress=True)
    verify.add_argument("--config", help="suite config JSON; bundled default when omitted")
    verify.add_argument("--out", help="report output path")
    verify.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def _cmd_space(args) -> int:
    if args.kind == "cycle":
        space = spaces.cycle_space(args.n, args.length)
        gen = heat.cycle_generator(args.n, args.length)
    elif args.kind == "ou":
        gen = heat.ou_generator(args.h, args.radius)
        space = gen.space
    else:
        if not args.input:
            print("custom space needs --input", file=sys.stderr)
            return EXIT_INVALID_INPUT
        space = spaces.load_space(args.input)
        gen = None
    spaces.save_space(space, args.out)
    print(f"wrote space with {space.n} points to {args.out}")
    if gen is not None and args.generator_out:
        ref = os.path.relpath(os.path.abspath(args.out), os.path.dirname(os.path.abspath(args.generator_out)))
        with open(args.generator_out, "w") as f:
            f.write(gen.to_json(ref))
        print(f"wrote generator to {args.generator_out}")
    return EXIT_OK


def _cmd_dist(args) -> int:
    space = spaces.load_space(args.space)
    mu0 = spaces.load_measure(args.mu0)
    mu1 = spaces.load_measure(args.mu1)
    if mu0.n != space.n or mu1.n != space.n:
        print(f"measures must have {space.n} entries", file=sys.stderr)
        return EXIT_INVALID_INPUT
    if args.metric == "he":
        print(_fmt(dv.hellinger(args.p, mu0, mu1)))
    elif args.metric == "tv":
        print(_fmt(dv.hellinger(1.0, mu0, mu1)))
    elif args.metric == "kl":
        print(_fmt(dv.kl_divergence(mu0, mu1)))
    elif args.metric == "csiszar":
        F = dv.hellinger_entropy(float(args.entropy[1:])) if args.entropy.startswith("F") \
            else dv.power_entropy(float(args.entropy[1:]))
        print(_fmt(dv.csiszar(F, mu0, mu1)))
    elif args.metric == "wp":
        value, _ = transport.wasserstein(space, mu0, mu1, args.p)
        print(_fmt(value))
    else:
        opts = {}
        if args.epsilon_schedule:
            opts["epsilon_schedule"] = tuple(args.epsilon_schedule)
        if args.max_iter:
            opts["max_iter"] = args.max_iter
        if args.tol:
            opts["tol"] = args.tol
        sol = hk_solve(space, mu0, mu1, args.alpha, **opts)
        print(f"{_fmt(sol.distance)} gap={_fmt(sol.gap_estimate)} converged={sol.converged}")
    return EXIT_OK


def _cmd_flow(args) -> int:
    gen = heat.load_generator(args.generator)
    mu = spaces.load_measure(args.mu)
    if mu.n != gen.n:
        print(f"measure must have {gen.n} entries", file=sys.stderr)
        return EXIT_INVALID_INPUT
    out = heat.heat_dual(gen, args.t, mu)
    spaces.save_measure(out, args.out)
    print(f"wrote evolved measure (mass {_fmt(out.total())}) to {args.out}")
    return EXIT_OK


def default_config() -> dict:
    with resources.files("hkflow").joinpath("data/default_config.json").open() as f:
        return json.load(f)


def _cmd_verify(args) -> int:
    if args.config:
        with open(args.config) as f:
            config = json.load(f)
    else:
        config = default_config()
    if args.seed is not None:
        config = dict(config)
        config["seed"] = args.seed
    config = validate_config(config)
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    report = run_suite(config, threads=max(threads, 1))
    if args.out:
        with open(args.out, "w") as f:
            f.write(report.to_json() if args.format == "json" else report.to_csv())
    print(report.summary_text())
    if args.out:
        print(f"report written to {args.out}")
    return EXIT_OK if report.ok(strict=args.strict) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "space":
            return _cmd_space(args)
        if args.command == "dist":
            return _cmd_dist(args)
        if args.command == "flow":
            return _cmd_flow(args)
        return _cmd_verify(args)
    except (spaces.MetricViolation, spaces.NonpositiveReference) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except (transport.MassMismatch, dv.NonDominating) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
