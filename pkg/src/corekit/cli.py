"""Command-line entry point.

Subcommands: offline / stream / mergereduce build a coreset from a file and
report quality; eval scores an existing coreset dump against its source;
oracle runs the small-instance reference computations; gen writes synthetic
Gaussian-mixture streams.

Exit codes: 0 success, 2 bad configuration, 3 bad data, 4 internal
invariant violation.  --seed is required unless COR_SEED is set.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import metric, solvers
from .dataio import DataError, read_points, write_report
from .harness import ConfigError, ExperimentConfig, evaluate, gen_mixture, \
    make_queries, run
from .weighted import brute_sensitivity, default_candidates

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="point file (stream order)")
    p.add_argument("--format", default="csv", choices=["csv", "sparse"])
    p.add_argument("--weighted", action="store_true",
                   help="first column/token is the point weight")
    p.add_argument("--model", default="kmeans",
                   help="kmeans | kmedian | lp:P | huber:C | cauchy:C | tukey:C")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--c-const", type=float, default=0.02, dest="c_const")
    p.add_argument("--alpha-bar", type=float, default=5.0, dest="alpha_bar")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--query-count", type=int, default=40, dest="query_count")
    p.add_argument("--d-q", type=float, default=None, dest="d_q",
                   help="query-space dimension override for sample sizing")
    p.add_argument("--output", default=None, help="JSON report path")
    p.add_argument("--coreset-out", default=None, dest="coreset_out")
    p.add_argument("--measure-time", action="store_true", dest="measure_time")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corekit",
                                 description="coreset construction and evaluation")
    sub = ap.add_subparsers(dest="cmd", required=True)

    for mode in ("offline", "stream", "mergereduce"):
        p = sub.add_parser(mode, help=f"{mode} coreset build + quality report")
        _add_common(p)
        if mode == "stream":
            p.add_argument("--schedule", default="sensitivity",
                           choices=["sensitivity", "algorithm1"])
            p.add_argument("--m", type=int, default=None,
                           help="sample scale for schedule=algorithm1")
            p.add_argument("--phi", type=float, default=None)
            p.add_argument("--gamma", type=float, default=None)
        if mode in ("stream", "mergereduce"):
            p.add_argument("--n-bound", type=int, default=None, dest="n_bound",
                           help="stream length bound (default: file length)")

    p = sub.add_parser("eval", help="score an existing coreset dump")
    p.add_argument("--input", required=True)
    p.add_argument("--coreset", required=True,
                   help="weighted dump produced by --coreset-out")
    p.add_argument("--format", default="csv", choices=["csv", "sparse"])
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--model", default="kmeans")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--query-count", type=int, default=40, dest="query_count")
    p.add_argument("--output", default=None)

    p = sub.add_parser("oracle", help="brute-force references on small inputs")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "sparse"])
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--model", default="kmeans")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None)

    p = sub.add_parser("gen", help="write a synthetic Gaussian-mixture stream")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--spread", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True)
    return ap


def _seed_of(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("COR_SEED")
    if env is None:
        raise ConfigError("--seed is required (or set COR_SEED)")
    try:
        return int(env)
    except ValueError as e:
        raise ConfigError(f"COR_SEED must be an integer, got {env!r}") from e


def _cmd_build(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        input=args.input, mode=args.cmd, model=args.model, fmt=args.format,
        weighted=args.weighted, k=args.k, eps=args.eps, delta=args.delta,
        c_const=args.c_const, alpha_bar=args.alpha_bar,
        schedule=getattr(args, "schedule", "sensitivity"),
        m=getattr(args, "m", None), phi=getattr(args, "phi", None),
        gamma=getattr(args, "gamma", None),
        n_bound=getattr(args, "n_bound", None), d_q=args.d_q,
        seed=_seed_of(args), query_count=args.query_count,
        output=args.output, coreset_out=args.coreset_out,
        measure_time=args.measure_time)
    report = run(cfg)
    print(f"{cfg.mode}: n={report['n']} coreset={report['coreset']['points']} "
          f"max_rel_err={report['errors']['max']:.4f} "
          f"mean_rel_err={report['errors']['mean']:.4f}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    seed = _seed_of(args)
    model = metric.model_from_spec(args.model)
    P = read_points(args.input, args.format, args.weighted)
    S = read_points(args.coreset, args.format, weighted=True)
    queries = make_queries(model, P, S, args.k, args.query_count, seed)
    section = evaluate(model, P, S, queries)
    report = {"schema": 1, "mode": "eval", "n": len(P.points),
              "coreset": {"points": len(S.points), "weight": S.total_weight},
              "errors": section}
    if args.output:
        write_report(args.output, report)
    print(f"eval: max_rel_err={section['max']:.4f} mean_rel_err={section['mean']:.4f}")
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    seed = _seed_of(args)
    model = metric.model_from_spec(args.model)
    P = read_points(args.input, args.format, args.weighted)
    n = len(P.points)
    if n > 64:
        raise ConfigError(f"oracle path is exponential; {n} points > 64")
    queries = default_candidates(model, P, args.k, seed)
    prof = brute_sensitivity(model, P, args.k, queries)
    report = {
        "schema": 1, "mode": "oracle", "n": n, "k": args.k,
        "sensitivities": [float(s) for s in prof.s],
        "total_sensitivity": prof.total,
        "opt_lower_bound": solvers.opt_lower_bound(model, P, args.k, seed),
    }
    if n <= solvers.EXACT_MAX_N and args.k <= solvers.EXACT_MAX_K:
        report["exact_cost"] = solvers.exact_partition(model, P, args.k).cost
    if args.output:
        write_report(args.output, report)
    print(f"oracle: n={n} total_sensitivity={prof.total:.6f}")
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace) -> int:
    rows = gen_mixture(args.n, args.clusters, args.dim, args.spread,
                       _seed_of(args))
    lines = [",".join(repr(float(v)) for v in row) for row in rows]
    with open(args.output, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"gen: wrote {args.n} points to {args.output}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        if args.cmd in ("offline", "stream", "mergereduce"):
            return _cmd_build(args)
        if args.cmd == "eval":
            return _cmd_eval(args)
        if args.cmd == "oracle":
            return _cmd_oracle(args)
        if args.cmd == "gen":
            return _cmd_gen(args)
        raise ConfigError(f"unknown command {args.cmd!r}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (AssertionError, ValueError, RuntimeError, ArithmeticError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
