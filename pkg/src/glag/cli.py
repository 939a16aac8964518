"""Command-line interface.

Subcommands::

    glag match A.graph B.graph --out-perm P.perm --out-report R.json
    glag sweep --generator er --p 50 --m 150 --noise 0,5,10 --out sweep.csv
    glag multimodal --weights-a gaussian:1,0.4 --weights-b gaussian:4,1 --out mm.csv
    glag infer --data-a a.csv --data-b b.csv --lam 0.1 --out-a A.prec --out-b B.prec
    glag infer --bench --p 20 --k 4000 --out bench.csv
    glag gen --model er --p 100 --m 300 --seed 7 --out g.graph
    glag project M.mat --out D.mat

Exit status is 0 on success, 1 on invalid input and 2 when a solver stopped
before reaching its tolerance (results are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, harness
from .baselines import BaselineConfig, faq_match, qcp_match
from .errors import ConvergenceError, FormatError, ParameterError
from .graphs import (
    assign_weights,
    parse_weight_model,
    read_graph,
    read_matrix,
    write_graph,
    write_matrix,
    write_permutation,
    write_precision,
)
from .inference import joint_infer_unaligned
from .matcher import GlagConfig, glag_match, matching_error
from .polytope import PROJECTION_MAX_ITER, PROJECTION_TOL, project_doubly_stochastic

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2

log = logging.getLogger("glag")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which is reserved for non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _weights(text):
    if text.lower() == "none":
        return None
    try:
        return parse_weight_model(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Model:
    def __init__(self, model):
        self.model = model


def _weights_or_none(text):
    return _Model(_weights(text))


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _existing(path):
    p = Path(path)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return p


# -- subcommands ---------------------------------------------------------------------

def cmd_match(args):
    A, B = read_graph(args.graph_a), read_graph(args.graph_b)
    if A.p != B.p:
        raise ParameterError(f"dimension mismatch: {args.graph_a} has p={A.p}, "
                             f"{args.graph_b} has p={B.p}")
    t0 = time.perf_counter()
    if args.method == "glag":
        kw = {"c": args.c}
        if args.tol is not None:
            kw["eps_abs"] = kw["eps_rel"] = args.tol
        if args.max_iter is not None:
            kw["max_iter"] = args.max_iter
        result = glag_match(A, B, GlagConfig(**kw))
    else:
        kw = {k: v for k, v in (("tol", args.tol), ("max_iter", args.max_iter)) if v is not None}
        fn = qcp_match if args.method == "qcp" else faq_match
        result = fn(A, B, BaselineConfig(**kw))
    seconds = time.perf_counter() - t0
    write_permutation(result.P_star, args.out_perm)
    report = {
        "method": result.method,
        "p": A.p,
        "objective": result.objective,
        "matching_error": matching_error(A, B, result.P_star),
        "iterations": result.iterations,
        "converged": result.converged,
        "seconds": seconds,
    }
    if args.out_report:
        Path(args.out_report).write_text(json.dumps(report, indent=2) + "\n")
    log.info("matching error %.6g after %d iterations", report["matching_error"], result.iterations)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _sweep_spec(args, multimodal):
    kw = harness.parse_config(Path(args.config).read_text()) if args.config else {}
    params = dict(kw.get("params", {}))
    for key in ("m", "m_attach", "mu"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if params:
        kw["params"] = params
    flags = {
        "generator": args.generator, "p": args.p, "noise_levels": args.noise,
        "trials": args.trials, "matchers": args.matchers, "seed_base": args.seed_base,
        "external_dir": args.external_dir, "dump_dir": args.dump_dir,
    }
    kw.update({k: v for k, v in flags.items() if v is not None})
    if multimodal:
        kw["weights_a"], kw["weights_b"] = args.weights_a, args.weights_b
    elif args.weights is not None:
        # 'none' is a valid value here and means unweighted
        kw["weights_a"] = kw["weights_b"] = args.weights.model
    solver = {k: v for k, v in (("c", args.c), ("max_iter", args.max_iter)) if v is not None}
    if solver:
        kw["glag"] = replace(kw.get("glag", GlagConfig()), **solver)
    return harness.SweepSpec(**kw)


def _cmd_sweep(args, multimodal):
    spec = _sweep_spec(args, multimodal)
    run = harness.run_multimodal_sweep if multimodal else harness.run_noise_sweep
    result = run(spec, jobs=args.jobs)
    result.write_csv(args.out)
    if args.summary:
        result.write_summary(args.summary)
    failures = sum(a.failures for a in result.summary().values())
    if failures:
        log.warning("%d matcher runs failed; see the error markers in %s", failures, args.out)
    return EXIT_OK


def cmd_sweep(args):
    return _cmd_sweep(args, multimodal=False)


def cmd_multimodal(args):
    return _cmd_sweep(args, multimodal=True)


def _read_data(path):
    try:
        X = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"not a numeric CSV with one header row: {exc}", path) from None
    return X


def cmd_infer(args):
    if args.bench:
        if not args.out:
            raise ParameterError("--bench needs --out")
        rows = harness.run_inference_bench(
            p=args.p, k=args.k, n_edges=args.n_edges, lam=args.lam, trials=args.trials,
            seed=args.seed, group_weight=args.group_weight or harness.DEFAULT_GROUP_WEIGHT)
        harness.write_inference_csv(rows, args.out)
        log.info("joint estimate at least as good in %.0f%% of trials",
                 100 * harness.joint_win_rate(rows))
        return EXIT_OK
    if not (args.data_a and args.data_b):
        raise ParameterError("give --data-a and --data-b, or --bench")
    if not (args.out_a and args.out_b):
        raise ParameterError("give --out-a and --out-b for the precision estimates")
    Xa, Xb = _read_data(args.data_a), _read_data(args.data_b)
    pair = joint_infer_unaligned(Xa, Xb, args.lam, rounds=args.rounds,
                                 group_weight=args.group_weight or 1.0)
    write_precision(pair.theta_a.Theta, args.out_a)
    write_precision(pair.theta_b.Theta, args.out_b)
    if args.out_perm:
        write_permutation(pair.perm, args.out_perm)
    return EXIT_OK


def cmd_gen(args):
    params = {k: getattr(args, k) for k in ("m", "m_attach", "mu") if getattr(args, k) is not None}
    g = harness.generate(args.model, args.p, params, args.seed)
    if args.weights is not None:
        g = assign_weights(g, args.weights, np.random.SeedSequence([args.seed, 1]).entropy)
    write_graph(g, args.out)
    return EXIT_OK


def cmd_project(args):
    M = read_matrix(args.matrix)
    D = project_doubly_stochastic(M, tol=args.tol, max_iter=args.max_iter)
    write_matrix(D, args.out)
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def _add_sweep_flags(sp, multimodal):
    sp.add_argument("--config", type=_existing, help="key=value sweep configuration file")
    sp.add_argument("--generator", choices=sorted(harness.GENERATORS))
    sp.add_argument("--p", type=int)
    sp.add_argument("--m", type=int, help="edge count (er)")
    sp.add_argument("--m-attach", dest="m_attach", type=int, help="attachment count (ba)")
    sp.add_argument("--mu", type=float, help="geometric degree parameter (bter)")
    if multimodal:
        sp.add_argument("--weights-a", type=_weights, default=parse_weight_model("gaussian:1,0.4"))
        sp.add_argument("--weights-b", type=_weights, default=parse_weight_model("gaussian:4,1"))
    else:
        sp.add_argument("--weights", type=_weights_or_none,
                        help="edge weight model, e.g. uniform:0.5,1.5, or 'none'")
    sp.add_argument("--noise", type=_int_list, help="comma-separated noise edge counts")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--matchers", type=_str_list, help="comma-separated subset of "
                    + ",".join(harness.MATCHERS))
    sp.add_argument("--seed-base", dest="seed_base", type=int)
    sp.add_argument("--c", type=float)
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--external-dir", dest="external_dir")
    sp.add_argument("--dump-dir", dest="dump_dir")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", required=True, help="result CSV")
    sp.add_argument("--summary", help="optional per-level summary CSV")


def build_parser():
    parser = _Parser(prog="glag", description="Group-lasso graph matching toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("match", help="match two graph files")
    sp.add_argument("graph_a", type=_existing)
    sp.add_argument("graph_b", type=_existing)
    sp.add_argument("--method", choices=("glag", "qcp", "faq"), default="glag")
    sp.add_argument("--c", type=float, default=GlagConfig.c)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--out-perm", dest="out_perm", required=True)
    sp.add_argument("--out-report", dest="out_report")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("sweep", help="noise sweep over generated graphs")
    _add_sweep_flags(sp, multimodal=False)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("multimodal", help="sweep with different weight laws per side")
    _add_sweep_flags(sp, multimodal=True)
    sp.set_defaults(func=cmd_multimodal)

    sp = sub.add_parser("infer", help="joint precision estimation on unaligned data")
    sp.add_argument("--data-a", dest="data_a", type=_existing)
    sp.add_argument("--data-b", dest="data_b", type=_existing)
    sp.add_argument("--lam", type=float, default=harness.DEFAULT_BENCH_LAMBDA)
    sp.add_argument("--rounds", type=int, default=10)
    sp.add_argument("--group-weight", dest="group_weight", type=float)
    sp.add_argument("--out-a", dest="out_a")
    sp.add_argument("--out-b", dest="out_b")
    sp.add_argument("--out-perm", dest="out_perm")
    sp.add_argument("--bench", action="store_true", help="run the synthetic benchmark")
    sp.add_argument("--p", type=int, default=20)
    sp.add_argument("--k", type=int, default=4000)
    sp.add_argument("--n-edges", dest="n_edges", type=int)
    sp.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="benchmark CSV")
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("gen", help="generate a graph file")
    sp.add_argument("--model", choices=sorted(harness.GENERATORS), required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--m-attach", dest="m_attach", type=int)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--weights", type=_weights)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("project", help="project a square matrix onto the doubly stochastic set")
    sp.add_argument("matrix", type=_existing)
    sp.add_argument("--tol", type=float, default=PROJECTION_TOL)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=PROJECTION_MAX_ITER)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_project)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"glag: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ParameterError, FormatError, OSError) as exc:
        print(f"glag: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
