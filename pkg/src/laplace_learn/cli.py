"""Command-line entry point: ``laplace-learn <command> ...``.

Exit codes: 0 success, 1 I/O or validation error, 2 estimator does not exist.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from laplace_learn.errors import LaplaceLearnError, NonExistenceError
from laplace_learn.estimation import (
    SolverConfig,
    describe_violation,
    estimate_cgl,
    estimate_ggl,
    estimate_tree_cgl,
    existence_check,
    ggl_kkt_residual,
    pairwise_distances,
)
from laplace_learn.experiments import ExperimentConfig, run_convergence_experiment, sibling_paths
from laplace_learn.graph import GRAPH_KINDS, laplacian_from_weights, make_graph, weights_from_laplacian
from laplace_learn.io import (
    format_report,
    read_edgelist,
    read_matrix,
    write_edgelist,
    write_matrix,
    write_report,
)
from laplace_learn.losses import sym_stein_loss
from laplace_learn.sampling import SamplerConfig, sample_lgmrf

EXIT_OK, EXIT_ERROR, EXIT_MISSING = 0, 1, 2


def _stats(args):
    if args.data:
        return pairwise_distances(read_matrix(args.data))
    return pairwise_distances(S=read_matrix(args.cov))


def _constraint(args, p):
    if args.edges:
        t, _ = read_edgelist(args.edges)
        if t.p != p:
            raise LaplaceLearnError(f"edge list has p={t.p} but the data has p={p}")
        return t
    return make_graph("complete", p) if p >= 2 else None


def cmd_graph_make(args):
    t = make_graph(args.kind, args.p)
    w = None
    if args.weights:
        w = read_matrix(args.weights).reshape(-1)
        laplacian_from_weights(t, w)  # validates count and sign
    write_edgelist(args.out, t, w)
    return EXIT_OK


def cmd_graph_laplacian(args):
    t, w = read_edgelist(args.edges)
    write_matrix(args.out, laplacian_from_weights(t, w))
    return EXIT_OK


def cmd_check_existence(args):
    stats = _stats(args)
    report = existence_check(stats, _constraint(args, stats.p), args.tol)
    print(f"exists={str(report.exists).lower()}")
    print(f"data_graph_edges={report.data_graph.m}")
    if report.violation is not None:
        kind, (i, j) = report.violation
        print(f"violation={kind} {i + 1} {j + 1}")
        print(describe_violation(report))
        return EXIT_MISSING
    return EXIT_OK


def cmd_estimate(args):
    stats = _stats(args)
    prefix = Path(args.out)
    if args.ggl:
        cfg = SolverConfig(kkt_tolerance=args.kkt_tol, max_sweeps=args.max_sweeps)
        theta = estimate_ggl(stats, args.alpha, cfg)
        K = stats.S + args.alpha * (np.eye(stats.p) - 1.0)
        stat, dual = ggl_kkt_residual(theta, K)
        write_matrix(f"{prefix}.theta.csv", theta)
        fields = {"estimator": "ggl", "p": stats.p, "alpha": float(args.alpha),
                  "kkt_stationarity": stat, "kkt_dual_feasibility": dual}
    else:
        E = _constraint(args, stats.p)
        if args.tree:
            rep = estimate_tree_cgl(stats, E)
        else:
            cfg = SolverConfig(kkt_tolerance=args.kkt_tol, max_sweeps=args.max_sweeps,
                               existence_tolerance=args.tol)
            rep = estimate_cgl(stats, E, cfg)
        write_edgelist(f"{prefix}.edges", rep.topology, rep.weights)
        write_matrix(f"{prefix}.laplacian.csv", rep.laplacian)
        fields = {"estimator": "tree" if args.tree else "cgl", **rep.as_dict()}
    write_report(f"{prefix}.report", fields)
    sys.stdout.write(format_report(fields))
    return EXIT_OK


def cmd_loss(args):
    rep = sym_stein_loss(_read_laplacian(args.a), _read_laplacian(args.b))
    sys.stdout.write(format_report(rep.as_dict()))
    return EXIT_OK


def _read_laplacian(path):
    text = Path(path).read_text().lstrip()
    if text.startswith("p="):
        t, w = read_edgelist(path)
        return laplacian_from_weights(t, w)
    L = read_matrix(path)
    weights_from_laplacian(L)
    return L


def cmd_sample(args):
    L = _read_laplacian(args.laplacian)
    X = sample_lgmrf(L, args.n, SamplerConfig(args.seed, args.trial))
    write_matrix(args.out, X)
    return EXIT_OK


def cmd_experiment(args):
    cfg = ExperimentConfig.from_json(args.config)
    out = args.out or cfg.output_path
    if not out:
        raise LaplaceLearnError("no output path: pass --out or set output_path in the config")
    result = run_convergence_experiment(cfg, out)
    summary_path, plot_path = sibling_paths(out)
    print(f"records={len(result.records)} -> {out}")
    print(f"summary -> {summary_path}")
    print(f"plot data -> {plot_path}")
    print("family,constraint,p,n,trials,failures,mean,std")
    for row in result.summary:
        print(f"{row['family']},{row['constraint']},{row['p']},{row['n']},{row['trials']},"
              f"{row['failures']},{row['mean']:.6g},{row['std']:.3g}")
    return EXIT_OK


def _add_source(sp):
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="p x n data matrix CSV (rows are variables)")
    src.add_argument("--cov", help="p x p covariance matrix CSV")
    sp.add_argument("--edges", help="constraint edge list (default: complete graph)")
    sp.add_argument("--tol", type=float, default=None, help="existence threshold on sample distances")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laplace-learn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="graph generators and conversions")
    gsub = g.add_subparsers(dest="graph_command", required=True)
    mk = gsub.add_parser("make", help="write a canonical topology as an edge list")
    mk.add_argument("--kind", required=True, choices=GRAPH_KINDS)
    mk.add_argument("--p", type=int, required=True)
    mk.add_argument("--weights", help="CSV of edge weights in canonical edge order")
    mk.add_argument("--out", required=True)
    mk.set_defaults(func=cmd_graph_make)
    lp = gsub.add_parser("laplacian", help="convert an edge list to a Laplacian CSV")
    lp.add_argument("--edges", required=True)
    lp.add_argument("--out", required=True)
    lp.set_defaults(func=cmd_graph_laplacian)

    ce = sub.add_parser("check-existence", help="test whether the estimator exists")
    _add_source(ce)
    ce.set_defaults(func=cmd_check_existence)

    es = sub.add_parser("estimate", help="run an estimator")
    _add_source(es)
    es.add_argument("--tree", action="store_true", help="closed form on a spanning-tree constraint")
    es.add_argument("--ggl", action="store_true", help="generalized Laplacian estimator")
    es.add_argument("--alpha", type=float, default=0.0)
    es.add_argument("--kkt-tol", type=float, default=1e-8)
    es.add_argument("--max-sweeps", type=int, default=10000)
    es.add_argument("--out", required=True, help="output prefix")
    es.set_defaults(func=cmd_estimate)

    ls = sub.add_parser("loss", help="Stein losses between two Laplacians")
    ls.add_argument("--a", required=True)
    ls.add_argument("--b", required=True)
    ls.set_defaults(func=cmd_loss)

    sa = sub.add_parser("sample", help="draw Gaussian samples with Laplacian precision")
    sa.add_argument("--laplacian", required=True, help="Laplacian CSV or weighted edge list")
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--seed", type=int, required=True)
    sa.add_argument("--trial", type=int, default=0)
    sa.add_argument("--out", required=True)
    sa.set_defaults(func=cmd_sample)

    ex = sub.add_parser("experiment", help="Monte Carlo convergence experiment")
    ex.add_argument("--config", required=True)
    ex.add_argument("--out")
    ex.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if getattr(args, "tree", False) and getattr(args, "ggl", False):
        parser.error("--tree and --ggl are mutually exclusive")
    try:
        return args.func(args)
    except NonExistenceError as exc:
        print(f"laplace-learn: estimator does not exist: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (LaplaceLearnError, OSError, ValueError) as exc:
        print(f"laplace-learn: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
