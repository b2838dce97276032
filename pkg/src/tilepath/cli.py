"""Command-line interface: ``tilepath {tiling,solve,bench}``.

Exit codes: 0 on success, 1 for computation errors and bad arguments,
2 for unreadable inputs or unwritable outputs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from tilepath import bench
from tilepath.decoders import iht_warm, lasso_supports, omp, plasso_supports
from tilepath.io import read_matrix, read_vector
from tilepath.problem import Problem, decompose
from tilepath.selection import enumerate_supports, oracle_closest, rank_supports, regress
from tilepath.tiling import build
from tilepath.tiling.export import DEFAULT_RESOLUTION, to_json, to_svg

log = logging.getLogger("tilepath")

SOLVE_METHODS = ("omp", "l1iht", "lasso", "plasso", "mp-rank", "mp-all")
ERROR_RATE_LIMIT = 0.10


class InputError(Exception):
    """Reading or writing a file failed."""


def _formats(text: str, allowed) -> list[str]:
    out = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in out if f not in allowed]
    if bad:
        raise ValueError(f"unsupported format(s) {bad}; choose from {sorted(allowed)}")
    return out


def _load(args) -> Problem:
    try:
        A = read_matrix(args.matrix)
        y = read_vector(args.datum)
        truth = read_vector(args.truth) if args.truth else None
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    if y.shape[0] != A.shape[0]:
        raise InputError(f"datum has length {y.shape[0]} but the matrix has {A.shape[0]} rows")
    if truth is not None and truth.shape[0] != A.shape[1]:
        raise InputError(f"truth has length {truth.shape[0]} but the matrix has {A.shape[1]} columns")
    prob = Problem(A, y)
    prob.u_true = truth  # only the support is used; v and delta stay unknown
    return prob


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _stem(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix in (".json", ".svg", ".csv") else p


def cmd_tiling(args) -> int:
    prob = _load(args)
    formats = _formats(args.format or "json", {"json", "svg"})
    t0 = time.perf_counter()
    bt = decompose(prob)
    graph = build(bt, (args.beta_min, args.beta_max), s_max=args.s_max, variant=args.variant)
    elapsed = time.perf_counter() - t0
    stem = _stem(args.out or "tiling")
    if "json" in formats:
        _write(stem.with_suffix(".json"), to_json(graph, args.resolution))
    if "svg" in formats:
        hl = prob.true_support if prob.u_true is not None else None
        _write(stem.with_suffix(".svg"), to_svg(graph, args.resolution, highlight=hl))
    summ = graph.summary()
    print(f"tiles: {summ['tiles']}")
    print(f"edges: {summ['edges']}")
    for size, k in summ["supports_per_size"].items():
        print(f"supports of size {size}: {k}")
    print(f"wall time: {elapsed:.3f} s")
    return 0


def cmd_solve(args) -> int:
    if args.method not in SOLVE_METHODS:
        print(f"unknown method {args.method!r}; choose from {', '.join(SOLVE_METHODS)}", file=sys.stderr)
        return 1
    prob = _load(args)
    s = args.s_max
    if prob.u_true is not None and s is None:
        s = len(prob.true_support)
    if s is None:
        print("solve needs --s-max (or --truth to infer it)", file=sys.stderr)
        return 1
    truth = prob.true_support if prob.u_true is not None else None
    t0 = time.perf_counter()
    if args.method == "omp":
        support = omp(prob, s).supports[0]
    elif args.method == "l1iht":
        support = iht_warm(prob, s).supports[0]
    elif args.method in ("lasso", "plasso"):
        fn = lasso_supports if args.method == "lasso" else plasso_supports
        sups = fn(prob, s).supports
        if truth is not None:
            support = oracle_closest(sups, truth)
        else:
            support = sups[-1]
    else:
        graph = build(decompose(prob), (args.beta_min, args.beta_max), s_max=s, variant=args.variant)
        if args.method == "mp-all":
            if truth is None:
                print("mp-all needs --truth", file=sys.stderr)
                return 1
            support = oracle_closest({sup for sup, _ in graph.supports()}, truth)
        else:
            cands = {sup for sup, _ in enumerate_supports(graph, s)}
            if not cands:
                print(f"the tiling holds no support of size {s}", file=sys.stderr)
                return 1
            support = rank_supports(prob, cands, s)
    elapsed = time.perf_counter() - t0
    u_hat, _ = regress(Problem(prob.A, prob.y), support)
    print(f"support: {list(support)}")
    print("coefficients: " + " ".join(f"{c:.10g}" for c in u_hat))
    if truth is not None:
        sd = len(set(support) ^ set(truth))
        print(f"symmetric difference: {sd}")
        print(f"success: {sd == 0}")
    print(f"wall time: {elapsed:.3f} s")
    return 0


def cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in (args.method or ",".join(bench.METHODS)).split(",") if m.strip())
    bad = [m for m in methods if m not in bench.METHODS]
    if bad:
        print(f"unknown method(s) {bad}; choose from {', '.join(bench.METHODS)}", file=sys.stderr)
        return 1
    formats = _formats(args.format or "csv,json", {"csv", "json"})
    cfg = bench.ExperimentConfig(
        ensemble=args.ensemble,
        m=args.m,
        n=args.n,
        s=args.s_max if args.s_max is not None else 6,
        sigma=args.sigma,
        trials=args.trials,
        seed=args.seed,
        beta_range=(args.beta_min, args.beta_max),
        methods=methods,
    )
    if args.values:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
    else:
        values = [{"support_size": cfg.s, "dimension": cfg.n, "noise": cfg.sigma, "fixed_beta": 1.0}[args.sweep]]
    values = [float(v) if args.sweep in ("noise", "fixed_beta") else int(float(v)) for v in values]
    result = bench.run_sweep(cfg, args.sweep, values, workers=args.workers)
    stem = _stem(args.out or "bench")
    if "csv" in formats:
        _write(stem.with_suffix(".csv"), bench.results_csv(result))
        _write(stem.with_name(stem.name + ".timings.csv"), bench.timings_csv(result))
    if "json" in formats:
        _write(stem.with_suffix(".json"), bench.results_json(result, cfg))
    print(bench.format_table(result))
    worst = {k: r for k, r in result.error_rates().items() if r > ERROR_RATE_LIMIT}
    if worst:
        for (v, m), r in sorted(worst.items(), key=str):
            print(f"method {m} failed on {r:.0%} of trials at value {v}", file=sys.stderr)
        return 1
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tilepath", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, inputs=True):
        if inputs:
            sp.add_argument("--matrix", required=True, help="matrix A (CSV or TPTH)")
            sp.add_argument("--datum", required=True, help="datum y (CSV or TPTH)")
            sp.add_argument("--truth", help="true sparse signal u, used for scoring and highlighting")
        sp.add_argument("--beta-min", type=float, default=1e-6)
        sp.add_argument("--beta-max", type=float, default=100.0)
        sp.add_argument("--s-max", type=int, default=None)
        sp.add_argument("--variant", choices=("lasso", "lars"), default="lasso")
        sp.add_argument("--out", help="output path stem")
        sp.add_argument("--format", help="comma separated output formats")

    t = sub.add_parser("tiling", help="build a support tiling and export it")
    common(t)
    t.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION, help="samples per boundary segment")
    t.set_defaults(func=cmd_tiling)

    s = sub.add_parser("solve", help="run one decoder")
    common(s)
    s.add_argument("--method", required=True, help=f"one of {', '.join(SOLVE_METHODS)}")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a synthetic benchmark sweep")
    common(b, inputs=False)
    b.add_argument("--method", help="comma separated methods")
    b.add_argument("--sweep", choices=bench.SWEEPS, default="support_size")
    b.add_argument("--values", help="comma separated values of the swept field")
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--ensemble", choices=bench.ENSEMBLES, default="gaussian")
    b.add_argument("--m", type=int, default=60)
    b.add_argument("--n", type=int, default=250)
    b.add_argument("--sigma", type=float, default=0.02)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    level = os.environ.get("TILEPATH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "s_max", None) is None and args.command == "tiling":
        args.s_max = 1
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
