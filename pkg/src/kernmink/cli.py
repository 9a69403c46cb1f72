"""``kernmink`` command line: map, cluster, select-p, diag, eval.

Reports go to stdout (or ``--out``) as JSON; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import InitMethod, RunConfig, cluster_points, exact_kernel_kmeans
from .dataio import DataError, dumps, file_sha256, load_dataset, load_vector, write_csv
from .diagnostics import GENERATORS, concentration_sweep
from .evaluation import DEFAULT_P_GRID, evaluate, select_p
from .featmap import KernelSpec, MapConfig, approximation_report, map_dataset


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_input(sp):
    sp.add_argument("input", help="CSV file, one sample per row")
    sp.add_argument("--label-column", default=None,
                    help="column with integer class labels (header name or 0-based index)")
    sp.add_argument("--no-header", action="store_true", help="first row is data")


def _add_kernel(sp):
    sp.add_argument("--kernel", default="chi2",
                    help="hellinger | chi2 | intersection | js | hein-bousquet:A:B | none")
    sp.add_argument("--map-n", type=int, default=1, help="spectrum samples per side (2n+1 dims)")
    sp.add_argument("--map-period", type=float, default=None,
                    help="spectrum sampling period (default depends on --map-n)")


def _add_run(sp, p_default=2.0):
    sp.add_argument("--k", type=int, required=True, help="number of clusters")
    sp.add_argument("--p", type=float, default=p_default, help="Minkowski exponent")
    sp.add_argument("--weighted", action="store_true", help="per-cluster feature weights")
    sp.add_argument("--init", default="auto", choices=[m.value for m in InitMethod if m is not InitMethod.PROVIDED])
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-8, help="center solver tolerance")


def _add_out(sp):
    sp.add_argument("--out", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernmink", description=(
        "Explicit-feature-map kernel K-means with weighted Minkowski distances."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("map", help="write the explicit feature map of a dataset as CSV")
    _add_input(sp)
    _add_kernel(sp)
    _add_out(sp)

    sp = sub.add_parser("cluster", help="cluster a dataset and print a JSON report")
    _add_input(sp)
    _add_kernel(sp)
    _add_run(sp)
    sp.add_argument("--exact-kernel", action="store_true",
                    help="kernel-trick K-means baseline (p = 2, no explicit map)")
    sp.add_argument("--approx-pairs", type=int, default=0,
                    help="also report map approximation error on this many random pairs")
    _add_out(sp)

    sp = sub.add_parser("select-p", help="choose p from a labeled fraction of the data")
    _add_input(sp)
    _add_kernel(sp)
    _add_run(sp)
    sp.add_argument("--grid", type=_float_list, default=list(DEFAULT_P_GRID))
    sp.add_argument("--labeled-frac", type=float, default=0.15)
    sp.add_argument("--repeats", type=int, default=50)
    _add_out(sp)

    sp = sub.add_parser("diag", help="relative contrast / variance sweep on generated data")
    sp.add_argument("--generator", default="uniform", choices=sorted(GENERATORS))
    sp.add_argument("--p-grid", type=_float_list, default=[0.5, 1.0, 2.0, 3.0])
    sp.add_argument("--d-grid", type=_int_list, default=[2, 8, 32, 128, 512])
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--repeats", type=int, default=1)
    _add_out(sp)

    sp = sub.add_parser("eval", help="NMI and purity of assignments against labels")
    sp.add_argument("labels", help="one integer label per line")
    sp.add_argument("assignments", help="one integer cluster id per line")
    _add_out(sp)
    return parser


def _kernel(args):
    if args.kernel.strip().lower() == "none":
        return None
    return KernelSpec.parse(args.kernel)


def _map_cfg(args):
    return MapConfig(n=args.map_n, period=args.map_period)


def _load(args, spec):
    return load_dataset(args.input, label_column=args.label_column,
                        header=False if args.no_header else None,
                        require_nonnegative=spec is not None)


def _run_cfg(args):
    return RunConfig(k=args.k, p=args.p, max_iter=args.max_iter, tol=args.tol, seed=args.seed,
                     init=args.init, restarts=args.restarts)


def _config_echo(args):
    echo = {}
    for key, val in sorted(vars(args).items()):
        if key == "out":
            continue
        echo[key] = val
    if "input" in echo:
        echo["input_sha256"] = file_sha256(args.input)
    return echo


def _kernel_block(spec, map_cfg):
    if spec is None:
        return {"kernel": "none", "map": None}
    return {"kernel": spec.label, "map": {"n": map_cfg.n, "period": map_cfg.period,
                                         "dim_per_feature": map_cfg.dim}}


def cmd_map(args, out):
    spec = _kernel(args)
    if spec is None:
        raise UsageError("map needs a kernel (not 'none')")
    ds = _load(args, spec)
    cfg = _map_cfg(args)
    mapped = map_dataset(spec, cfg, ds).values
    header = [f"f{l}_{c}" for l in range(ds.d) for c in range(cfg.dim)]
    write_csv(out, mapped, header=header, labels=ds.labels)


def cmd_cluster(args):
    spec = _kernel(args)
    if args.exact_kernel:
        if args.weighted:
            raise UsageError("--weighted cannot be combined with --exact-kernel")
        if spec is None:
            raise UsageError("--exact-kernel needs a kernel")
        if args.p != 2:
            raise UsageError("--exact-kernel runs at p = 2")
        if args.init not in ("auto", "random_points"):
            raise UsageError("--exact-kernel supports --init random_points only")
    ds = _load(args, spec)
    cfg = _run_cfg(args)
    map_cfg = _map_cfg(args)

    t0 = time.perf_counter()
    if spec is not None and not args.exact_kernel:
        x = map_dataset(spec, map_cfg, ds).values
    else:
        x = ds.values
    t1 = time.perf_counter()
    if args.exact_kernel:
        model = exact_kernel_kmeans(ds, spec, cfg)
        engine = "exact_kernel_kmeans"
    else:
        model = cluster_points(x, cfg, weighted=args.weighted)
        engine = ("explicit_kernel_mwk_means" if args.weighted else
                  "explicit_kernel_k_means" if cfg.p == 2 else "explicit_kernel_mk_means")
        if spec is None:
            engine = engine.replace("explicit_kernel_", "")
    t2 = time.perf_counter()

    approx = None
    if args.approx_pairs > 0 and spec is not None:
        approx = approximation_report(spec, map_cfg, ds, args.approx_pairs, seed=args.seed).as_dict()
    metrics = evaluate(ds.labels, model.assignments).as_dict() if ds.labels is not None else None
    report = {
        "command": "cluster",
        "version": __version__,
        "config": _config_echo(args),
        "model": {
            "engine": engine,
            **_kernel_block(spec, map_cfg),
            "k": cfg.k,
            "p": cfg.p,
            "weighted": bool(args.weighted),
            "init": cfg.resolved_init().value,
            "restarts": cfg.restarts,
            "seed": cfg.seed,
            "restart_seed": model.seed,
            "n_samples": ds.n,
            "n_features": ds.d,
            "mapped_dim": int(x.shape[1]) if not args.exact_kernel else None,
            "objective": model.objective,
            "iterations": model.iterations,
            "converged": model.converged,
        },
        "metrics": metrics,
        "cluster_sizes": model.cluster_sizes(),
        "assignments": model.assignments,
        "weights": model.weights,
        "objective_trace": model.objective_trace,
        "approximation": approx,
        "timing": {"map_ms": (t1 - t0) * 1e3, "cluster_ms": (t2 - t1) * 1e3},
    }
    return report


def cmd_select_p(args):
    spec = _kernel(args)
    ds = _load(args, spec)
    if ds.labels is None:
        raise UsageError("select-p needs --label-column")
    cfg = _run_cfg(args)
    t0 = time.perf_counter()
    res = select_p(ds, spec, _map_cfg(args), cfg, p_grid=args.grid,
                   labeled_fraction=args.labeled_frac, repeats=args.repeats, seed=args.seed,
                   weighted=args.weighted)
    t1 = time.perf_counter()
    return {
        "command": "select-p",
        "version": __version__,
        "config": _config_echo(args),
        "model": {**_kernel_block(spec, _map_cfg(args)), "k": cfg.k, "weighted": bool(args.weighted)},
        "selection": res.as_dict(),
        "timing": {"select_ms": (t1 - t0) * 1e3},
    }


def cmd_diag(args):
    t0 = time.perf_counter()
    rep = concentration_sweep(args.generator, args.p_grid, args.d_grid, args.n, args.seed,
                              repeats=args.repeats)
    t1 = time.perf_counter()
    return {"command": "diag", "version": __version__, "config": _config_echo(args),
            "diagnostics": rep.as_dict(), "timing": {"diag_ms": (t1 - t0) * 1e3}}


def cmd_eval(args):
    labels = load_vector(args.labels)
    assignments = load_vector(args.assignments)
    metrics = evaluate(labels, assignments)
    return {"command": "eval", "version": __version__, "config": _config_echo(args),
            "metrics": metrics.as_dict()}


def _emit(text, args):
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "map":
            if args.out:
                with open(args.out, "w", newline="", encoding="utf-8") as fh:
                    cmd_map(args, fh)
            else:
                cmd_map(args, sys.stdout)
            return 0
        handler = {"cluster": cmd_cluster, "select-p": cmd_select_p,
                   "diag": cmd_diag, "eval": cmd_eval}[args.command]
        _emit(dumps(handler(args)), args)
        return 0
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error of ours
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except UsageError as exc:
        print(f"kernmink {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, OSError) as exc:
        print(f"kernmink {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
