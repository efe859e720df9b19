"""Command line interface: ``rbfpu {bench,fit,eval,holdout}``.

Exit codes: 0 success, 1 invalid input or flags, 2 runtime or fit failure.
Set ``RBFPU_NUM_THREADS`` to bound the number of worker threads used for
fitting patches.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import __version__
from .datasets import format_number, load_delimited, load_points, rescale_to_unit, write_results
from .errors import RBFPUError, ValidationError
from .harness import (
    BENCH_COLUMNS,
    DEFAULT_SIZES,
    ExperimentConfig,
    format_table,
    holdout_experiment,
    load_config,
    run_benchmark,
)
from .kernels import IMQ, MATERN_C2, kernel_tag
from .pu import DOMAIN_TOL, evaluate, fit_pu_fixed, fit_pu_variable
from .selection import shape_grid
from .serialize import load_model, save_model

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _sizes(text):
    try:
        sizes = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None
    if not sizes or any(n < 1 for n in sizes):
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return sizes


def _range(text):
    try:
        lo, hi = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}") from None
    return lo, hi


def _add_search_flags(p):
    p.add_argument("--q", type=int, help="number of shape candidates (default 30)")
    p.add_argument("--shape-range", type=_range, metavar="LOW,HIGH",
                   help="open interval for the log-spaced shape candidates (default 0.001,10)")
    p.add_argument("--h", type=float, help="radius growth factor h > 1 (default 2)")
    p.add_argument("--P", dest="p", type=int, help="number of radius candidates (default 6)")
    p.add_argument("--n-min", type=int, help="minimum nodes per patch (default 3)")


def build_parser():
    parser = _Parser(prog="rbfpu", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="product-function convergence table on Halton nodes")
    b.add_argument("--config", help="experiment config file ([experiment] key = value)")
    b.add_argument("--kernel", help="imq or matern2 (default imq)")
    b.add_argument("--mode", choices=("variable", "fixed", "both"))
    b.add_argument("--sizes", type=_sizes, help=f"comma separated N values (default {','.join(map(str, DEFAULT_SIZES))})")
    _add_search_flags(b)
    b.add_argument("--eps-fixed", type=float, help="shape parameter of the fixed baseline (default 0.6)")
    b.add_argument("--grid", type=int, help="evaluation grid resolution per axis (default 40)")
    b.add_argument("--out", default="bench.csv", help="CSV output path")

    f = sub.add_parser("fit", help="fit a model to a data file")
    f.add_argument("--data", required=True)
    f.add_argument("--dim", type=int, default=2)
    f.add_argument("--kernel", default=IMQ)
    f.add_argument("--mode", choices=("variable", "fixed"), default="variable")
    f.add_argument("--eps", type=float, default=0.6, help="shape parameter in fixed mode")
    _add_search_flags(f)
    f.add_argument("--model-out", required=True)

    e = sub.add_parser("eval", help="evaluate a saved model")
    e.add_argument("--model", required=True)
    e.add_argument("--points", required=True, help="file of evaluation points (raw coordinates)")
    e.add_argument("--out", required=True, help="predictions CSV")

    h = sub.add_parser("holdout", help="random holdout validation on a data file")
    h.add_argument("--data", required=True)
    h.add_argument("--dim", type=int, default=2)
    h.add_argument("--k", type=int, default=90, help="number of validation points")
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--kernel", default=MATERN_C2)
    _add_search_flags(h)
    h.add_argument("--eps-fixed", type=float, default=0.6)
    h.add_argument("--compare-fixed", action="store_true", help="also report the fixed-parameter baseline")
    h.add_argument("--out", help="optional results CSV")
    return parser


def _config_from(args, base=None):
    cfg = base or ExperimentConfig()
    kw = dict(vars(cfg))
    for key in ("kernel", "mode", "sizes", "q", "h", "p", "eps_fixed", "grid", "n_min"):
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = val
    if getattr(args, "shape_range", None) is not None:
        kw["shape_min"], kw["shape_max"] = args.shape_range
    return ExperimentConfig(**kw)


def cmd_bench(args):
    base = load_config(args.config) if args.config else None
    cfg = _config_from(args, base)
    rows = run_benchmark(cfg, out=args.out)
    print(format_table(rows))
    print(f"wrote {args.out}")
    return EXIT_RUNTIME if any(r.error for r in rows) else EXIT_OK


def cmd_fit(args):
    cfg = _config_from(args, ExperimentConfig(kernel=args.kernel, mode="variable"))
    raw = load_delimited(args.data, args.dim)
    unit, transform = rescale_to_unit(raw)
    if args.mode == "variable":
        model = fit_pu_variable(unit, cfg.kernel, shape_grid(cfg.q, cfg.shape_min, cfg.shape_max),
                                cfg.h, cfg.p, cfg.n_min)
    else:
        if not args.eps > 0:
            raise ValidationError("--eps must be positive")
        model = fit_pu_fixed(unit, cfg.kernel, args.eps, cfg.n_min)
    model.transform = transform
    model.provenance["source"] = str(args.data)
    save_model(model, args.model_out)
    print(f"fitted {model.d} patches on {unit.n} nodes ({args.mode}); wrote {args.model_out}")
    return EXIT_OK


def cmd_eval(args):
    model = load_model(args.model)
    raw = load_points(args.points, model.dim)
    unit = raw if model.transform is None else model.transform.forward(raw)
    inside = np.all((unit >= -DOMAIN_TOL) & (unit <= 1.0 + DOMAIN_TOL), axis=1)
    pred = np.full(len(raw), np.nan)
    if np.any(inside):
        pred[inside] = evaluate(model, np.clip(unit[inside], 0.0, 1.0))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(model.dim)] + ["value", "status"])
        for x, v, ok in zip(raw, pred, inside):
            w.writerow([repr(float(c)) for c in x] + [repr(float(v)) if ok else "nan",
                                                      "ok" if ok else "out_of_domain"])
    n_out = int(np.sum(~inside))
    print(f"evaluated {len(raw)} points ({n_out} out of domain); wrote {args.out}")
    return EXIT_OK


def cmd_holdout(args):
    cfg = _config_from(args, ExperimentConfig(kernel=kernel_tag(args.kernel), mode="variable"))
    raw = load_delimited(args.data, args.dim)
    res = holdout_experiment(raw, cfg, args.k, args.seed, compare_fixed=args.compare_fixed)
    line = f"rmse={format_number(res.rmse)} mae={format_number(res.mae)}"
    if args.compare_fixed:
        line += f" rmse_fixed={format_number(res.baseline_rmse)} mae_fixed={format_number(res.baseline_mae)}"
    print(line)
    if args.out:
        rows = [("variable", res.rmse, res.mae, res.seconds)]
        if args.compare_fixed:
            rows.append(("fixed", res.baseline_rmse, res.baseline_mae, float("nan")))
        write_results(args.out, rows)
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "fit": cmd_fit, "eval": cmd_eval, "holdout": cmd_holdout}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"rbfpu {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RBFPUError as exc:
        print(f"rbfpu {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
