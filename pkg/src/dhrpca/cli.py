"""Command line: ``dhrpca {synth,run,sweep,bound}``.

Exit status is 0 on success, 2 for usage or argument-range errors, 3 for
file-system errors and 1 for anything else.
"""

import argparse
import sys

from . import bench
from .errors import ContractViolation
from .estimators import KAPPA_GRID, asymptotic_bound
from .kernel import KINDS, KernelSpec
from .synth import SynthConfig, generate

EXIT_USAGE = 2
EXIT_IO = 3


def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}")
        if lo is not None and (value < lo or (lo_open and value == lo)):
            raise argparse.ArgumentTypeError(f"{value} is below the allowed range ({'>' if lo_open else '>='} {lo})")
        if hi is not None and (value > hi or (hi_open and value == hi)):
            raise argparse.ArgumentTypeError(f"{value} is above the allowed range ({'<' if hi_open else '<='} {hi})")
        return value
    return parse


def _lambda_list(text):
    parse = _ranged(float, 0.0, 0.5, hi_open=True)
    return [parse(t) for t in text.split(",") if t.strip()]


positive_int = _ranged(int, 1)
nonneg_int = _ranged(int, 0)
positive_float = _ranged(float, 0.0, lo_open=True)
fraction = _ranged(float, 0.0, 0.5, hi_open=True)


def _synth_flags(p, lam_list=False):
    p.add_argument("--m", type=positive_int, default=100, help="ambient dimension")
    p.add_argument("--n", type=positive_int, default=100, help="number of observations")
    p.add_argument("--d", type=positive_int, default=1, help="subspace dimension")
    p.add_argument("--sigma", type=positive_float, default=5.0, help="leading singular value of A")
    p.add_argument("--mag", type=positive_float, default=10.0, help="outlier magnitude ratio")
    p.add_argument("--noise", type=_ranged(float, 0.0), default=1.0, help="noise standard deviation")
    if lam_list:
        p.add_argument("--lambda", dest="lam", type=_lambda_list, default=[0.1, 0.2, 0.3, 0.4],
                       help="comma separated outlier fractions")
    else:
        p.add_argument("--lambda", dest="lam", type=fraction, default=None, help="outlier fraction")
    p.add_argument("--seed", type=nonneg_int, default=0, help="base seed; trial i uses seed + i")


def _algo_flags(p):
    p.add_argument("--t-hat", type=positive_int, default=None,
                   help="trim count (default ceil((1-lambda) n), or ceil(n/2) if lambda unknown)")
    p.add_argument("--max-iters", type=positive_int, default=None)
    p.add_argument("--patience", type=positive_int, default=10)
    p.add_argument("--kernel", choices=KINDS, default="linear")
    p.add_argument("--bandwidth", type=positive_float, default=1.0)
    p.add_argument("--degree", type=positive_int, default=2)
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--trials", type=positive_int, default=1)
    p.add_argument("--no-timing", action="store_true",
                   help="write wall_ms as 0 so reruns produce identical bytes")


def build_parser():
    parser = argparse.ArgumentParser(prog="dhrpca", description="Deterministic high-dimensional robust PCA")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a contaminated synthetic dataset")
    _synth_flags(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="run one algorithm over seeded trials")
    _synth_flags(p)
    _algo_flags(p)
    p.add_argument("--algorithm", choices=bench.ALGORITHMS, default="dhr")
    p.add_argument("--data", default=None, help="data.csv or a dataset directory (skips generation)")
    p.add_argument("--truth", default=None, help="truth_A.csv; outliers.txt is read beside it")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")

    p = sub.add_parser("sweep", help="compare algorithms across outlier fractions")
    _synth_flags(p, lam_list=True)
    _algo_flags(p)
    p.add_argument("--algorithm", default="dhr,hr", help="comma separated algorithms")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")

    p = sub.add_parser("bound", help="evaluate the asymptotic expressed-variance lower bound")
    p.add_argument("--lambda", dest="lam", type=fraction, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t-ratio", type=_ranged(float, 0.0, 1.0, lo_open=True), default=None,
                   help="t_hat / t (default 1)")
    g.add_argument("--t-hat-frac", type=_ranged(float, 0.0, 1.0, lo_open=True), default=None,
                   help="t_hat / n; converted to t_hat / t = frac / (1 - lambda)")
    return parser


def _kernel(args):
    return KernelSpec(args.kernel, args.bandwidth, args.degree, args.offset)


def _synth_config(args, lam):
    return SynthConfig(args.m, args.n, args.d, args.sigma, args.mag, lam, args.seed, args.noise)


def _emit(target, header, rows):
    if target == "-":
        bench.write_csv(sys.stdout, header, rows)
    else:
        bench.write_csv(target, header, rows)


def cmd_synth(args):
    lam = 0.0 if args.lam is None else args.lam
    data, truth = generate(_synth_config(args, lam))
    paths = bench.save_dataset(args.out, data, truth)
    print(f"wrote {', '.join(str(p) for p in paths)}: n={data.shape[0]} m={data.shape[1]} "
          f"d={args.d} outliers={truth.outlier_indices.size} seed={args.seed}")


def cmd_run(args):
    common = dict(
        algorithm=args.algorithm, d=args.d, trials=args.trials, base_seed=args.seed,
        t_hat=args.t_hat, max_iters=args.max_iters, patience=args.patience, kernel=_kernel(args),
    )
    if args.data is not None:
        data, truth = bench.load_dataset(args.data, args.truth)
        cfg = bench.ExperimentConfig(data=data, truth=truth, lam=args.lam, **common)
    else:
        lam = 0.0 if args.lam is None else args.lam
        cfg = bench.ExperimentConfig(synth=_synth_config(args, lam), **common)
    trials = bench.run_trials(cfg)
    _emit(args.out, bench.RUN_COLUMNS, bench.run_rows(trials, args.algorithm, not args.no_timing))
    s = bench.summarize(trials)
    stream = sys.stderr if args.out == "-" else sys.stdout
    print(
        f"{args.algorithm}: trials={len(trials)} "
        f"final_ev mean={bench.fmt(s['final_ev_mean'])} std={bench.fmt(s['final_ev_std'])} "
        f"iters_to_best mean={bench.fmt(s['iters_to_best_mean'])} std={bench.fmt(s['iters_to_best_std'])} "
        f"wall_ms mean={bench.fmt(s['wall_ms_mean'])} std={bench.fmt(s['wall_ms_std'])}",
        file=stream,
    )


def cmd_sweep(args):
    algorithms = [a.strip() for a in args.algorithm.split(",") if a.strip()]
    for a in algorithms:
        if a not in bench.ALGORITHMS:
            raise ContractViolation(f"unknown algorithm {a!r}; choose from {bench.ALGORITHMS}")
    base = bench.ExperimentConfig(
        algorithm=algorithms[0], d=args.d, trials=args.trials, base_seed=args.seed,
        synth=_synth_config(args, 0.0), t_hat=args.t_hat, max_iters=args.max_iters,
        patience=args.patience, kernel=_kernel(args),
    )
    rows = bench.sweep(base, args.lam, algorithms, timing=not args.no_timing)
    _emit(args.out, bench.SWEEP_COLUMNS, rows)


def cmd_bound(args):
    if args.t_hat_frac is not None:
        t_ratio = min(1.0, args.t_hat_frac / (1.0 - args.lam))
    else:
        t_ratio = 1.0 if args.t_ratio is None else args.t_ratio
    res = asymptotic_bound(args.lam, t_ratio)
    grid = f"{KAPPA_GRID.size} log-spaced kappa on [{KAPPA_GRID[0]:g}, {KAPPA_GRID[-1]:g}]"
    print(f"bound={res.value!r}")
    print(f"lambda={bench.fmt(args.lam)} t_ratio={bench.fmt(t_ratio)} argmax_kappa={bench.fmt(res.kappa)} "
          f"feasible={res.feasible} grid={grid}")
    if not res.feasible:
        print("note: no kappa keeps every tail-weight argument in [0, 1]", file=sys.stderr)


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "sweep": cmd_sweep, "bound": cmd_bound}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ContractViolation as exc:
        print(f"dhrpca {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        name = getattr(exc, "filename", None)
        where = f" ({name})" if name else ""
        print(f"dhrpca {args.command}: I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
