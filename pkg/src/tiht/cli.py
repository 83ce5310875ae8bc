"""Command-line front end: ``tiht <subcommand> ...``."""

import argparse
import logging
import os
import sys

from tiht import experiments
from tiht.cp import AlsConfig
from tiht.plotting import plot_ratio_histogram
from tiht.sensing import CompletionOperator, GaussianOperator, MemoryCapError, measurement_count
from tiht.trip import TripEstimate, covering_bound_log2, measurement_bound, trip_estimate


def _ints(text):
    return tuple(int(t) for t in text.split(","))


def _floats(text):
    return [float(t) for t in text.split(",")]


def _step(text):
    return text if text == "rate" else float(text)


def _add_solver_args(p, rank=2, rate=0.6, iters=200):
    p.add_argument("--rank", type=int, default=rank)
    p.add_argument("--rate", type=float, default=rate, help="measurements as a fraction of the tensor size")
    p.add_argument("--noise", type=float, default=0.0, help="Euclidean norm of the additive noise")
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--step", type=_step, default=None,
                   help="gradient step: a number or 'rate' for m/N (default 1 for synthetic runs, rate for media)")
    p.add_argument("--seed-op", type=int, default=1)
    p.add_argument("--seed-noise", type=int, default=2)
    p.add_argument("--seed-x", type=int, default=3)
    p.add_argument("--seed-als", type=int, default=4)
    p.add_argument("--als-sweeps", type=int, default=100)
    p.add_argument("--als-tol", type=float, default=1e-8)
    p.add_argument("--als-restarts", type=int, default=3)
    p.add_argument("--memory-cap", type=int, default=2 * 1024**3, help="bytes allowed for a dense Gaussian matrix")
    p.add_argument("--out", required=True, help="output directory")


def _add_synth_args(p):
    p.add_argument("--dims", type=_ints, default=(10, 10, 10))
    _add_solver_args(p)
    p.add_argument("--gen", choices=("srr", "paper"), default="srr",
                   help="srr: factor norms clipped to R; paper: plain Gaussian factors")
    p.add_argument("--R", type=float, default=2.0)


def _spec(args, mode, **extra):
    return experiments.ExperimentSpec(
        mode=mode,
        rank=args.rank,
        rate=args.rate,
        noise=args.noise,
        iters=args.iters,
        step=args.step,
        seed_op=args.seed_op,
        seed_noise=args.seed_noise,
        seed_x=args.seed_x,
        seed_als=args.seed_als,
        out=args.out,
        als=AlsConfig(max_sweeps=args.als_sweeps, rel_tol=args.als_tol, num_restarts=args.als_restarts),
        memory_cap=args.memory_cap,
        **extra,
    )


def _report(summary):
    print(",".join(experiments.SUMMARY_HEADER))
    print(",".join(experiments._fmt(summary[k]) for k in experiments.SUMMARY_HEADER))
    return 2 if summary["status"] == "diverged" else 0


def cmd_synth(args, mode):
    spec = _spec(args, mode, dims=args.dims, gen=args.gen, R=args.R)
    return _report(experiments.run_synth(spec))


def cmd_media(args, mode):
    return _report(experiments.run_real(_spec(args, mode, input=args.input)))


def cmd_sweep(args):
    mode = "synth-complete" if args.kind == "completion" else "synth-gaussian"
    spec = _spec(args, mode, dims=args.dims, gen=args.gen, R=args.R)
    rows = experiments.run_sweep(spec, rates=args.rates, ranks=args.ranks, jobs=args.jobs)
    print(",".join(experiments.SUMMARY_HEADER))
    for row in rows:
        print(",".join(experiments._fmt(row[k]) for k in experiments.SUMMARY_HEADER))
    return 0


def cmd_trip(args):
    if args.m is None and args.rate is None:
        raise SystemExit("tiht trip: give --m or --rate")
    m = args.m if args.m is not None else measurement_count(args.dims, args.rate)

    def factory(seed):
        if args.kind == "completion":
            return CompletionOperator(args.dims, m, seed=seed)
        return GaussianOperator(args.dims, m, seed=seed)

    est, ratios = trip_estimate(factory, args.dims, args.rank, args.R, args.samples, delta=args.delta,
                                seed=args.seed, fresh_operator=args.fresh, return_ratios=True)
    text = TripEstimate.CSV_HEADER + "\n" + est.csv_row() + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        plot_ratio_histogram(ratios, args.delta, os.path.splitext(args.out)[0] + "_ratios.png")
    sys.stdout.write(text)
    return 0


def cmd_bound(args):
    d = len(args.dims)
    m = measurement_bound(args.delta, args.eps, args.rank, args.R, args.dims, C=args.C)
    cover = covering_bound_log2(args.dims, args.rank, args.R, args.eps)
    print("m,covering_log2,delta,eps,r,R,d,C")
    print(f"{m},{cover!r},{args.delta!r},{args.eps!r},{args.rank},{args.R!r},{d},{args.C!r}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tiht", description="Low CP-rank tensor recovery by iterative hard thresholding.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="recover a planted tensor from Gaussian measurements")
    _add_synth_args(p)
    p.set_defaults(func=lambda a: cmd_synth(a, "synth-gaussian"))

    p = sub.add_parser("complete", help="recover a planted tensor from sampled entries")
    _add_synth_args(p)
    p.set_defaults(func=lambda a: cmd_synth(a, "synth-complete"))

    p = sub.add_parser("image", help="recover an RGB PNG image")
    p.add_argument("--input", required=True)
    _add_solver_args(p, rank=15, rate=0.6, iters=200)
    p.set_defaults(func=lambda a: cmd_media(a, "image"))

    p = sub.add_parser("video", help="recover a directory of PNG frames")
    p.add_argument("--frames", dest="input", required=True)
    _add_solver_args(p, rank=15, rate=0.8, iters=130)
    p.set_defaults(func=lambda a: cmd_media(a, "video"))

    p = sub.add_parser("sweep", help="synthetic runs over several rates and ranks, with a combined figure")
    p.add_argument("--kind", choices=("gaussian", "completion"), default="gaussian")
    _add_synth_args(p)
    p.add_argument("--rates", type=_floats, default=None)
    p.add_argument("--ranks", type=lambda s: list(_ints(s)), default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trip", help="empirical isometry distortion over random bounded low-rank tensors")
    p.add_argument("--dims", type=_ints, default=(10, 10, 10))
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--kind", choices=("gaussian", "completion"), default="gaussian")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fresh", action="store_true", help="draw a new operator for every sample")
    p.add_argument("--out", default=None, help="CSV file; a ratio histogram is written next to it")
    p.set_defaults(func=cmd_trip)

    p = sub.add_parser("bound", help="covering-number and measurement-count bounds")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--dims", type=_ints, required=True)
    p.add_argument("--C", type=float, default=1.0)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except MemoryCapError as exc:
        print(f"tiht: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"tiht: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
