"""End-to-end recovery experiments and their CSV/figure reports."""

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from tiht import io, media
from tiht.cp import AlsConfig, sample_gaussian_cp, sample_srr, threshold
from tiht.plotting import plot_convergence, plot_media
from tiht.sensing import (
    DEFAULT_MEMORY_CAP,
    GaussianOperator,
    make_noise,
    make_operator,
    measurement_count,
    save_descriptor,
)
from tiht.solver import (
    DivergenceError,
    TIHTConfig,
    TIHTTrace,
    convergence_rate,
    iterations_to,
    rate_step,
    relative_error,
    tiht_run,
)

logger = logging.getLogger(__name__)

TRACE_HEADER = ["iter", "residual", "rel_error", "elapsed_ms"]
SUMMARY_HEADER = [
    "mode", "dims", "rank", "rate", "m", "noise", "iters", "step",
    "final_error", "final_residual", "iters_to_1e-3", "empirical_rate",
    "baseline_error", "status",
]
SUCCESS_LEVEL = 1e-3

__all__ = [
    "ExperimentSpec",
    "TrialResult",
    "synth_trial",
    "run_synth",
    "run_real",
    "run_sweep",
    "write_trace_csv",
    "read_trace_csv",
    "write_summary_csv",
]


@dataclass
class ExperimentSpec:
    """One experiment. ``mode`` is synth-gaussian, synth-complete, image or video.

    ``step`` is a number or ``"rate"`` (``m / N``); ``None`` picks 1 for the
    synthetic modes and ``"rate"`` for image and video.
    """

    mode: str
    rank: int
    rate: float
    dims: tuple = None
    input: str = None
    noise: float = 0.0
    iters: int = 200
    seed_op: int = 1
    seed_noise: int = 2
    seed_x: int = 3
    seed_als: int = 4
    gen: str = "srr"
    R: float = 2.0
    step: object = None
    out: str = None
    als: AlsConfig = field(default_factory=AlsConfig)
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if self.mode not in ("synth-gaussian", "synth-complete", "image", "video"):
            raise ValueError(f"unknown experiment mode {self.mode!r}")
        if not 0 < self.rate <= 1:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        synthetic = self.mode.startswith("synth")
        if synthetic and (self.dims is None or self.input is not None):
            raise ValueError("synthetic experiments take dims and no input path")
        if not synthetic and (self.input is None or self.dims is not None):
            raise ValueError("image and video experiments take an input path and no dims")
        if self.gen not in ("srr", "paper"):
            raise ValueError("gen must be 'srr' or 'paper'")
        if self.dims is not None:
            self.dims = tuple(int(n) for n in self.dims)

    @property
    def kind(self):
        return "completion" if self.mode == "synth-complete" else "gaussian"


@dataclass
class TrialResult:
    trace: TIHTTrace
    truth: np.ndarray
    operator: object
    diverged: bool = False
    message: str = ""
    baseline_error: float = float("nan")


def _resolve_step(step, op, mode):
    if step is None:
        step = "rate" if mode in ("image", "video") else 1.0
    if step == "rate":
        return rate_step(op)
    return float(step)


def _recover(op, X, spec, step):
    y = op.apply(X) + make_noise(op.m, spec.noise, seed=spec.seed_noise)
    als = replace(spec.als, init_seed=spec.seed_als)
    cfg = TIHTConfig(rank=spec.rank, max_iters=spec.iters, als=als, step=step)
    try:
        return TrialResult(tiht_run(op, y, cfg, ground_truth=X), X, op)
    except DivergenceError as exc:
        logger.warning("%s", exc)
        return TrialResult(exc.trace, X, op, diverged=True, message=str(exc))


def synth_trial(spec):
    """Plant a low-rank tensor, measure it and run TIHT; no files are written."""
    if spec.gen == "srr":
        _, X = sample_srr(spec.dims, spec.rank, spec.R, seed=spec.seed_x)
    else:
        _, X = sample_gaussian_cp(spec.dims, spec.rank, seed=spec.seed_x)
    m = measurement_count(spec.dims, spec.rate)
    kwargs = {"memory_cap": spec.memory_cap} if spec.kind == "gaussian" else {}
    op = make_operator(spec.kind, spec.dims, m, seed=spec.seed_op, **kwargs)
    return _recover(op, X, spec, _resolve_step(spec.step, op, spec.mode))


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRACE_HEADER)
        for j, res, err, ms in trace.rows():
            w.writerow([j, _fmt(res), _fmt(err), f"{ms:.3f}"])


def read_trace_csv(path):
    """Read a trace CSV back as a dict of columns (empty cells become nan)."""
    cols = {k: [] for k in TRACE_HEADER}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            cols["iter"].append(int(row["iter"]))
            for k in TRACE_HEADER[1:]:
                cols[k].append(float(row[k]) if row[k] else float("nan"))
    return cols


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SUMMARY_HEADER)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in SUMMARY_HEADER])


def _summary(spec, result, step):
    trace = result.trace
    try:
        rate = convergence_rate(trace)
    except ValueError:
        rate = None
    hit = iterations_to(trace, SUCCESS_LEVEL)
    return {
        "mode": spec.mode,
        "dims": "x".join(str(n) for n in result.truth.shape),
        "rank": spec.rank,
        "rate": float(spec.rate),
        "m": result.operator.m,
        "noise": float(spec.noise),
        "iters": len(trace) - 1,
        "step": float(step),
        "final_error": trace.rel_error[-1],
        "final_residual": trace.residual[-1],
        "iters_to_1e-3": hit,
        "empirical_rate": rate,
        "baseline_error": result.baseline_error,
        "status": "diverged" if result.diverged else "ok",
    }


def _write_common(spec, result, step, title):
    os.makedirs(spec.out, exist_ok=True)
    trace = result.trace
    write_trace_csv(trace, os.path.join(spec.out, "trace.csv"))
    summary = _summary(spec, result, step)
    write_summary_csv([summary], os.path.join(spec.out, "summary.csv"))
    save_descriptor(result.operator, os.path.join(spec.out, "operator.txt"))
    if trace.estimate is not None:
        io.write_tensor(trace.estimate, os.path.join(spec.out, "estimate.tnsr"))
    if trace.decomposition is not None:
        io.write_cp(trace.decomposition, os.path.join(spec.out, "estimate_cp"))
    plot_convergence({title: trace.rel_error}, os.path.join(spec.out, "convergence.png"), title=title)
    return summary


def run_synth(spec):
    """Synthetic recovery experiment.

    Writes ``trace.csv``, ``summary.csv``, ``estimate.tnsr``, the estimate's
    CP factors, the operator descriptor and ``convergence.png`` to
    ``spec.out`` (when set) and returns the summary row.
    """
    result = synth_trial(spec)
    step = _resolve_step(spec.step, result.operator, spec.mode)
    if spec.out is None:
        return _summary(spec, result, step)
    title = f"{result.operator.kind}, r={spec.rank}, rate={spec.rate:g}, noise={spec.noise:g}"
    return _write_common(spec, result, step, title)


def load_media(spec):
    if spec.mode == "image":
        return media.load_image_tensor(spec.input)
    return media.load_video_tensor(spec.input)


def real_trial(spec, X=None):
    """Measure an image or video tensor with a Gaussian map and run TIHT.

    Also fills ``baseline_error``, the relative distance of `X` to its own
    rank-``spec.rank`` ALS fit.
    """
    if X is None:
        X = load_media(spec)
    m = measurement_count(X.shape, spec.rate)
    op = GaussianOperator(X.shape, m, seed=spec.seed_op, memory_cap=spec.memory_cap)
    step = _resolve_step(spec.step, op, spec.mode)
    result = _recover(op, X, spec, step)
    als = replace(spec.als, init_seed=spec.seed_als)
    result.baseline_error = relative_error(X, threshold(X, spec.rank, als))
    return result, step


def run_real(spec, X=None):
    """Image or video recovery experiment.

    Besides the files of :func:`run_synth`, writes ``recon.png`` (image) or
    ``recon_frame_%03d.png`` (video) and a ``media.png`` overview.
    """
    result, step = real_trial(spec, X)
    if spec.out is None:
        return _summary(spec, result, step)
    title = f"{spec.mode}, r={spec.rank}, rate={spec.rate:g}"
    summary = _write_common(spec, result, step, title)
    estimate = result.trace.estimate
    if estimate is not None:
        if spec.mode == "image":
            media.save_image_tensor(estimate, os.path.join(spec.out, "recon.png"))
            plot_media(result.truth, estimate, result.trace.rel_error, os.path.join(spec.out, "media.png"), title)
        else:
            media.save_video_frames(estimate, spec.out)
            plot_media(result.truth[:, :, 0], estimate[:, :, 0], result.trace.rel_error,
                       os.path.join(spec.out, "media.png"), title)
    return summary


def _run_one(spec):
    summary = run_synth(spec)
    errors = read_trace_csv(os.path.join(spec.out, "trace.csv"))["rel_error"]
    return summary, errors


def run_sweep(base, rates=None, ranks=None, jobs=1):
    """Run `base` over a grid of rates and ranks, one subdirectory per run.

    Writes ``sweep.csv`` (one summary row per run) and ``convergence.png``
    with every error curve under ``base.out``. Runs are independent and
    seeded from `base`, so ``jobs > 1`` gives the same files as a serial run.
    """
    rates = list(rates or [base.rate])
    ranks = list(ranks or [base.rank])
    specs = []
    for rank in ranks:
        for rate in rates:
            sub = os.path.join(base.out, f"rank{rank}_rate{rate:g}")
            specs.append(replace(base, rank=rank, rate=rate, out=sub))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, specs))
    else:
        results = [_run_one(s) for s in specs]
    os.makedirs(base.out, exist_ok=True)
    write_summary_csv([s for s, _ in results], os.path.join(base.out, "sweep.csv"))
    curves = {}
    for spec, (_, errors) in zip(specs, results):
        label = []
        if len(ranks) > 1:
            label.append(f"r={spec.rank}")
        if len(rates) > 1:
            label.append(f"{100 * spec.rate:g}%")
        curves[", ".join(label) or f"r={spec.rank}"] = errors
    kind = "completion" if base.mode == "synth-complete" else "Gaussian"
    plot_convergence(curves, os.path.join(base.out, "convergence.png"),
                     title=f"{kind} measurements, noise {base.noise:g}")
    return [s for s, _ in results]
