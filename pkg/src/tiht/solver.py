"""Tensor iterative hard thresholding."""

import time
from dataclasses import dataclass, field

import numpy as np

from tiht.cp import AlsConfig, cp_als, cp_to_dense
from tiht.tensor import frobenius_norm

__all__ = [
    "DivergenceError",
    "TIHTConfig",
    "TIHTTrace",
    "tiht_run",
    "relative_error",
    "convergence_rate",
    "iterations_to",
    "rate_step",
]


class DivergenceError(ArithmeticError):
    """Raised when the iteration blows up; ``trace`` holds the rows recorded so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class TIHTConfig:
    """Solver settings.

    ``stop_tol`` stops the run once ``||y - A(X^j)|| / ||y||`` drops below it;
    the default of 0 runs all ``max_iters`` iterations. Iteration ``j`` seeds
    its ALS restarts with ``als.init_seed + seed + num_restarts * j`` so runs
    are reproducible but successive thresholdings do not share starts.

    ``step`` scales the gradient term. The textbook iteration uses 1; dense
    Gaussian maps with many unknowns per measurement need ``m / N`` (see
    :func:`rate_step`).
    """

    rank: int
    max_iters: int = 200
    als: AlsConfig = field(default_factory=AlsConfig)
    stop_tol: float = 0.0
    seed: int = 0
    step: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class TIHTTrace:
    """Per-iteration record of a solver run.

    Row ``j`` describes iterate ``X^j``; row 0 is the zero initialization.
    ``rel_error`` entries are ``nan`` when no ground truth was supplied.
    """

    iters: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    rel_error: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)
    estimate: np.ndarray = None
    decomposition: object = None

    def append(self, j, residual, rel_error, elapsed_ms):
        self.iters.append(j)
        self.residual.append(residual)
        self.rel_error.append(rel_error)
        self.elapsed_ms.append(elapsed_ms)

    def __len__(self):
        return len(self.iters)

    @property
    def final_error(self):
        return self.rel_error[-1]

    def rows(self):
        return zip(self.iters, self.residual, self.rel_error, self.elapsed_ms)


def relative_error(X, Xhat):
    """``||X - Xhat||_F / ||X||_F``."""
    X = np.asarray(X, dtype=np.float64)
    nrm = frobenius_norm(X)
    if nrm == 0:
        raise ValueError("relative error is undefined for a zero ground truth")
    return frobenius_norm(X - np.asarray(Xhat, dtype=np.float64)) / nrm


def tiht_run(op, y, cfg, ground_truth=None, x0=None):
    """Recover a low CP-rank tensor from ``y = op(X) + z``.

    Starting from ``X^0 = 0`` (or `x0`), repeats

        W^j     = X^j + step * op.adjoint(y - op(X^j))
        X^{j+1} = cp_to_dense(cp_als(W^j, rank))

    for ``cfg.max_iters`` iterations (``step`` is 1 unless configured).

    Parameters
    ----------
    op : GaussianOperator or CompletionOperator
    y : array_like, shape (op.m,)
    cfg : TIHTConfig
    ground_truth : array_like, optional
        Enables the relative-error column of the trace.
    x0 : array_like, optional
        Starting iterate; defaults to zero.

    Returns
    -------
    TIHTTrace

    Raises
    ------
    DivergenceError
        If an iterate becomes non-finite or the residual exceeds
        ``1e6 * ||y||``.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.m,):
        raise ValueError(f"expected {op.m} measurements, got shape {y.shape}")
    if ground_truth is not None:
        ground_truth = np.asarray(ground_truth, dtype=np.float64)
        if ground_truth.shape != op.shape:
            raise ValueError("ground truth shape does not match the operator")
    ynorm = float(np.linalg.norm(y))
    X = np.zeros(op.shape) if x0 is None else np.array(x0, dtype=np.float64)
    D = None
    trace = TIHTTrace()
    start = time.perf_counter()

    def record(j, X):
        r = y - op.apply(X)
        res = float(np.linalg.norm(r))
        if not np.isfinite(res) or res > 1e6 * max(ynorm, np.finfo(float).tiny):
            raise DivergenceError(f"TIHT diverged at iteration {j} (residual {res:g})", trace)
        err = relative_error(ground_truth, X) if ground_truth is not None else float("nan")
        trace.append(j, res, err, 1e3 * (time.perf_counter() - start))
        return r, res

    r, res = record(0, X)
    for j in range(cfg.max_iters):
        if res < cfg.stop_tol * ynorm:
            break
        W = X + cfg.step * op.adjoint(r)
        if not np.all(np.isfinite(W)):
            raise DivergenceError(f"TIHT produced non-finite values at iteration {j}", trace)
        als = AlsConfig(
            max_sweeps=cfg.als.max_sweeps,
            rel_tol=cfg.als.rel_tol,
            init_seed=cfg.als.init_seed + cfg.seed + cfg.als.num_restarts * j,
            num_restarts=cfg.als.num_restarts,
            ridge=cfg.als.ridge,
        )
        D = cp_als(W, cfg.rank, als)
        X = cp_to_dense(D)
        r, res = record(j + 1, X)
    trace.estimate = X
    trace.decomposition = D
    return trace


def rate_step(op):
    """Step ``m / N``, the reciprocal of the typical nonzero eigenvalue of a Gaussian ``A* A``."""
    return op.m / op.size


def iterations_to(trace, level):
    """First iteration whose relative error is <= `level`, or None."""
    for j, e in zip(trace.iters, trace.rel_error):
        if e <= level:
            return j
    return None


def convergence_rate(errors, window=10, floor=1e-12, plateau_tol=1e-2):
    """Empirical contraction factor of an error sequence.

    Entries are used up to the first one at or below `floor`. Trailing
    plateau entries (ratio to the predecessor above ``1 - plateau_tol``) are
    then dropped as long as `window` ratios remain, and the geometric mean of
    the last `window` consecutive ratios is returned. `errors` may be a
    :class:`TIHTTrace` or a sequence.
    """
    if isinstance(errors, TIHTTrace):
        errors = errors.rel_error
    usable = []
    for e in errors:
        if not np.isfinite(e) or e <= floor:
            break
        usable.append(float(e))
    if len(usable) < window + 1:
        raise ValueError(f"need at least {window + 1} errors above {floor}, got {len(usable)}")
    end = len(usable)
    while end > 1 and usable[end - 1] > (1 - plateau_tol) * usable[end - 2]:
        end -= 1
    if end < window + 1:
        end = len(usable)
    tail = np.array(usable[end - window - 1:end])
    return float(np.exp(np.mean(np.log(tail[1:] / tail[:-1]))))
