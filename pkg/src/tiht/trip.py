"""Covering-number and measurement-count bounds, and empirical isometry checks.

The measurement bound uses natural logarithms, the covering bound is reported
in bits. Neither formula is clipped: when a logarithm's argument is <= 1 the
value is returned as computed and a :class:`BoundWarning` is issued.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from tiht.cp import sample_srr

__all__ = [
    "BoundWarning",
    "covering_bound_log2",
    "measurement_rhs",
    "measurement_bound",
    "TripEstimate",
    "trip_estimate",
]


class BoundWarning(RuntimeWarning):
    pass


def _order(shape, d):
    return len(shape) if d is None else int(d)


def covering_bound_log2(shape, rank, R, eps, d=None):
    """log2 of ``(3 d r R^d / eps) ** (r * sum(shape))``.

    Upper bound on the eps-covering number of unit-norm rank-`rank` tensors
    with factor norms at most `R`. Evaluated in log space.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not R > 0:
        raise ValueError("R must be positive")
    if rank < 1:
        raise ValueError("rank must be >= 1")
    d = _order(shape, d)
    log2_base = math.log2(3 * d * rank) + d * math.log2(R) - math.log2(eps)
    if log2_base <= 0:
        warnings.warn("covering bound base is <= 1; the bound is vacuous", BoundWarning, stacklevel=2)
    return rank * sum(shape) * log2_base


def measurement_rhs(delta, eps, rank, R, shape, C=1.0, d=None):
    """``C / delta**2 * max(ln(1/eps), r ln(d r R^d) sum(shape))`` without rounding."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not C > 0:
        raise ValueError("C must be positive")
    if not R > 0:
        raise ValueError("R must be positive")
    d = _order(shape, d)
    log_arg = math.log(d * rank) + d * math.log(R)
    if log_arg <= 0:
        warnings.warn("d r R^d <= 1, the rank term is nonpositive", BoundWarning, stacklevel=2)
    term = max(math.log(1.0 / eps), rank * log_arg * sum(shape))
    return C * term / delta**2


def measurement_bound(delta, eps, rank, R, shape, C=1.0, d=None):
    """Number of Gaussian measurements sufficient for the restricted isometry at level `delta`.

    ``ceil`` of :func:`measurement_rhs`. `C` is the unspecified absolute
    constant of the bound.
    """
    return math.ceil(measurement_rhs(delta, eps, rank, R, shape, C, d))


@dataclass
class TripEstimate:
    """Summary of ``||A(X)||^2 / ||X||_F^2`` over sampled bounded low-rank tensors.

    ``delta_hat`` is an empirical distortion: sampling can only bound the true
    isometry constant from below.
    """

    m: int
    rank: int
    R: float
    shape: tuple
    n_samples: int
    min_ratio: float
    max_ratio: float
    mean_ratio: float
    delta_hat: float
    delta: float
    frac_within_delta: float

    CSV_HEADER = "m,r,R,n_samples,min_ratio,max_ratio,mean_ratio,delta_hat,frac_within_delta"

    def csv_row(self):
        vals = [self.m, self.rank, self.R, self.n_samples, self.min_ratio, self.max_ratio,
                self.mean_ratio, self.delta_hat, self.frac_within_delta]
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in vals)


def trip_estimate(operator_factory, shape, rank, R, n_samples, delta=0.5, seed=0,
                  fresh_operator=False, return_ratios=False):
    """Monte-Carlo distortion of a measurement operator over bounded rank-`rank` tensors.

    Parameters
    ----------
    operator_factory : callable
        ``operator_factory(seed) -> operator``.
    shape : tuple of int
    rank : int
    R : float
        Bound on factor column norms of the sampled tensors.
    n_samples : int
    delta : float
        Band ``[1 - delta, 1 + delta]`` for ``frac_within_delta``.
    seed : int
        Drives both tensor and operator seeds.
    fresh_operator : bool
        Draw a new operator per sample instead of one shared operator.
    return_ratios : bool
        Also return the array of ratios.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    x_seeds = rng.integers(0, 2**63, size=n_samples)
    op_seeds = rng.integers(0, 2**63, size=n_samples)
    op = None if fresh_operator else operator_factory(int(op_seeds[0]))
    ratios = np.empty(n_samples)
    for k in range(n_samples):
        A = operator_factory(int(op_seeds[k])) if fresh_operator else op
        _, X = sample_srr(shape, rank, R, seed=int(x_seeds[k]))
        yk = A.apply(X)
        ratios[k] = float(yk @ yk) / float(np.sum(X * X))
    lo, hi = float(ratios.min()), float(ratios.max())
    est = TripEstimate(
        m=A.m,
        rank=rank,
        R=R,
        shape=tuple(shape),
        n_samples=n_samples,
        min_ratio=lo,
        max_ratio=hi,
        mean_ratio=math.fsum(ratios) / n_samples,
        delta_hat=max(1.0 - lo, hi - 1.0, 0.0),
        delta=delta,
        frac_within_delta=float(np.mean(np.abs(ratios - 1.0) <= delta)),
    )
    return (est, ratios) if return_ratios else est
