"""Tensor iterative hard thresholding for low CP-rank tensor recovery."""

from tiht.tensor import (
    devectorize,
    fold,
    frobenius_norm,
    inner_product,
    khatri_rao,
    unfold,
    vectorize,
)
from tiht.cp import AlsConfig, CPDecomposition, cp_als, cp_to_dense, sample_srr, threshold
from tiht.sensing import CompletionOperator, GaussianOperator, make_noise, operator_norm
from tiht.solver import TIHTConfig, TIHTTrace, convergence_rate, relative_error, tiht_run
from tiht.trip import TripEstimate, covering_bound_log2, measurement_bound, trip_estimate

__version__ = "0.1.0"

__all__ = [
    "AlsConfig",
    "CPDecomposition",
    "CompletionOperator",
    "GaussianOperator",
    "TIHTConfig",
    "TIHTTrace",
    "TripEstimate",
    "convergence_rate",
    "covering_bound_log2",
    "cp_als",
    "cp_to_dense",
    "devectorize",
    "fold",
    "frobenius_norm",
    "inner_product",
    "khatri_rao",
    "make_noise",
    "measurement_bound",
    "operator_norm",
    "relative_error",
    "sample_srr",
    "threshold",
    "tiht_run",
    "trip_estimate",
    "unfold",
    "vectorize",
]
