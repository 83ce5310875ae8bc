"""CP decompositions, the bounded-factor sampler and the CP-ALS thresholding operator."""

from dataclasses import dataclass, field

import numpy as np

from tiht.tensor import as_tensor, frobenius_norm, khatri_rao, unfold

__all__ = [
    "CPDecomposition",
    "AlsConfig",
    "cp_to_dense",
    "sample_srr",
    "sample_gaussian_cp",
    "cp_als",
    "threshold",
]


@dataclass
class CPDecomposition:
    """Weighted sum of rank-one tensors ``sum_i weights[i] * a_i0 o a_i1 o ...``.

    ``factors[j]`` has shape ``(n_j, rank)``; its column ``i`` is the mode-``j``
    vector of component ``i``. When ``normalized`` is true every factor column
    has unit Euclidean norm and the magnitudes live in ``weights``.
    """

    weights: np.ndarray
    factors: list
    normalized: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        self.factors = [np.asarray(A, dtype=np.float64) for A in self.factors]
        if not self.factors:
            raise ValueError("a CP decomposition needs at least one factor")
        r = self.weights.size
        if r < 1:
            raise ValueError("rank must be >= 1")
        for A in self.factors:
            if A.ndim != 2 or A.shape[1] != r:
                raise ValueError(f"factor of shape {A.shape} does not have {r} columns")

    @property
    def rank(self):
        return self.weights.size

    @property
    def shape(self):
        return tuple(A.shape[0] for A in self.factors)

    @property
    def ndim(self):
        return len(self.factors)

    def factor_norms(self):
        """Column norms of every factor, shape ``(ndim, rank)``."""
        return np.array([np.linalg.norm(A, axis=0) for A in self.factors])

    def normalize(self):
        """Equivalent decomposition with unit factor columns.

        Zero columns are replaced by the first standard basis vector and their
        weight is set to zero.
        """
        weights = self.weights.copy()
        factors = []
        for A in self.factors:
            norms = np.linalg.norm(A, axis=0)
            zero = norms == 0
            A = A / np.where(zero, 1.0, norms)
            if zero.any():
                A[:, zero] = 0.0
                A[0, zero] = 1.0
            weights = weights * norms
            factors.append(A)
        return CPDecomposition(weights, factors, normalized=True)

    def permute(self, order):
        order = np.asarray(order)
        return CPDecomposition(self.weights[order], [A[:, order] for A in self.factors], self.normalized)


@dataclass
class AlsConfig:
    """Settings for :func:`cp_als`.

    Restart ``k`` is initialized from ``numpy.random.default_rng(init_seed + k)``.
    """

    max_sweeps: int = 100
    rel_tol: float = 1e-8
    init_seed: int = 0
    num_restarts: int = 3
    ridge: float = 1e-12

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.num_restarts < 1:
            raise ValueError("num_restarts must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


def cp_to_dense(D, shape=None):
    """Materialize a CP decomposition as a dense tensor."""
    if shape is not None and tuple(int(n) for n in shape) != D.shape:
        raise ValueError(f"decomposition has shape {D.shape}, expected {tuple(shape)}")
    X = np.zeros(D.shape)
    # one outer product per component: an exactly negated term cancels exactly
    for i in range(D.rank):
        term = D.weights[i] * D.factors[0][:, i]
        for A in D.factors[1:]:
            term = np.multiply.outer(term, A[:, i])
        X += term
    return X


def sample_srr(shape, rank, R, seed=None, max_draws=100):
    """Draw a random unit-Frobenius-norm tensor of CP-rank `rank` with factor norms <= `R`.

    Factor entries are i.i.d. standard normal; any column longer than `R` is
    shrunk to length `R`. The global scale that brings the tensor to unit
    Frobenius norm is stored in the weights, so the factor columns keep
    norms <= `R`.

    Returns
    -------
    D : CPDecomposition
    X : ndarray
        ``cp_to_dense(D)``, with ``frobenius_norm(X) == 1``.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if not R > 0:
        raise ValueError("R must be positive")
    shape = tuple(int(n) for n in shape)
    rng = np.random.default_rng(seed)
    for _ in range(max_draws):
        factors = []
        for n in shape:
            A = rng.standard_normal((n, rank))
            norms = np.linalg.norm(A, axis=0)
            A *= np.minimum(norms, R) / np.where(norms == 0, 1.0, norms)
            factors.append(A)
        D = CPDecomposition(np.ones(rank), factors)
        X = cp_to_dense(D)
        nrm = frobenius_norm(X)
        if nrm >= 1e-12:
            D = CPDecomposition(D.weights / nrm, factors)
            return D, cp_to_dense(D)
    raise RuntimeError(f"could not draw a non-degenerate tensor in {max_draws} attempts")


def sample_gaussian_cp(shape, rank, seed=None):
    """Rank-`rank` tensor with i.i.d. standard normal factor entries, scaled to unit Frobenius norm."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    factors = [rng.standard_normal((int(n), rank)) for n in shape]
    D = CPDecomposition(np.ones(rank), factors)
    nrm = frobenius_norm(cp_to_dense(D))
    D = CPDecomposition(D.weights / nrm, factors)
    return D, cp_to_dense(D)


def _als_single(W, unfoldings, normW, rank, cfg, rng):
    shape = W.shape
    d = W.ndim
    factors = []
    for n in shape:
        A = rng.standard_normal((n, rank))
        factors.append(A / np.linalg.norm(A, axis=0))
    weights = np.ones(rank)
    residuals = []
    ridge = cfg.ridge * np.eye(rank)
    grams = [A.T @ A for A in factors]
    prev = np.inf
    for _ in range(cfg.max_sweeps):
        for k in range(d):
            others = [factors[j] for j in range(d) if j != k]
            if others:
                V = np.prod([grams[j] for j in range(d) if j != k], axis=0)
                kr = khatri_rao(*others[::-1])
                rhs = unfoldings[k] @ kr
            else:
                V = np.ones((rank, rank))
                rhs = np.repeat(W[:, None], rank, axis=1)
            A = np.linalg.solve(V + ridge, rhs.T).T
            weights = np.linalg.norm(A, axis=0)
            A = A / np.where(weights == 0, 1.0, weights)
            factors[k] = A
            grams[k] = A.T @ A
        D = CPDecomposition(weights, factors)
        res = frobenius_norm(W - cp_to_dense(D))
        residuals.append(res)
        if res <= 1e-15 * normW or abs(prev - res) < cfg.rel_tol * prev:
            break
        prev = res
    return CPDecomposition(weights, [A.copy() for A in factors]).normalize(), residuals


def cp_als(W, rank, cfg=None, full_output=False):
    """Fit a rank-`rank` CP model to `W` by alternating least squares.

    Every sweep updates each factor in turn from the normal equations built on
    the Khatri-Rao product of the other factors (ridge added to the Gram
    matrix). A run stops once the relative change of the fit residual drops
    below ``cfg.rel_tol`` or after ``cfg.max_sweeps`` sweeps. Of
    ``cfg.num_restarts`` random starts, the one with the smallest final
    residual wins (ties go to the earlier restart).

    Parameters
    ----------
    W : array_like
        Tensor to approximate.
    rank : int
    cfg : AlsConfig, optional
    full_output : bool
        Also return a dict with the per-restart residual histories
        (``"residuals"``) and the index of the winning restart (``"best"``).

    Returns
    -------
    D : CPDecomposition
        Normalized decomposition.
    info : dict
        Only if `full_output` is true.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    cfg = cfg or AlsConfig()
    W = as_tensor(W)
    normW = frobenius_norm(W)
    if normW == 0:
        rng = np.random.default_rng(cfg.init_seed)
        factors = [rng.standard_normal((n, rank)) for n in W.shape]
        D = CPDecomposition(np.zeros(rank), factors).normalize()
        return (D, {"residuals": [[0.0]], "best": 0}) if full_output else D

    unfoldings = [unfold(W, k) for k in range(W.ndim)]
    best, best_res, histories, best_idx = None, np.inf, [], 0
    for k in range(cfg.num_restarts):
        rng = np.random.default_rng(cfg.init_seed + k)
        D, residuals = _als_single(W, unfoldings, normW, rank, cfg, rng)
        histories.append(residuals)
        if residuals[-1] < best_res:
            best, best_res, best_idx = D, residuals[-1], k
    if full_output:
        return best, {"residuals": histories, "best": best_idx}
    return best


def threshold(W, rank, cfg=None):
    """Rank-`rank` approximation of `W` via :func:`cp_als`, returned densely."""
    return cp_to_dense(cp_als(W, rank, cfg))
