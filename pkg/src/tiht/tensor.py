"""Dense tensor kernels.

Tensors are plain ``float64`` numpy arrays. Whenever a tensor is flattened
(vectorization, unfolding, the TNSR1 file format) the layout is column-major:
the first index varies fastest. Modes are 0-based.
"""

import numpy as np

__all__ = [
    "as_tensor",
    "frobenius_norm",
    "inner_product",
    "unfold",
    "fold",
    "khatri_rao",
    "vectorize",
    "devectorize",
]


def as_tensor(X):
    """Return `X` as a float64 array with at least one mode."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 0:
        raise ValueError("tensor must have order d >= 1")
    if 0 in X.shape:
        raise ValueError(f"every dimension must be >= 1, got {X.shape}")
    return X


def frobenius_norm(X):
    X = np.asarray(X, dtype=np.float64)
    return float(np.sqrt(np.sum(X * X)))


def inner_product(X, Y):
    """Sum of the elementwise product of two tensors of equal shape."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return float(np.dot(X.ravel(), Y.ravel()))


def _check_mode(mode, ndim):
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for order-{ndim} tensor")


def unfold(X, mode):
    """Mode-`mode` matricization.

    Entry ``(i_0, ..., i_{d-1})`` lands in row ``i_mode``; the column index
    is formed from the remaining indices in increasing mode order with the
    earliest mode varying fastest (Kolda & Bader convention).

    Returns
    -------
    M : ndarray, shape (n_mode, prod of the other dims)
    """
    X = as_tensor(X)
    _check_mode(mode, X.ndim)
    return np.reshape(np.moveaxis(X, mode, 0), (X.shape[mode], -1), order="F")


def fold(M, mode, shape):
    """Inverse of :func:`unfold`."""
    M = np.asarray(M, dtype=np.float64)
    shape = tuple(int(n) for n in shape)
    _check_mode(mode, len(shape))
    rest = shape[:mode] + shape[mode + 1:]
    if M.ndim != 2 or M.shape != (shape[mode], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(f"matrix of shape {M.shape} cannot be folded into {shape} along mode {mode}")
    return np.moveaxis(np.reshape(M, (shape[mode],) + rest, order="F"), 0, mode)


def khatri_rao(*matrices):
    """Column-wise Kronecker product.

    Column ``j`` of ``khatri_rao(A, B)`` is ``np.kron(A[:, j], B[:, j])``, so the
    row index of the last matrix varies fastest.
    """
    if not matrices:
        raise ValueError("need at least one matrix")
    mats = [np.asarray(M, dtype=np.float64) for M in matrices]
    r = mats[0].shape[1]
    for M in mats:
        if M.ndim != 2 or M.shape[1] != r:
            raise ValueError("all matrices must be 2-D with the same number of columns")
    out = mats[0]
    for M in mats[1:]:
        out = (out[:, None, :] * M[None, :, :]).reshape(-1, r)
    return out


def vectorize(X):
    """Column-major flattening."""
    return as_tensor(X).ravel(order="F")


def devectorize(v, shape):
    v = np.asarray(v, dtype=np.float64)
    shape = tuple(int(n) for n in shape)
    if v.ndim != 1 or v.size != int(np.prod(shape, dtype=np.int64)):
        raise ValueError(f"vector of length {v.size} does not match shape {shape}")
    return np.reshape(v, shape, order="F")
