"""Linear measurement operators from tensor space to R^m."""

import numpy as np

from tiht.tensor import as_tensor, devectorize, frobenius_norm, inner_product, vectorize

__all__ = [
    "DEFAULT_MEMORY_CAP",
    "MemoryCapError",
    "GaussianOperator",
    "CompletionOperator",
    "measurement_count",
    "make_operator",
    "operator_norm",
    "make_noise",
    "save_descriptor",
    "load_descriptor",
]

DEFAULT_MEMORY_CAP = 2 * 1024**3


class MemoryCapError(MemoryError):
    pass


def measurement_count(shape, rate):
    """``floor(rate * prod(shape))``, the number of measurements at a sampling rate."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    N = int(np.prod(shape, dtype=np.int64))
    # guard against 0.6 * 1000 = 599.999...
    return max(1, int(np.floor(rate * N + 1e-9)))


class _Operator:
    kind = None

    def __init__(self, shape, m, seed):
        self.shape = tuple(int(n) for n in shape)
        if not self.shape or min(self.shape) < 1:
            raise ValueError(f"invalid tensor shape {shape}")
        self.m = int(m)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        self.seed = seed
        self.size = int(np.prod(self.shape, dtype=np.int64))

    def _check_tensor(self, X):
        X = as_tensor(X)
        if X.shape != self.shape:
            raise ValueError(f"operator expects shape {self.shape}, got {X.shape}")
        return X

    def _check_measurements(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.m,):
            raise ValueError(f"expected {self.m} measurements, got shape {y.shape}")
        return y

    def __call__(self, X):
        return self.apply(X)

    def descriptor(self):
        shape = ",".join(str(n) for n in self.shape)
        return f"kind={self.kind}\nshape={shape}\nm={self.m}\nseed={self.seed}\n"


class GaussianOperator(_Operator):
    """Dense Gaussian map ``y = G @ vectorize(X)``.

    ``G`` is stored as an ``m x prod(shape)`` matrix with i.i.d. N(0, 1/m)
    entries, drawn from ``numpy.random.default_rng(seed)``.
    """

    kind = "gaussian"

    def __init__(self, shape, m, seed=None, memory_cap=DEFAULT_MEMORY_CAP, matrix=None):
        super().__init__(shape, m, seed)
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=np.float64)
            if matrix.shape != (self.m, self.size):
                raise ValueError(f"matrix must have shape {(self.m, self.size)}, got {matrix.shape}")
            self.matrix = matrix
            return
        nbytes = 8 * self.m * self.size
        if memory_cap is not None and nbytes > memory_cap:
            raise MemoryCapError(
                f"a {self.m} x {self.size} Gaussian matrix needs {nbytes} bytes, over the cap of "
                f"{memory_cap} bytes; lower the rate or the tensor dimensions"
            )
        rng = np.random.default_rng(seed)
        self.matrix = rng.standard_normal((self.m, self.size)) / np.sqrt(self.m)

    @classmethod
    def from_matrix(cls, shape, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(shape, matrix.shape[0], seed=None, matrix=matrix)

    def apply(self, X):
        return self.matrix @ vectorize(self._check_tensor(X))

    def adjoint(self, y):
        return devectorize(self.matrix.T @ self._check_measurements(y), self.shape)


class CompletionOperator(_Operator):
    """Observe `m` entries chosen uniformly without replacement.

    ``observed`` holds sorted column-major linear indices.
    """

    kind = "completion"

    def __init__(self, shape, m, seed=None, observed=None):
        super().__init__(shape, m, seed)
        if self.m > self.size:
            raise ValueError(f"cannot observe {self.m} of {self.size} entries")
        if observed is None:
            rng = np.random.default_rng(seed)
            observed = rng.choice(self.size, size=self.m, replace=False)
        observed = np.sort(np.asarray(observed, dtype=np.int64))
        if observed.size != self.m or np.any(np.diff(observed) == 0):
            raise ValueError("observed indices must be m distinct values")
        if observed[0] < 0 or observed[-1] >= self.size:
            raise ValueError("observed index out of range")
        self.observed = observed

    def apply(self, X):
        return vectorize(self._check_tensor(X))[self.observed]

    def adjoint(self, y):
        v = np.zeros(self.size)
        v[self.observed] = self._check_measurements(y)
        return devectorize(v, self.shape)

    def mask(self):
        """Boolean tensor that is true at observed entries."""
        v = np.zeros(self.size, dtype=bool)
        v[self.observed] = True
        return v.reshape(self.shape, order="F")


def make_operator(kind, shape, m, seed=None, **kwargs):
    if kind == "gaussian":
        return GaussianOperator(shape, m, seed, **kwargs)
    if kind == "completion":
        return CompletionOperator(shape, m, seed, **kwargs)
    raise ValueError(f"unknown operator kind {kind!r}")


def save_descriptor(op, path):
    with open(path, "w") as f:
        f.write(op.descriptor())


def load_descriptor(path, **kwargs):
    """Rebuild an operator from a descriptor written by :func:`save_descriptor`."""
    fields = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                fields[key] = value
    shape = tuple(int(n) for n in fields["shape"].split(","))
    seed = None if fields["seed"] == "None" else int(fields["seed"])
    return make_operator(fields["kind"], shape, int(fields["m"]), seed, **kwargs)


def operator_norm(op, iters=100, tol=1e-8, seed=0):
    """Spectral norm of `op` by power iteration on ``op.adjoint(op.apply(.))``."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(op.shape)
    X /= frobenius_norm(X)
    est = 0.0
    for _ in range(iters):
        Z = op.adjoint(op.apply(X))
        lam = inner_product(X, Z)
        nz = frobenius_norm(Z)
        if nz == 0:
            return 0.0
        X = Z / nz
        if est > 0 and abs(lam - est) < tol * est:
            est = lam
            break
        est = lam
    return float(np.sqrt(max(est, 0.0)))


def make_noise(m, target_norm, seed=None):
    """Gaussian vector of length `m` rescaled to Euclidean norm `target_norm`."""
    if target_norm < 0:
        raise ValueError("target_norm must be nonnegative")
    if target_norm == 0:
        return np.zeros(m)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(m)
    return z * (target_norm / np.linalg.norm(z))
