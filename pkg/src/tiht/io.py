"""TNSR1 tensor files and on-disk CP decompositions.

A TNSR1 file is the 5-byte magic ``TNSR1``, the order ``d`` as a little-endian
uint32, ``d`` little-endian uint32 dimensions, then the entries as
little-endian float64 in column-major order.

A CP decomposition is stored as a directory holding ``factor_<k>.tnsr`` for
each mode ``k`` (order-2 TNSR1 files) and ``weights.txt`` with one weight per
line.
"""

import os
import struct

import numpy as np

from tiht.cp import CPDecomposition
from tiht.tensor import as_tensor

MAGIC = b"TNSR1"

__all__ = ["write_tensor", "read_tensor", "write_cp", "read_cp"]


def write_tensor(X, path):
    X = as_tensor(X)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack(f"<{X.ndim + 1}I", X.ndim, *X.shape))
        f.write(X.astype("<f8").tobytes(order="F"))


def read_tensor(path):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:5] != MAGIC:
        raise ValueError(f"{path}: not a TNSR1 file")
    if len(blob) < 9:
        raise ValueError(f"{path}: truncated header")
    (d,) = struct.unpack_from("<I", blob, 5)
    if d < 1:
        raise ValueError(f"{path}: order must be >= 1")
    header = 9 + 4 * d
    if len(blob) < header:
        raise ValueError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{d}I", blob, 9)
    count = int(np.prod(shape, dtype=np.int64))
    if len(blob) != header + 8 * count:
        raise ValueError(f"{path}: expected {count} entries for shape {shape}")
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=header)
    return np.array(data.reshape(shape, order="F"), dtype=np.float64)


def write_cp(D, directory):
    os.makedirs(directory, exist_ok=True)
    for k, A in enumerate(D.factors):
        write_tensor(A, os.path.join(directory, f"factor_{k}.tnsr"))
    with open(os.path.join(directory, "weights.txt"), "w") as f:
        for w in D.weights:
            f.write(f"{float(w)!r}\n")


def read_cp(directory):
    with open(os.path.join(directory, "weights.txt")) as f:
        weights = [float(line) for line in f if line.strip()]
    factors = []
    k = 0
    while os.path.exists(os.path.join(directory, f"factor_{k}.tnsr")):
        factors.append(read_tensor(os.path.join(directory, f"factor_{k}.tnsr")))
        k += 1
    D = CPDecomposition(weights, factors)
    D.normalized = bool(np.allclose(D.factor_norms(), 1.0, rtol=0, atol=1e-10))
    return D
