"""Distance functions and dense pairwise distance matrices.

Similarity between two samples is the negated distance, so "most similar"
always means "smallest distance" in the splitter.
"""

import enum
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset
from ._validation import check_features


class SimilarityError(ValueError):
    """A sample cannot be compared under the requested distance."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SimilarityKind(str, enum.Enum):
    CHEBYSHEV = "chebyshev"
    CITYBLOCK = "cityblock"
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    CORRELATION = "correlation"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown similarity {name!r}; choose one of: {valid}") from None

    def __str__(self):
        return self.value


KINDS = tuple(k.value for k in SimilarityKind)

# Tolerance below which a (centred) vector norm counts as zero.
_DEGENERATE_NORM = 1e-12


def distance(kind, u, v):
    """Distance between two vectors under one of the five supported kinds.

    Cosine and correlation results are clipped to [0, 2] against rounding.
    """
    kind = SimilarityKind.parse(kind)
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise SimilarityError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    if u.shape[0] == 0:
        raise SimilarityError("vectors must have at least one component")

    if kind is SimilarityKind.CHEBYSHEV:
        return float(np.max(np.abs(u - v)))
    if kind is SimilarityKind.CITYBLOCK:
        return float(np.sum(np.abs(u - v)))
    if kind is SimilarityKind.EUCLIDEAN:
        return float(math.sqrt(np.sum((u - v) ** 2)))
    if kind is SimilarityKind.CORRELATION:
        _check_row(kind, u, 0)
        _check_row(kind, v, 1)
        u = u - u.mean()
        v = v - v.mean()
    else:
        _check_row(kind, u, 0)
        _check_row(kind, v, 1)
    cos = float(np.dot(u, v)) / (float(np.linalg.norm(u)) * float(np.linalg.norm(v)))
    return min(2.0, max(0.0, 1.0 - cos))


def _check_row(kind, row, index):
    if kind is SimilarityKind.COSINE:
        if np.linalg.norm(row) <= _DEGENERATE_NORM:
            raise SimilarityError(f"sample {index} has zero norm; cosine distance undefined", index)
    elif kind is SimilarityKind.CORRELATION:
        if np.linalg.norm(row - row.mean()) <= _DEGENERATE_NORM:
            raise SimilarityError(
                f"sample {index} is a constant vector; correlation distance undefined", index
            )


def check_rows(kind, X):
    """Raise :class:`SimilarityError` naming the first row ``kind`` cannot handle."""
    kind = SimilarityKind.parse(kind)
    if kind is SimilarityKind.COSINE:
        norms = np.linalg.norm(X, axis=1)
    elif kind is SimilarityKind.CORRELATION:
        norms = np.linalg.norm(X - X.mean(axis=1, keepdims=True), axis=1)
    else:
        return
    bad = np.flatnonzero(norms <= _DEGENERATE_NORM)
    if bad.size:
        what = "has zero norm" if kind is SimilarityKind.COSINE else "is a constant vector"
        raise SimilarityError(
            f"sample {int(bad[0])} {what}; {kind.value} distance undefined "
            f"({bad.size} degenerate row(s): {bad[:10].tolist()})",
            int(bad[0]),
        )


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    kind: SimilarityKind
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("distance matrix must be square")
        if values.flags.writeable or not values.flags.c_contiguous:
            values = np.array(values, order="C")
            values.flags.writeable = False
        object.__setattr__(self, "kind", SimilarityKind.parse(self.kind))
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.shape[0]

    def summary(self):
        n = self.n
        if n > 1:
            off = self.values[~np.eye(n, dtype=bool)]
            stats = {"min": float(off.min()), "max": float(off.max()), "mean": float(off.mean())}
        else:
            stats = {"min": None, "max": None, "mean": None}
        return {"kind": self.kind.value, "n": n, **stats}


def _resolve_threads(n_jobs):
    if n_jobs is None:
        n_jobs = int(os.environ.get("SBSS_THREADS", "1") or 1)
    if n_jobs <= 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def pairwise_matrix(kind, data, n_jobs=None, block_size=256):
    """Dense symmetric matrix of distances between all rows.

    Parameters
    ----------
    kind : SimilarityKind or str
    data : Dataset or array-like of shape (n, d)
    n_jobs : int, optional
        Worker threads over row blocks; 0 means one per CPU, ``None`` reads
        ``SBSS_THREADS`` (default 1). The result does not depend on it.
    block_size : int
        Rows per work unit.

    Returns
    -------
    DistanceMatrix
    """
    kind = SimilarityKind.parse(kind)
    X = data.features if isinstance(data, Dataset) else check_features(data)
    X = np.ascontiguousarray(X, dtype=np.float64)
    check_rows(kind, X)
    n = X.shape[0]

    out = np.empty((n, n), dtype=np.float64)
    starts = list(range(0, n, block_size))

    # every entry comes from one independent per-pair kernel call,
    # so blocking and thread count cannot change any value
    def fill(start):
        stop = min(start + block_size, n)
        out[start:stop] = cdist(X[start:stop], X, metric=kind.value)

    threads = _resolve_threads(n_jobs)
    if threads == 1 or len(starts) == 1:
        for start in starts:
            fill(start)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))

    if kind in (SimilarityKind.COSINE, SimilarityKind.CORRELATION):
        np.clip(out, 0.0, 2.0, out=out)
    # mirror the upper triangle so symmetry is exact
    lower = np.tril_indices(n, -1)
    out[lower] = out.T[lower]
    np.fill_diagonal(out, 0.0)
    out.flags.writeable = False
    return DistanceMatrix(kind, out)


_MAGIC = b"SBSSDM1\x00"


def save_matrix(matrix, path):
    """Binary dump: 8-byte magic, 16-byte kind name, uint64 n, then row-major float64."""
    kind = matrix.kind.value.encode("ascii").ljust(16, b"\x00")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(kind)
        fh.write(struct.pack("<Q", matrix.n))
        fh.write(np.ascontiguousarray(matrix.values, dtype="<f8").tobytes())


def load_matrix(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path}: not a distance matrix dump")
        kind = fh.read(16).rstrip(b"\x00").decode("ascii")
        (n,) = struct.unpack("<Q", fh.read(8))
        values = np.frombuffer(fh.read(), dtype="<f8")
    if values.size != n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {values.size}")
    return DistanceMatrix(kind, values.reshape(n, n).astype(np.float64))


def save_matrix_summary(matrix, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix.summary(), fh, indent=2)
        fh.write("\n")
