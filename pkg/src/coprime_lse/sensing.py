"""Partial-Fourier sensing matrices built from window offsets."""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass

import numpy as np

__all__ = ["SensingMatrix", "build_phi", "normalize_columns", "MatrixCache", "fourier_atoms", "dump_csv"]


def fourier_atoms(offsets, N: int) -> np.ndarray:
    """``exp(j 2 pi n o / N)`` for rows ``o`` in ``offsets`` and columns ``n = 0..N-1``.

    Offsets are reduced modulo ``N`` first, which keeps the phase argument
    small and leaves the entries unchanged.
    """
    o = np.mod(np.asarray(offsets, dtype=np.int64), N)
    return np.exp(2j * np.pi * np.outer(o, np.arange(N)) / N)


@dataclass(frozen=True)
class SensingMatrix:
    entries: np.ndarray
    offsets: np.ndarray
    N: int
    normalized: bool = False

    @property
    def shape(self):
        return self.entries.shape

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    def gram(self) -> np.ndarray:
        return self.entries.conj().T @ self.entries


def build_phi(offsets, N: int) -> SensingMatrix:
    """Row subset of the ``N x N`` Fourier matrix selected by ``offsets mod N``.

    Raises:
        ValueError: if two offsets agree modulo ``N`` (duplicate rows) or
            the first offset is not zero.
    """
    o = np.atleast_1d(np.asarray(offsets, dtype=np.int64))
    if o.ndim != 1 or o.size == 0:
        raise ValueError("offsets must be a non-empty 1-D sequence")
    if o[0] % N != 0:
        raise ValueError("first offset must be 0")
    if np.unique(o % N).size != o.size:
        raise ValueError("offsets collide modulo N; the matrix would have duplicate rows")
    entries = fourier_atoms(o, N)
    entries.flags.writeable = False
    o = o.copy()
    o.flags.writeable = False
    return SensingMatrix(entries, o, N, False)


def normalize_columns(matrix: SensingMatrix) -> SensingMatrix:
    """Scale to unit-norm columns; entries have unit modulus so this divides by ``sqrt(M)``."""
    if matrix.normalized:
        raise ValueError("matrix is already column-normalized")
    entries = matrix.entries / np.sqrt(matrix.M)
    entries.flags.writeable = False
    return SensingMatrix(entries, matrix.offsets, matrix.N, True)


class MatrixCache:
    """Sensing matrices keyed by the offset pattern modulo ``N``.

    Windows that share a pattern share a matrix. Reads are lock-free;
    insertion is serialized.
    """

    def __init__(self, N: int):
        self.N = N
        self._store: dict[tuple[int, ...], SensingMatrix] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._store)

    def get(self, offsets) -> SensingMatrix:
        key = tuple(int(x) for x in np.mod(offsets, self.N))
        hit = self._store.get(key)
        if hit is not None:
            return hit
        with self._lock:
            hit = self._store.get(key)
            if hit is None:
                hit = build_phi(offsets, self.N)
                self._store[key] = hit
        return hit


def dump_csv(matrix: SensingMatrix, path) -> None:
    """Write the matrix as rows of ``re,im`` column pairs (debugging aid)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{part}{n}" for n in range(matrix.N) for part in ("re", "im")])
        for row in matrix.entries:
            writer.writerow([f"{v:.9g}" for z in row for v in (z.real, z.imag)])
