"""Empirical restricted-isometry statistics from random sub-Gram matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .sensing import SensingMatrix, build_phi

__all__ = [
    "RipReport",
    "draw_subsets",
    "subgram_eigenvalues",
    "sample_subgram_eigs",
    "random_partial_fourier",
]


@dataclass(frozen=True)
class RipReport:
    """Eigenvalue statistics of ``k``-column sub-Gram matrices, one entry per ``k``."""

    k_range: np.ndarray
    avg_max_eig: np.ndarray
    avg_min_eig: np.ndarray
    extreme_max_eig: np.ndarray
    extreme_min_eig: np.ndarray
    num_submatrices_per_k: np.ndarray

    @property
    def spread(self) -> np.ndarray:
        """Average distance of the eigenvalue envelope from 1."""
        return np.maximum(self.avg_max_eig - 1.0, 1.0 - self.avg_min_eig)

    def rows(self):
        for i, k in enumerate(self.k_range):
            yield {
                "k": int(k),
                "avg_max": float(self.avg_max_eig[i]),
                "avg_min": float(self.avg_min_eig[i]),
                "extreme_max": float(self.extreme_max_eig[i]),
                "extreme_min": float(self.extreme_min_eig[i]),
            }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, ["k", "avg_max", "avg_min", "extreme_max", "extreme_min"])
            writer.writeheader()
            for row in self.rows():
                writer.writerow({key: (f"{v:.9g}" if isinstance(v, float) else v) for key, v in row.items()})


def draw_subsets(N: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniformly random ``k``-subsets of ``range(N)``, as rows."""
    keys = rng.random((count, N))
    return np.argpartition(keys, k - 1, axis=1)[:, :k] if k < N else np.argsort(keys, axis=1)


def subgram_eigenvalues(entries: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of ``Phi_K^H Phi_K`` for every row ``K`` of ``subsets``."""
    cols = entries[:, subsets]                  # (M, count, k)
    cols = np.moveaxis(cols, 0, 1)              # (count, M, k)
    gram = cols.conj().transpose(0, 2, 1) @ cols
    return np.linalg.eigvalsh(gram)


def sample_subgram_eigs(matrix: SensingMatrix, k_range=range(2, 13), seed=0, draws_per_k=None) -> RipReport:
    """Sample ``k^2 N`` column subsets for each ``k`` and summarize their Gram spectra.

    Each ``k`` draws from its own stream spawned from ``(seed, k)``, so
    results for one ``k`` do not depend on which other ``k`` are requested.
    Subsets are drawn independently and may repeat across draws.
    """
    if not matrix.normalized:
        raise ValueError("RIP statistics need a column-normalized matrix")
    ks = np.asarray(list(k_range), dtype=int)
    if ks.size == 0 or ks.min() < 1:
        raise ValueError("k_range must hold positive sparsity levels")
    if ks.max() > matrix.M:
        raise ValueError(f"k={ks.max()} exceeds M={matrix.M}; the sub-Gram matrix is singular")
    N = matrix.N
    stats = np.empty((ks.size, 4))
    counts = np.empty(ks.size, dtype=int)
    for i, k in enumerate(ks):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(k)]))
        count = draws_per_k if draws_per_k is not None else int(k) ** 2 * N
        eig = subgram_eigenvalues(matrix.entries, draw_subsets(N, int(k), count, rng))
        lo, hi = eig[:, 0], eig[:, -1]
        stats[i] = hi.mean(), lo.mean(), hi.max(), lo.min()
        counts[i] = count
    return RipReport(ks, stats[:, 0], stats[:, 1], stats[:, 2], stats[:, 3], counts)


def random_partial_fourier(M: int, N: int, seed=None) -> SensingMatrix:
    """Rows of the ``N x N`` Fourier matrix at ``M`` distinct random positions.

    The drawn positions are sorted and shifted so the first is zero; the
    shift multiplies each column by a unit-modulus constant and leaves all
    Gram spectra unchanged.
    """
    if not 1 <= M <= N:
        raise ValueError("need 1 <= M <= N")
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(N, size=M, replace=False))
    return build_phi(rows - rows[0], N)
