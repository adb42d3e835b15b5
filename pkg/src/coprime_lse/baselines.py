"""Reference estimators: MUSIC on Nyquist-rate samples, and VB recovery from random sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import vb
from .sampling import TaskSet, build_tasks
from .signal_model import LineSpectrum, SampleRecord, synthesize

__all__ = [
    "MusicConfig",
    "smoothed_covariance",
    "music_pseudospectrum",
    "music_estimate",
    "random_sampling_tasks",
    "random_sampling_estimate",
]


@dataclass(frozen=True)
class MusicConfig:
    """MUSIC settings; ``subarray_length=None`` picks ``(n + 1) // 2`` for ``n`` samples."""

    K: int
    grid_N: int = 100
    subarray_length: int | None = None

    def resolve(self, n_samples: int) -> int:
        m = self.subarray_length if self.subarray_length is not None else (n_samples + 1) // 2
        if m > n_samples:
            raise ValueError(f"subarray length {m} exceeds the {n_samples} available samples")
        if self.K >= m:
            raise ValueError(f"model order K={self.K} leaves no noise subspace in a length-{m} subarray")
        return m


def smoothed_covariance(samples, m: int) -> np.ndarray:
    """Forward-backward averaged covariance of all length-``m`` sliding subarrays."""
    y = np.asarray(samples, dtype=complex)
    n_sub = y.size - m + 1
    if n_sub < 1:
        raise ValueError("not enough samples for one subarray")
    X = np.lib.stride_tricks.sliding_window_view(y, m).T      # (m, n_sub)
    R = X @ X.conj().T / n_sub
    return 0.5 * (R + R[::-1, ::-1].conj())


def music_pseudospectrum(samples, cfg: MusicConfig) -> np.ndarray:
    """``1 / ||E_n^H a(f)||^2`` on the grid ``f = n / grid_N``."""
    y = np.asarray(samples, dtype=complex)
    m = cfg.resolve(y.size)
    R = smoothed_covariance(y, m)
    _, vecs = np.linalg.eigh(R)
    noise = vecs[:, : m - cfg.K]
    grid = np.arange(cfg.grid_N) / cfg.grid_N
    steering = np.exp(2j * np.pi * np.outer(np.arange(m), grid))
    proj = noise.conj().T @ steering
    return 1.0 / np.maximum(np.sum(np.abs(proj) ** 2, axis=0), np.finfo(float).tiny)


def music_estimate(samples, cfg: MusicConfig) -> list[float]:
    """The ``K`` strongest pseudo-spectrum peaks from consecutive Nyquist-rate samples."""
    if isinstance(samples, SampleRecord):
        if np.any(np.diff(samples.indices) != 1):
            raise ValueError("MUSIC needs consecutive integer sample indices")
        samples = samples.values
    spectrum = music_pseudospectrum(samples, cfg)
    est = vb.SpectrumEstimate(spectrum, np.full(spectrum.size, np.nan), [], True, 0)
    return vb.extract_frequencies(est, cfg.K)


def random_sampling_tasks(
    spectrum: LineSpectrum,
    noise_variance: float,
    M: int,
    L: int,
    N: int,
    seed=None,
    mode: str = "windows",
) -> TaskSet:
    """Tasks built from randomly placed samples of ``spectrum`` inside ``[1, N]``.

    ``mode="windows"``: each of the ``L`` windows takes its own ``M``
    distinct random indices. A sample index shared by several windows
    holds one noisy value.

    ``mode="sliding"``: ``L + M - 1`` distinct random indices are sorted
    and windowed exactly like the coprime stream, which matches the
    deterministic scheme's sample budget.
    """
    rng = np.random.default_rng(seed)
    if mode == "windows":
        if M > N:
            raise ValueError("need M <= N")
        picks = np.sort(np.stack([rng.choice(N, M, replace=False) for _ in range(L)]), axis=1) + 1
        support = np.unique(picks)
        rec = synthesize(spectrum, support, noise_variance, seed=rng)
        values = rec.values[np.searchsorted(support, picks)]
        return TaskSet.from_arrays(values, picks - picks[:, :1], picks[:, 0], N)
    if mode == "sliding":
        if L + M - 1 > N:
            raise ValueError("sliding mode needs L + M - 1 <= N")
        support = np.sort(rng.choice(N, L + M - 1, replace=False)) + 1
        rec = synthesize(spectrum, support, noise_variance, seed=rng)
        return build_tasks(rec, M, L, N)
    raise ValueError(f"unknown random sampling mode {mode!r}")


def random_sampling_estimate(
    spectrum: LineSpectrum,
    noise_variance: float,
    M: int,
    L: int,
    N: int,
    hp: vb.Hyperparams = vb.Hyperparams(),
    seed=None,
    mode: str = "windows",
    max_iter: int = 200,
    tol: float = 1e-6,
) -> vb.SpectrumEstimate:
    """Run the multitask VB solver on randomly sampled windows."""
    tasks = random_sampling_tasks(spectrum, noise_variance, M, L, N, seed, mode)
    return vb.run(tasks, hp, max_iter=max_iter, tol=tol)
