"""Frequency-sparse complex signals: ground-truth spectra, sampling and noise.

Frequencies are normalized to cycles/sample, ``f = omega / (2 pi)`` in
``[0, 1)``, so a grid of size ``N`` places its points at ``n / N``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "LineSpectrum",
    "SampleRecord",
    "synthesize",
    "noise_variance_for_snr",
    "random_spectrum",
    "complex_to_pairs",
    "pairs_to_complex",
    "save_json",
    "load_json",
]


def complex_to_pairs(values) -> list[list[float]]:
    """Encode complex numbers as ``[re, im]`` pairs for JSON."""
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).ravel()]


def pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def circular_distance(f1, f2):
    """Distance between normalized frequencies on the unit circle."""
    d = np.mod(np.asarray(f1, dtype=float) - np.asarray(f2, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class LineSpectrum:
    """A sum of ``K`` complex sinusoids.

    Args:
        freqs: normalized frequencies in ``[0, 1)``, pairwise distinct.
        amps: complex amplitudes, all non-zero.
    """

    freqs: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float)).copy()
        amps = np.atleast_1d(np.asarray(self.amps, dtype=complex)).copy()
        if freqs.ndim != 1 or freqs.shape != amps.shape:
            raise ValueError("freqs and amps must be 1-D with equal length")
        if freqs.size == 0:
            raise ValueError("a line spectrum needs at least one component")
        if np.any(freqs < 0) or np.any(freqs >= 1):
            raise ValueError("frequencies must lie in [0, 1)")
        if np.unique(freqs).size != freqs.size:
            raise ValueError("frequencies must be pairwise distinct")
        if np.any(np.abs(amps) == 0):
            raise ValueError("amplitudes must be non-zero")
        freqs.flags.writeable = False
        amps.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "amps", amps)

    @property
    def K(self) -> int:
        return self.freqs.size

    @property
    def power(self) -> float:
        """Mean signal power, taken as the sum of squared amplitude moduli."""
        return float(np.sum(np.abs(self.amps) ** 2))

    def evaluate(self, indices) -> np.ndarray:
        """Noiseless samples at integer time indices."""
        t = np.asarray(indices, dtype=float)
        return np.exp(2j * np.pi * np.outer(t, self.freqs)) @ self.amps

    def to_dict(self) -> dict:
        return {
            "type": "LineSpectrum",
            "freqs": [float(f) for f in self.freqs],
            "amps": complex_to_pairs(self.amps),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LineSpectrum":
        return cls(np.asarray(data["freqs"], dtype=float), pairs_to_complex(data["amps"]))

    def __eq__(self, other):
        if not isinstance(other, LineSpectrum):
            return NotImplemented
        return np.array_equal(self.freqs, other.freqs) and np.array_equal(self.amps, other.amps)

    __hash__ = None


@dataclass(frozen=True)
class SampleRecord:
    """Chronologically ordered samples ``y(t_m)`` at integer indices ``t_m``."""

    indices: np.ndarray
    values: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.size and not np.issubdtype(idx.dtype, np.integer):
            if not np.all(idx == np.round(idx)):
                raise ValueError("sample indices must be integers")
        idx = np.atleast_1d(idx.astype(np.int64)).copy()
        vals = np.atleast_1d(np.asarray(self.values, dtype=complex)).copy()
        if idx.shape != vals.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-D with equal length")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        idx.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    def __len__(self):
        return self.indices.size

    def to_dict(self) -> dict:
        return {
            "type": "SampleRecord",
            "indices": [int(t) for t in self.indices],
            "values": complex_to_pairs(self.values),
            "noise_variance": self.noise_variance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleRecord":
        return cls(
            np.asarray(data["indices"], dtype=np.int64),
            pairs_to_complex(data["values"]),
            float(data.get("noise_variance", 0.0)),
        )

    def __eq__(self, other):
        if not isinstance(other, SampleRecord):
            return NotImplemented
        return (
            np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
            and self.noise_variance == other.noise_variance
        )

    __hash__ = None


def complex_noise(rng: np.random.Generator, size, variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian noise with total variance ``variance``."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def synthesize(spec: LineSpectrum, indices, noise_variance: float = 0.0, seed=None) -> SampleRecord:
    """Sample ``spec`` at integer ``indices`` and add complex white Gaussian noise.

    Example:
        >>> rec = synthesize(LineSpectrum([0.25], [1.0]), [1, 2, 3, 4])
        >>> np.round(rec.values, 12)
        array([ 0.+1.j, -1.+0.j, -0.-1.j,  1.-0.j])
    """
    if noise_variance < 0:
        raise ValueError("noise_variance must be non-negative")
    idx = np.asarray(indices)
    if idx.size == 0:
        raise ValueError("index list is empty")
    values = spec.evaluate(idx)
    if noise_variance > 0:
        rng = np.random.default_rng(seed)
        values = values + complex_noise(rng, values.shape, noise_variance)
    return SampleRecord(idx, values, noise_variance)


def noise_variance_for_snr(spec: LineSpectrum, snr_db: float) -> float:
    """Noise variance that puts ``spec`` at ``snr_db`` relative to its total power."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return spec.power / 10.0 ** (snr_db / 10.0)


def random_spectrum(
    K: int,
    grid_N: int,
    min_separation: float = 0.0,
    on_grid: bool = True,
    seed=None,
    amp_range: tuple[float, float] = (0.1, 1.0),
    max_tries: int = 10_000,
) -> LineSpectrum:
    """Draw a random ``K``-component spectrum.

    Frequencies are uniform on ``[0, 1)`` (snapped to ``n / grid_N`` when
    ``on_grid``) and kept at least ``min_separation`` apart on the circle.
    Amplitude moduli are uniform on ``amp_range``; phases are uniform.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K * min_separation >= 1:
        raise ValueError(f"cannot place {K} frequencies {min_separation} apart on the unit circle")
    if on_grid:
        if grid_N < K:
            raise ValueError("grid has fewer points than components")
        if min_separation > 0 and K * math.ceil(min_separation * grid_N - 1e-9) > grid_N:
            raise ValueError("separation infeasible on this grid")
    lo, hi = amp_range
    if not 0 < lo <= hi:
        raise ValueError("amp_range must satisfy 0 < lo <= hi")

    rng = np.random.default_rng(seed)
    freqs: list[float] = []
    tries = 0
    while len(freqs) < K:
        tries += 1
        if tries > max_tries:
            raise ValueError("failed to place frequencies; separation too tight")
        f = rng.integers(grid_N) / grid_N if on_grid else rng.random()
        if freqs and np.min(circular_distance(f, freqs)) < min_separation - 1e-12:
            continue
        if f in freqs:
            continue
        freqs.append(f)
    moduli = rng.uniform(lo, hi, K)
    phases = rng.uniform(0.0, 2 * np.pi, K)
    return LineSpectrum(np.array(freqs), moduli * np.exp(1j * phases))


def save_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj.to_dict(), indent=2))


def load_json(path):
    data = json.loads(Path(path).read_text())
    kinds = {"LineSpectrum": LineSpectrum, "SampleRecord": SampleRecord}
    try:
        return kinds[data["type"]].from_dict(data)
    except KeyError as exc:
        raise ValueError(f"unrecognized JSON document type: {data.get('type')!r}") from exc
