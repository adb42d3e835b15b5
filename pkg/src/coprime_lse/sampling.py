"""Coprime sub-Nyquist index sets and their slicing into overlapping tasks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .signal_model import SampleRecord

__all__ = [
    "CoprimeScheme",
    "Window",
    "TaskSet",
    "generate_indices",
    "max_valid_window",
    "max_valid_window_for",
    "build_tasks",
    "plan_table",
]


@dataclass(frozen=True)
class CoprimeScheme:
    """Pairwise coprime undersampling ratios ``1 < p < q < r``.

    ``r`` may be omitted for a two-ratio scheme, which is accepted with a
    warning since two ratios recover the spectrum less reliably.
    """

    p: int
    q: int
    r: int | None = None

    def __post_init__(self):
        ratios = self.ratios
        if any(int(x) != x for x in ratios):
            raise ValueError("ratios must be integers")
        if ratios[0] <= 1 or any(a >= b for a, b in zip(ratios, ratios[1:])):
            raise ValueError(f"ratios must satisfy 1 < p < q < r, got {ratios}")
        for i, a in enumerate(ratios):
            for b in ratios[i + 1:]:
                if math.gcd(a, b) != 1:
                    raise ValueError(f"ratios {a} and {b} are not coprime")
        if self.r is None:
            warnings.warn("two-ratio scheme: recovery is less reliable than with three ratios", stacklevel=2)

    @property
    def ratios(self) -> tuple[int, ...]:
        return (self.p, self.q) if self.r is None else (self.p, self.q, self.r)

    @property
    def block(self) -> int:
        """Length of the block after which the index pattern repeats."""
        return math.lcm(*self.ratios)

    @property
    def period(self) -> int:
        """Number of sampled indices per ``block``."""
        return len(generate_indices(self, self.block))

    def __str__(self):
        return ",".join(str(x) for x in self.ratios)

    @classmethod
    def parse(cls, text: str) -> "CoprimeScheme":
        parts = [int(x) for x in str(text).replace(" ", "").split(",") if x]
        return cls(*parts)


def generate_indices(scheme: CoprimeScheme, horizon: int) -> np.ndarray:
    """Sorted union of the multiples of each ratio up to ``horizon``.

    >>> generate_indices(CoprimeScheme(9, 10, 11), 28).tolist()
    [9, 10, 11, 18, 20, 22, 27]
    """
    parts = [np.arange(x, horizon + 1, x, dtype=np.int64) for x in scheme.ratios]
    return np.unique(np.concatenate(parts))


def _indices_for(scheme: CoprimeScheme, count: int) -> np.ndarray:
    # the densest ratio guarantees at least horizon // p samples
    horizon = scheme.p * (count + 1)
    idx = generate_indices(scheme, horizon)
    return idx[:count]


def _first_duplicate(offsets: np.ndarray, N: int, rule: str) -> np.ndarray:
    """Per row, the first column at which the window stops being valid."""
    L, width = offsets.shape
    out = np.full(L, width, dtype=np.int64)
    for l in range(L):
        row = offsets[l]
        if rule == "no-wrap":
            bad = np.nonzero(row >= N)[0]
            if bad.size:
                out[l] = bad[0]
            continue
        seen: set[int] = set()
        for m, o in enumerate(row % N):
            if o in seen:
                out[l] = m
                break
            seen.add(int(o))
    return out


def max_valid_window(
    scheme: CoprimeScheme,
    N: int,
    L: int,
    start: int = 1,
    cap: int | None = None,
    rule: str = "distinct",
) -> int:
    """Largest window length ``M`` whose ``L`` sensing matrices have no duplicate rows.

    A window starting at sample ``l`` has offsets ``t[l+m] - t[l]``; its
    matrix duplicates a row exactly when two offsets agree modulo ``N``.
    The returned ``M`` is valid for every one of the ``L`` windows.

    Args:
        rule: ``"distinct"`` checks offsets pairwise distinct modulo ``N``.
            ``"no-wrap"`` is the stricter requirement that every offset is
            below ``N``, i.e. each window fits inside one grid period.
        cap: upper bound on ``M`` (defaults to ``N``, beyond which a
            duplicate is unavoidable).

    Raises:
        ValueError: if no ``M >= 2`` is valid.
    """
    if N < 2 or L < 1 or start < 1:
        raise ValueError("need N >= 2, L >= 1 and start >= 1")
    width = min(N, cap) if cap is not None else N
    t = _indices_for(scheme, start - 1 + L + width)
    try:
        return max_valid_window_for(t, N, L, start, cap, rule)
    except ValueError as exc:
        raise ValueError(f"scheme {scheme}: {exc}") from None


def max_valid_window_for(indices, N: int, L: int, start: int = 1, cap: int | None = None,
                         rule: str = "distinct") -> int:
    """:func:`max_valid_window` for an explicit chronological index stream.

    Windows may not run past the end of ``indices``.
    """
    if N < 2 or L < 1 or start < 1:
        raise ValueError("need N >= 2, L >= 1 and start >= 1")
    if rule not in ("distinct", "no-wrap"):
        raise ValueError(f"unknown rule {rule!r}")
    t = np.asarray(indices, dtype=np.int64)[start - 1:]
    width = min(N, cap) if cap is not None else N
    width = min(width, t.size - L + 1)
    if width < 2:
        raise ValueError(f"too few samples for {L} windows")
    pos = np.arange(L)[:, None] + np.arange(width)[None, :]
    offsets = t[pos] - t[:L, None]
    M = int(_first_duplicate(offsets, N, rule).min())
    if M < 2:
        raise ValueError(f"no valid window length for N={N}, L={L}")
    return M


@dataclass(frozen=True)
class Window:
    """One task: ``M`` consecutive sub-Nyquist samples and their offsets."""

    values: np.ndarray
    offsets: np.ndarray
    start_index: int


@dataclass(frozen=True)
class TaskSet:
    """``L`` overlapping windows of length ``M`` over a grid of size ``N``."""

    windows: tuple[Window, ...]
    M: int
    N: int

    def __post_init__(self):
        if not self.windows:
            raise ValueError("a task set needs at least one window")
        for l, w in enumerate(self.windows):
            o = np.asarray(w.offsets)
            if o.shape != (self.M,) or np.asarray(w.values).shape != (self.M,):
                raise ValueError(f"window {l} does not have length M={self.M}")
            if o[0] != 0 or np.any(np.diff(o) <= 0):
                raise ValueError(f"window {l} offsets must start at 0 and increase")
            if np.unique(o % self.N).size != self.M:
                raise ValueError(f"window {l} has offsets that collide modulo N={self.N}")

    @property
    def L(self) -> int:
        return len(self.windows)

    @cached_property
    def values(self) -> np.ndarray:
        """``(L, M)`` complex sample matrix."""
        out = np.stack([np.asarray(w.values, dtype=complex) for w in self.windows])
        out.flags.writeable = False
        return out

    @cached_property
    def offsets(self) -> np.ndarray:
        """``(L, M)`` integer offset matrix."""
        out = np.stack([np.asarray(w.offsets, dtype=np.int64) for w in self.windows])
        out.flags.writeable = False
        return out

    @property
    def start_indices(self) -> np.ndarray:
        return np.array([w.start_index for w in self.windows], dtype=np.int64)

    def sample_indices(self) -> np.ndarray:
        """Distinct absolute sample indices touched by any window."""
        return np.unique(self.offsets + self.start_indices[:, None])

    @classmethod
    def from_arrays(cls, values, offsets, start_indices, N: int) -> "TaskSet":
        values = np.asarray(values, dtype=complex)
        offsets = np.asarray(offsets, dtype=np.int64)
        windows = tuple(
            Window(v, o, int(s)) for v, o, s in zip(values, offsets, start_indices)
        )
        return cls(windows, values.shape[1], N)


def build_tasks(record: SampleRecord, M: int, L: int, N: int, start: int = 1) -> TaskSet:
    """Slide a length-``M`` window over the record, one sample per step.

    Window ``l`` (1-based) covers record positions ``start + l - 1`` through
    ``start + l + M - 2``, so ``L + M - 1`` consecutive samples are used.
    """
    if M < 1 or L < 1 or start < 1:
        raise ValueError("need M >= 1, L >= 1 and start >= 1")
    need = start - 1 + L + M - 1
    if len(record) < need:
        raise ValueError(f"record holds {len(record)} samples, {need} needed")
    t = record.indices
    pos = (start - 1) + np.arange(L)[:, None] + np.arange(M)[None, :]
    offsets = t[pos] - t[pos[:, :1]]
    for l, row in enumerate(offsets):
        if np.unique(row % N).size != M:
            raise ValueError(f"M={M} gives duplicate rows in window {l + 1}; lower M")
    return TaskSet.from_arrays(record.values[pos], offsets, t[pos[:, 0]], N)


def plan_table(scheme: CoprimeScheme, N: int, L_values, rule: str = "distinct") -> list[dict]:
    """Admissible ``(L, max M)`` pairs for a scheme and grid."""
    rows = []
    for L in L_values:
        rows.append({"scheme": str(scheme), "N": N, "L": int(L),
                     "max_M": max_valid_window(scheme, N, int(L), rule=rule)})
    return rows
