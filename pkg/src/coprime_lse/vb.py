"""Multitask complex-valued variational Bayesian sparse recovery.

Every task ``l`` observes ``y_l = Phi_l s_l + noise``. The coefficient
vectors share one vector of prior precisions ``alpha`` (hence one sparsity
profile) and one noise precision ``beta``; both carry Gamma priors. The
mean-field posterior ``q(S) q(alpha) q(beta)`` is found by coordinate
ascent on the evidence lower bound.

Posterior covariances are computed with the Woodbury identity, so each
update costs ``O(M^2 N)`` per distinct sensing matrix rather than
``O(N^3)``. Tasks whose offsets agree modulo ``N`` share one matrix and
therefore one covariance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import digamma, gammaln

from .sampling import TaskSet
from .sensing import MatrixCache

__all__ = [
    "Hyperparams",
    "TaskMatrices",
    "VbState",
    "SpectrumEstimate",
    "NumericalBreakdown",
    "task_matrices",
    "init_state",
    "update_s",
    "update_alpha",
    "update_beta",
    "variational_bound",
    "posterior_covariance",
    "grid_power",
    "run",
    "find_peaks",
    "extract_frequencies",
]

log = logging.getLogger(__name__)

LOG_PI = math.log(math.pi)


class NumericalBreakdown(ArithmeticError):
    """A factorization failed or produced non-finite values."""

    def __init__(self, message: str, task: int | None = None, iteration: int | None = None):
        super().__init__(message)
        self.task = task
        self.iteration = iteration


@dataclass(frozen=True)
class Hyperparams:
    """Gamma prior parameters: ``alpha_i ~ Gamma(a, b)``, ``beta ~ Gamma(c, d)`` (rate form)."""

    a: float = 1e-6
    b: float = 1e-6
    c: float = 1e-6
    d: float = 1e-6

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) <= 0:
            raise ValueError("hyperparameters must be positive")


@dataclass(frozen=True)
class TaskMatrices:
    """Distinct sensing matrices of a task set and the task-to-matrix map."""

    phis: np.ndarray       # (P, M, N)
    pattern: np.ndarray    # (L,) index into phis
    offsets: np.ndarray    # (P, M) generating offsets modulo N

    @property
    def P(self) -> int:
        return self.phis.shape[0]

    def for_task(self, l: int) -> np.ndarray:
        return self.phis[self.pattern[l]]


def task_matrices(tasks: TaskSet, cache: MatrixCache | None = None) -> TaskMatrices:
    cache = cache if cache is not None else MatrixCache(tasks.N)
    keys: dict[tuple, int] = {}
    phis = []
    pattern = np.empty(tasks.L, dtype=np.int64)
    for l, offsets in enumerate(tasks.offsets):
        key = tuple(int(x) for x in offsets % tasks.N)
        if key not in keys:
            keys[key] = len(phis)
            phis.append(cache.get(offsets).entries)
        pattern[l] = keys[key]
    return TaskMatrices(np.stack(phis), pattern, np.array(list(keys), dtype=np.int64))


@dataclass(frozen=True)
class VbState:
    """Variational posterior after some number of sweeps.

    ``sigma_diag``, ``fit_trace`` and ``logdet_sigma`` summarize the
    covariance of each distinct matrix; the full matrices are available
    through :func:`posterior_covariance`.
    """

    mu: np.ndarray               # (L, N)
    sigma_diag: np.ndarray       # (P, N)
    fit_trace: np.ndarray        # (P,) trace(Phi Sigma Phi^H)
    logdet_sigma: np.ndarray     # (P,)
    alpha_expect: np.ndarray     # (N,)
    beta_expect: float
    alpha_shape: float
    alpha_rate: np.ndarray       # (N,)
    beta_shape: float
    beta_rate: float
    iteration: int = 0
    bound: float = -math.inf
    s_alpha: np.ndarray = field(default=None, repr=False)  # alpha used for the current q(S)
    s_beta: float = field(default=None, repr=False)        # beta used for the current q(S)

    @property
    def L(self) -> int:
        return self.mu.shape[0]

    @property
    def N(self) -> int:
        return self.mu.shape[1]


@dataclass(frozen=True)
class SpectrumEstimate:
    grid_power: np.ndarray
    alpha_expect: np.ndarray
    detected: list
    converged: bool
    iterations_used: int
    beta_expect: float = float("nan")
    bound: float = float("nan")
    state: VbState | None = field(default=None, repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.grid_power.size

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.N) / self.N

    def to_dict(self) -> dict:
        return {
            "type": "SpectrumEstimate",
            "N": self.N,
            "grid_power": [float(x) for x in self.grid_power],
            "alpha_expect": [float(x) for x in self.alpha_expect],
            "detected": [[float(f), float(p)] for f, p in self.detected],
            "converged": bool(self.converged),
            "iterations_used": int(self.iterations_used),
            "noise_variance": float(1.0 / self.beta_expect) if self.beta_expect else None,
            "bound": float(self.bound),
        }


def _cholesky(C: np.ndarray, iteration: int | None = None) -> np.ndarray:
    """Batched Cholesky with a one-shot diagonal jitter fallback."""
    try:
        chol = np.linalg.cholesky(C)
        if np.all(np.isfinite(chol)):
            return chol
    except np.linalg.LinAlgError:
        pass
    M = C.shape[-1]
    out = np.empty_like(C)
    eye = np.eye(M)
    for p in range(C.shape[0]):
        try:
            out[p] = np.linalg.cholesky(C[p])
            if np.all(np.isfinite(out[p])):
                continue
        except np.linalg.LinAlgError:
            pass
        jitter = 1e-12 * np.trace(C[p]).real / M
        try:
            out[p] = np.linalg.cholesky(C[p] + jitter * eye)
        except np.linalg.LinAlgError:
            raise NumericalBreakdown(f"covariance factorization failed for matrix {p}",
                                     task=p, iteration=iteration) from None
        if not np.all(np.isfinite(out[p])):
            raise NumericalBreakdown(f"non-finite factor for matrix {p}", task=p, iteration=iteration)
    return out


def _s_moments(alpha: np.ndarray, beta: float, values: np.ndarray, mats: TaskMatrices, iteration=None):
    """Posterior moments of every task given the precisions, via Woodbury.

    With ``D = diag(1/alpha)`` and ``C = Phi D Phi^H + I/beta``:
    ``Sigma = D - D Phi^H C^-1 Phi D`` and ``mu = D Phi^H C^-1 y``.
    Rows of ``Phi`` are Fourier rows, so ``Phi D Phi^H`` is a lag lookup
    into one length-``N`` transform of ``d``, and every product with
    ``Phi`` or ``Phi^H`` is a scatter followed by an FFT.
    """
    offs = mats.offsets
    P, M = offs.shape
    N = alpha.size
    d = 1.0 / alpha
    lag = (offs[:, :, None] - offs[:, None, :]) % N        # o_m - o_m'
    kernel = N * np.fft.ifft(d)                          # sum_n d_n exp(j 2 pi n k / N)
    C = kernel[lag]
    C[:, np.arange(M), np.arange(M)] += 1.0 / beta
    chol = _cholesky(C, iteration)
    Ci = np.linalg.inv(C)
    Ci = 0.5 * (Ci + Ci.conj().transpose(0, 2, 1))

    # phi_n^H C^-1 phi_n = sum_{m,m'} Ci[m, m'] exp(j 2 pi n (o_m' - o_m) / N)
    flat = ((np.arange(P)[:, None, None] * N) + (-lag % N)).ravel()
    acc = (np.bincount(flat, Ci.real.ravel(), P * N)
           + 1j * np.bincount(flat, Ci.imag.ravel(), P * N)).reshape(P, N)
    quad = (N * np.fft.ifft(acc, axis=1)).real
    sigma_diag = d - d * d * quad
    fit_trace = M / beta - np.trace(Ci, axis1=1, axis2=2).real / beta**2
    logdet_C = 2.0 * np.log(np.abs(np.diagonal(chol, axis1=1, axis2=2))).sum(axis=1)
    logdet_sigma = np.sum(np.log(d)) - M * math.log(beta) - logdet_C

    v = np.einsum("lij,lj->li", Ci[mats.pattern], values)
    scattered = np.zeros((values.shape[0], N), dtype=complex)
    np.put_along_axis(scattered, offs[mats.pattern], v, axis=1)
    mu = d * np.fft.fft(scattered, axis=1)

    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma_diag))):
        bad = np.nonzero(~np.all(np.isfinite(mu), axis=1))[0]
        task = int(bad[0]) if bad.size else None
        raise NumericalBreakdown("non-finite posterior moments", task=task, iteration=iteration)
    # round-off can push tiny variances below zero
    sigma_diag = np.maximum(sigma_diag, 0.0)
    fit_trace = np.maximum(fit_trace, 0.0)
    return mu, sigma_diag, fit_trace, logdet_sigma


def init_state(tasks: TaskSet, hp: Hyperparams = Hyperparams(), matrices: TaskMatrices | None = None) -> VbState:
    """Unit prior precisions, noise precision from the sample variance, one ``q(S)`` pass."""
    mats = matrices if matrices is not None else task_matrices(tasks)
    values = tasks.values
    L, M, N = tasks.L, tasks.M, tasks.N
    var = float(np.var(values))
    beta = 1.0 / var if var > 0 else 100.0
    alpha = np.ones(N)
    a_shape = hp.a + L
    c_shape = hp.c + L * M
    mu, sd, tr, ld = _s_moments(alpha, beta, values, mats, 0)
    return VbState(
        mu=mu, sigma_diag=sd, fit_trace=tr, logdet_sigma=ld,
        alpha_expect=alpha, beta_expect=beta,
        alpha_shape=a_shape, alpha_rate=a_shape / alpha,
        beta_shape=c_shape, beta_rate=c_shape / beta,
        iteration=0, bound=-math.inf, s_alpha=alpha, s_beta=beta,
    )


def update_s(state: VbState, tasks: TaskSet, matrices: TaskMatrices) -> VbState:
    """Refresh ``q(s_l)`` for all tasks from the current ``<alpha>`` and ``<beta>``."""
    mu, sd, tr, ld = _s_moments(state.alpha_expect, state.beta_expect, tasks.values, matrices, state.iteration)
    return replace(state, mu=mu, sigma_diag=sd, fit_trace=tr, logdet_sigma=ld,
                   s_alpha=state.alpha_expect, s_beta=state.beta_expect)


def second_moments(state: VbState, matrices: TaskMatrices) -> np.ndarray:
    """``<|s_{l,i}|^2> = |mu_{l,i}|^2 + Sigma_l[i, i]`` as an ``(L, N)`` array."""
    return np.abs(state.mu) ** 2 + state.sigma_diag[matrices.pattern]


def update_alpha(state: VbState, hp: Hyperparams, matrices: TaskMatrices) -> VbState:
    shape = hp.a + state.L
    rate = hp.b + second_moments(state, matrices).sum(axis=0)
    return replace(state, alpha_shape=shape, alpha_rate=rate, alpha_expect=shape / rate)


def residual_energy(state: VbState, tasks: TaskSet, matrices: TaskMatrices) -> float:
    """``sum_l <||y_l - Phi_l s_l||^2>`` under the current ``q(S)``."""
    N = state.N
    pred = np.take_along_axis(N * np.fft.ifft(state.mu, axis=1), matrices.offsets[matrices.pattern], axis=1)
    fit = np.sum(np.abs(tasks.values - pred) ** 2)
    return float(fit + state.fit_trace[matrices.pattern].sum())


def update_beta(state: VbState, tasks: TaskSet, matrices: TaskMatrices, hp: Hyperparams) -> VbState:
    shape = hp.c + tasks.L * tasks.M
    rate = hp.d + residual_energy(state, tasks, matrices)
    return replace(state, beta_shape=shape, beta_rate=rate, beta_expect=shape / rate)


def _gamma_entropy(shape, rate):
    return shape - np.log(rate) + gammaln(shape) + (1.0 - shape) * digamma(shape)


def variational_bound(state: VbState, tasks: TaskSet, matrices: TaskMatrices, hp: Hyperparams) -> float:
    """Evidence lower bound of the current ``q(S) q(alpha) q(beta)``."""
    L, M, N = tasks.L, tasks.M, tasks.N
    e_alpha = state.alpha_shape / state.alpha_rate
    e_log_alpha = digamma(state.alpha_shape) - np.log(state.alpha_rate)
    e_beta = state.beta_shape / state.beta_rate
    e_log_beta = digamma(state.beta_shape) - math.log(state.beta_rate)

    loglik = L * M * (e_log_beta - LOG_PI) - e_beta * residual_energy(state, tasks, matrices)
    moments = second_moments(state, matrices).sum(axis=0)
    logprior_s = L * (np.sum(e_log_alpha) - N * LOG_PI) - np.dot(e_alpha, moments)
    logprior_alpha = np.sum(hp.a * math.log(hp.b) - gammaln(hp.a) + (hp.a - 1) * e_log_alpha - hp.b * e_alpha)
    logprior_beta = hp.c * math.log(hp.d) - gammaln(hp.c) + (hp.c - 1) * e_log_beta - hp.d * e_beta

    entropy_s = L * N * (LOG_PI + 1.0) + state.logdet_sigma[matrices.pattern].sum()
    entropy_alpha = np.sum(_gamma_entropy(state.alpha_shape, state.alpha_rate))
    entropy_beta = _gamma_entropy(state.beta_shape, state.beta_rate)
    return float(loglik + logprior_s + logprior_alpha + logprior_beta
                 + entropy_s + entropy_alpha + entropy_beta)


def posterior_covariance(state: VbState, matrices: TaskMatrices) -> np.ndarray:
    """Full ``(P, N, N)`` covariances of the current ``q(S)``, one per distinct matrix."""
    phis = matrices.phis
    M = phis.shape[1]
    d = 1.0 / state.s_alpha
    weighted = phis * d
    C = weighted @ phis.conj().transpose(0, 2, 1) + np.eye(M) / state.s_beta
    gain = np.linalg.solve(C, weighted)
    return np.diag(d)[None] - weighted.conj().transpose(0, 2, 1) @ gain


def grid_power(state: VbState, matrices: TaskMatrices) -> np.ndarray:
    """Mean posterior second moment of each grid coefficient across tasks."""
    return second_moments(state, matrices).mean(axis=0)


def find_peaks(power: np.ndarray) -> np.ndarray:
    """Indices of circular local maxima, strongest first, ties to the lower index."""
    p = np.asarray(power, dtype=float)
    left, right = np.roll(p, 1), np.roll(p, -1)
    idx = np.nonzero((p >= left) & (p > right))[0]
    order = np.lexsort((idx, -p[idx]))
    return idx[order]


def extract_frequencies(est: SpectrumEstimate, K: int) -> list[float]:
    """Grid frequencies of the ``K`` strongest spectral peaks.

    Peaks are circular local maxima of ``grid_power``. When the spectrum
    has fewer than ``K`` peaks, the remaining slots go to the largest
    non-peak entries.
    """
    N = est.N
    if not 0 <= K <= N:
        raise ValueError("need 0 <= K <= N")
    p = est.grid_power
    chosen = list(find_peaks(p)[:K])
    if len(chosen) < K:
        rest = np.setdiff1d(np.arange(N), chosen)
        rest = rest[np.lexsort((rest, -p[rest]))]
        chosen += list(rest[: K - len(chosen)])
    return [int(i) / N for i in chosen]


def _estimate(state: VbState, matrices: TaskMatrices, converged: bool, keep_state: bool) -> SpectrumEstimate:
    power = grid_power(state, matrices)
    N = power.size
    detected = [(int(i) / N, float(power[i])) for i in find_peaks(power)]
    return SpectrumEstimate(
        grid_power=power,
        alpha_expect=state.alpha_expect.copy(),
        detected=detected,
        converged=converged,
        iterations_used=state.iteration,
        beta_expect=float(state.beta_expect),
        bound=state.bound,
        state=state if keep_state else None,
    )


def run(
    tasks: TaskSet,
    hp: Hyperparams = Hyperparams(),
    max_iter: int = 200,
    tol: float = 1e-6,
    matrices: TaskMatrices | None = None,
    callback: Callable[[VbState], None] | None = None,
    keep_state: bool = False,
) -> SpectrumEstimate:
    """Alternate the precision updates and the coefficient update until done.

    One sweep updates ``q(alpha)`` and ``q(beta)`` from the current
    moments, then ``q(S)`` from the new precisions. Iteration stops after
    ``max_iter`` sweeps, or earlier once the relative change of the bound
    drops below ``tol``.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    mats = matrices if matrices is not None else task_matrices(tasks)
    state = init_state(tasks, hp, mats)
    converged = False
    for it in range(1, max_iter + 1):
        state = update_alpha(state, hp, mats)
        state = update_beta(state, tasks, mats, hp)
        state = replace(state, iteration=it)
        try:
            state = update_s(state, tasks, mats)
        except NumericalBreakdown as exc:
            exc.iteration = it
            raise
        previous = state.bound
        state = replace(state, bound=variational_bound(state, tasks, mats, hp))
        if callback is not None:
            callback(state)
        if math.isfinite(previous) and abs(state.bound - previous) <= tol * abs(state.bound):
            converged = True
            break
    log.debug("vb stopped after %d sweeps (converged=%s)", state.iteration, converged)
    return _estimate(state, mats, converged, keep_state)
