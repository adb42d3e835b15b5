"""Seeded Monte-Carlo sweeps, success scoring and CSV emission."""

from __future__ import annotations

import csv
import json
import logging
import math
import subprocess
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import __version__, vb
from .baselines import MusicConfig, music_estimate, music_pseudospectrum, random_sampling_tasks
from .sampling import CoprimeScheme, build_tasks, generate_indices, max_valid_window
from .signal_model import (
    LineSpectrum,
    circular_distance,
    noise_variance_for_snr,
    random_spectrum,
    synthesize,
)

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "CurvePoint",
    "SuccessCurve",
    "TrialResult",
    "is_success",
    "trial_seed",
    "run_trial",
    "run_monte_carlo",
    "run_spectrum_demo",
    "write_curve",
    "read_curve",
    "manifest",
]

log = logging.getLogger(__name__)

METHODS = ("proposed", "music", "random-cs")
SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def is_success(true_freqs, est_freqs, N: int) -> bool:
    """True iff the estimates can be paired one-to-one with the truth within ``0.5 / N``.

    Distances are circular. The pairing is the best possible one: success
    means the bipartite "within tolerance" graph has a perfect matching.
    """
    t = np.asarray(true_freqs, dtype=float).ravel()
    e = np.asarray(est_freqs, dtype=float).ravel()
    if t.size != e.size:
        raise ValueError(f"expected {t.size} estimates, got {e.size}")
    if t.size == 0:
        return True
    miss = circular_distance(t[:, None], e[None, :]) > 0.5 / N + 1e-12
    rows, cols = linear_sum_assignment(miss.astype(float))
    return not miss[rows, cols].any()


@dataclass
class ExperimentConfig:
    """Everything that determines a sweep; ``seed`` makes it reproducible."""

    scheme: str = "7,8,9"
    N: int = 100
    M: int | str = "auto"
    L: int = 30
    K: int = 3
    snr_db: list = field(default_factory=lambda: [10.0, 15.0, 20.0, 25.0, 30.0])
    trials: int = 100
    freqs: list | None = None              # fixed frequencies; None draws them per trial
    min_separation: float = 0.02
    on_grid: bool = True
    amplitudes: list | None = None         # fixed moduli; None draws them per trial
    amp_range: tuple = (0.1, 1.0)
    seed: int = 0
    methods: list = field(default_factory=lambda: list(METHODS))
    output_dir: str | None = None
    start: int = 1
    max_iter: int = 200
    tol: float = 1e-6
    hyperparams: dict = field(default_factory=lambda: asdict(vb.Hyperparams()))
    random_mode: str = "windows"
    music_subarray: int | None = None
    L_values: list | None = None            # used by the spectrum demo
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        CoprimeScheme.parse(self.scheme)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if not self.snr_db:
            raise ValueError("snr_db list is empty")
        if self.M != "auto" and (not isinstance(self.M, int) or self.M < 2):
            raise ValueError("M must be 'auto' or an integer >= 2")
        if self.freqs is not None:
            f = np.asarray(self.freqs, dtype=float)
            if f.size != self.K:
                raise ValueError("number of fixed frequencies must equal K")
            if f.size > 1:
                gaps = circular_distance(f[:, None], f[None, :])[np.triu_indices(f.size, 1)]
                if gaps.min() < 2.0 / self.N - 1e-12:
                    log.warning("fixed frequencies closer than 2/N; expect basis-mismatch failures")
        if self.amplitudes is not None and len(self.amplitudes) != self.K:
            raise ValueError("number of fixed amplitudes must equal K")
        vb.Hyperparams(**self.hyperparams)

    @property
    def coprime(self) -> CoprimeScheme:
        return CoprimeScheme.parse(self.scheme)

    def window_length(self) -> int:
        if self.M == "auto":
            return max_valid_window(self.coprime, self.N, self.L, start=self.start)
        return int(self.M)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["amp_range"] = list(self.amp_range)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema version {version}")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "amp_range" in data:
            data["amp_range"] = tuple(data["amp_range"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _snr_key(snr_db: float) -> int:
    if math.isinf(snr_db):
        return 1 if snr_db > 0 else 2
    # finite keys start above the two reserved for +/-inf
    return 3 + int(round((snr_db + 1000.0) * 1000.0))


def trial_seed(master: int, method: str | None, snr_db: float | None, trial: int) -> np.random.SeedSequence:
    """Seed for one trial, a pure function of its coordinates.

    ``method=None`` gives the signal stream shared by every method in a
    trial; ``snr_db=None`` additionally shares it across SNR points.
    """
    tag = 0 if method is None else zlib.crc32(method.encode())
    snr = 0 if snr_db is None else _snr_key(snr_db)
    return np.random.SeedSequence([int(master), tag, snr, int(trial)])


def draw_spectrum(cfg: ExperimentConfig, trial: int) -> LineSpectrum:
    rng = np.random.default_rng(trial_seed(cfg.seed, None, None, trial))
    if cfg.freqs is None:
        spec = random_spectrum(cfg.K, cfg.N, cfg.min_separation, cfg.on_grid, seed=rng, amp_range=tuple(cfg.amp_range))
        freqs, moduli = spec.freqs, np.abs(spec.amps)
    else:
        freqs = np.asarray(cfg.freqs, dtype=float)
        moduli = rng.uniform(*cfg.amp_range, cfg.K)
    if cfg.amplitudes is not None:
        moduli = np.asarray(cfg.amplitudes, dtype=float)
    phases = rng.uniform(0.0, 2 * np.pi, cfg.K)
    return LineSpectrum(freqs, moduli * np.exp(1j * phases))


@dataclass(frozen=True)
class TrialResult:
    method: str
    snr_db: float
    trial: int
    success: bool
    runtime: float
    reason: str = ""


def _estimate(cfg: ExperimentConfig, method: str, spec: LineSpectrum, noise_var: float, seed, L=None):
    """Run one method; returns ``(frequencies, spectrum-like array or estimate)``."""
    L = cfg.L if L is None else L
    M = cfg.window_length() if L == cfg.L else (
        int(cfg.M) if cfg.M != "auto" else max_valid_window(cfg.coprime, cfg.N, L, start=cfg.start))
    hp = vb.Hyperparams(**cfg.hyperparams)
    rng = np.random.default_rng(seed)
    if method == "proposed":
        count = cfg.start - 1 + L + M - 1
        idx = generate_indices(cfg.coprime, cfg.coprime.p * (count + 1))[:count]
        rec = synthesize(spec, idx, noise_var, seed=rng)
        est = vb.run(build_tasks(rec, M, L, cfg.N, cfg.start), hp, cfg.max_iter, cfg.tol)
        return vb.extract_frequencies(est, cfg.K), est
    if method == "random-cs":
        tasks = random_sampling_tasks(spec, noise_var, M, L, cfg.N, rng, cfg.random_mode)
        est = vb.run(tasks, hp, cfg.max_iter, cfg.tol)
        return vb.extract_frequencies(est, cfg.K), est
    if method == "music":
        rec = synthesize(spec, np.arange(1, L + M), noise_var, seed=rng)
        mcfg = MusicConfig(cfg.K, cfg.N, cfg.music_subarray)
        return music_estimate(rec, mcfg), music_pseudospectrum(rec.values, mcfg)
    raise ValueError(f"unknown method {method!r}")


def run_trial(cfg: ExperimentConfig, method: str, snr_db: float, trial: int) -> TrialResult:
    """One scored trial. Failures of the estimator count as unsuccessful trials."""
    t0 = time.perf_counter()
    try:
        spec = draw_spectrum(cfg, trial)
        noise_var = noise_variance_for_snr(spec, snr_db)
        freqs, _ = _estimate(cfg, method, spec, noise_var, trial_seed(cfg.seed, method, snr_db, trial))
        ok, reason = is_success(spec.freqs, freqs, cfg.N), ""
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("trial %s/%s/%d failed: %s", method, snr_db, trial, exc)
        ok, reason = False, f"{type(exc).__name__}: {exc}"
    return TrialResult(method, float(snr_db), trial, bool(ok), time.perf_counter() - t0, reason)


@dataclass(frozen=True)
class CurvePoint:
    method: str
    snr_db: float
    trials: int
    successes: int
    mean_runtime: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


@dataclass
class SuccessCurve:
    points: list
    trials: list = field(default_factory=list, compare=False)

    def rate(self, method: str, snr_db: float) -> float:
        for p in self.points:
            if p.method == method and p.snr_db == snr_db:
                return p.success_rate
        raise KeyError((method, snr_db))

    def rates(self, method: str) -> np.ndarray:
        return np.array([p.success_rate for p in self.points if p.method == method])

    def snrs(self, method: str) -> np.ndarray:
        return np.array([p.snr_db for p in self.points if p.method == method])


def _job(args):
    return run_trial(*args)


def run_monte_carlo(cfg: ExperimentConfig, progress: bool = False) -> SuccessCurve:
    """Success rate of every method at every SNR over ``cfg.trials`` trials.

    Results are reduced in (method, snr, trial) order whatever the
    completion order, so the output is a pure function of ``cfg``.
    """
    jobs = [(cfg, m, float(s), t) for m in cfg.methods for s in cfg.snr_db for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=8))
    else:
        results = []
        for j in jobs:
            results.append(_job(j))
            if progress and len(results) % cfg.trials == 0:
                log.info("%s at %g dB done", j[1], j[2])
    points = []
    for m in cfg.methods:
        for s in cfg.snr_db:
            sel = [r for r in results if r.method == m and r.snr_db == float(s)]
            rt = float(_fmt(float(np.mean([r.runtime for r in sel]))))
            points.append(CurvePoint(m, float(s), len(sel), sum(r.success for r in sel), rt))
    curve = SuccessCurve(points, results)
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        write_curve(curve, out)
        _write_trials(results, out / "trials.csv")
        (out / "manifest.json").write_text(json.dumps(manifest(cfg), indent=2))
    return curve


def write_curve(curve: SuccessCurve, directory) -> None:
    """``success.csv`` holds the deterministic columns; runtimes go to ``timing.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "success.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "snr_db", "trials", "successes", "success_rate"])
        for p in curve.points:
            w.writerow([p.method, _fmt(p.snr_db), p.trials, p.successes, _fmt(p.success_rate)])
    with open(d / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "snr_db", "mean_runtime_s"])
        for p in curve.points:
            w.writerow([p.method, _fmt(p.snr_db), _fmt(p.mean_runtime)])


def read_curve(directory) -> SuccessCurve:
    d = Path(directory)
    with open(d / "timing.csv", newline="") as fh:
        timing = {(r["method"], float(r["snr_db"])): float(r["mean_runtime_s"]) for r in csv.DictReader(fh)}
    points = []
    with open(d / "success.csv", newline="") as fh:
        for r in csv.DictReader(fh):
            key = (r["method"], float(r["snr_db"]))
            points.append(CurvePoint(key[0], key[1], int(r["trials"]), int(r["successes"]), timing[key]))
    return SuccessCurve(points)


def _write_trials(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "snr_db", "trial", "success", "reason"])
        for r in results:
            w.writerow([r.method, _fmt(r.snr_db), r.trial, int(r.success), r.reason])


def _describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def manifest(cfg: ExperimentConfig, outputs: list | None = None) -> dict:
    return {"version": _describe(), "config": cfg.to_dict(), "outputs": outputs or []}


def run_spectrum_demo(cfg: ExperimentConfig) -> dict:
    """Grid spectra for each ``L`` in ``cfg.L_values`` and each method.

    Uses trial 0 of ``cfg.seed`` and the first SNR in ``cfg.snr_db``.
    Returns ``{(method, L): (grid_frequency, power, alpha_expect)}`` and
    writes one CSV per entry when ``cfg.output_dir`` is set.
    """
    if not cfg.L_values:
        raise ValueError("L_values is empty")
    if cfg.freqs is None:
        raise ValueError("the spectrum demo needs a fixed frequency list")
    spec = draw_spectrum(cfg, 0)
    snr = float(cfg.snr_db[0])
    noise_var = noise_variance_for_snr(spec, snr)
    grid = np.arange(cfg.N) / cfg.N
    results = {}
    for L in cfg.L_values:
        for method in cfg.methods:
            _, out = _estimate(cfg, method, spec, noise_var, trial_seed(cfg.seed, method, snr, 0), L=int(L))
            if isinstance(out, vb.SpectrumEstimate):
                power, alpha = out.grid_power, out.alpha_expect
            else:
                power, alpha = out, np.full(cfg.N, np.nan)
            results[(method, int(L))] = (grid, power, alpha)
    if cfg.output_dir:
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        names = []
        for (method, L), (g, p, a) in results.items():
            name = f"spectrum_{method}_L{L}.csv"
            write_spectrum_csv(out_dir / name, g, p, a)
            names.append(name)
        (out_dir / "manifest.json").write_text(json.dumps(manifest(cfg, names), indent=2))
    return results


def write_spectrum_csv(path, grid, power, alpha) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["grid_frequency", "power", "alpha_expect"])
        for f, p, a in zip(grid, power, alpha):
            w.writerow([_fmt(f), _fmt(p), "" if math.isnan(a) else _fmt(a)])
