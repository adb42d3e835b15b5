"""Command-line entry point: ``lse plan|synthesize|estimate|baseline|rip|montecarlo|spectrum-demo``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import rip, vb
from .baselines import MusicConfig, music_estimate, music_pseudospectrum, random_sampling_estimate
from .experiments import ExperimentConfig, manifest, run_monte_carlo, run_spectrum_demo, write_spectrum_csv
from .sampling import CoprimeScheme, build_tasks, generate_indices, max_valid_window, max_valid_window_for, plan_table
from .sensing import build_phi, normalize_columns
from .signal_model import (
    LineSpectrum,
    SampleRecord,
    load_json,
    noise_variance_for_snr,
    save_json,
    synthesize,
)

log = logging.getLogger("coprime_lse")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, default=100, help="grid size")
    p.add_argument("--M", default="auto", help="window length, or 'auto' for the largest valid one")
    p.add_argument("--L", type=int, default=30, help="number of tasks")
    p.add_argument("--start", type=int, default=1, help="first record position used (1-based)")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    for name in "abcd":
        p.add_argument(f"--{name}", type=float, default=1e-6, help=f"Gamma hyperparameter {name}")
    p.add_argument("--K", type=int, default=None, help="number of peaks to report")
    p.add_argument("--out-json", type=Path, default=None)
    p.add_argument("--out-csv", type=Path, default=None)


def _emit_estimate(est: vb.SpectrumEstimate, args, extra: dict | None = None) -> None:
    doc = est.to_dict()
    if args.K:
        doc["frequencies"] = vb.extract_frequencies(est, args.K)
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=2)
    if args.out_json:
        args.out_json.write_text(text)
    else:
        print(text)
    if args.out_csv:
        write_spectrum_csv(args.out_csv, est.grid, est.grid_power, est.alpha_expect)


def _hp(args) -> vb.Hyperparams:
    return vb.Hyperparams(args.a, args.b, args.c, args.d)


def cmd_plan(args) -> int:
    scheme = CoprimeScheme.parse(args.scheme)
    w = csv.DictWriter(sys.stdout, ["scheme", "N", "L", "max_M"])
    w.writeheader()
    for row in plan_table(scheme, args.N, _ints(args.L), rule=args.rule):
        w.writerow(row)
    return 0


def cmd_synthesize(args) -> int:
    if args.spectrum:
        spec = load_json(args.spectrum)
    else:
        if not args.freqs:
            raise ValueError("give --spectrum or --freqs")
        freqs = _floats(args.freqs)
        moduli = _floats(args.moduli) if args.moduli else [1.0] * len(freqs)
        phases = np.random.default_rng(args.seed).uniform(0, 2 * np.pi, len(freqs))
        spec = LineSpectrum(freqs, np.asarray(moduli) * np.exp(1j * phases))
    if args.nyquist:
        idx = np.arange(1, args.count + 1)
    else:
        scheme = CoprimeScheme.parse(args.scheme)
        idx = generate_indices(scheme, scheme.p * (args.count + 1))[: args.count]
    noise = noise_variance_for_snr(spec, args.snr) if args.snr is not None else 0.0
    rec = synthesize(spec, idx, noise, seed=args.seed)
    save_json(rec, args.out)
    if args.spectrum_out:
        save_json(spec, args.spectrum_out)
    return 0


def _window_length(args, record: SampleRecord) -> int:
    if str(args.M) != "auto":
        return int(args.M)
    if getattr(args, "scheme", None):
        return max_valid_window(CoprimeScheme.parse(args.scheme), args.N, args.L, start=args.start)
    return max_valid_window_for(record.indices, args.N, args.L, start=args.start)


def cmd_estimate(args) -> int:
    record = load_json(args.samples)
    if not isinstance(record, SampleRecord):
        raise ValueError("--samples must hold a SampleRecord")
    M = _window_length(args, record)
    tasks = build_tasks(record, M, args.L, args.N, args.start)
    est = vb.run(tasks, _hp(args), args.max_iter, args.tol)
    _emit_estimate(est, args, {"M": M, "L": args.L})
    return 0


def cmd_baseline(args) -> int:
    if args.method == "music":
        record = load_json(args.samples)
        K = args.K or 1
        mcfg = MusicConfig(K, args.N, args.subarray)
        power = music_pseudospectrum(record.values, mcfg)
        est = vb.SpectrumEstimate(power, np.full(args.N, np.nan),
                                  [(i / args.N, float(power[i])) for i in vb.find_peaks(power)], True, 0)
        args.K = K
        _emit_estimate(est, args, {"method": "music", "frequencies": music_estimate(record, mcfg)})
        return 0
    spec = load_json(args.spectrum)
    if str(args.M) == "auto":
        raise ValueError("random-cs needs an explicit --M")
    noise = noise_variance_for_snr(spec, args.snr) if args.snr is not None else 0.0
    est = random_sampling_estimate(spec, noise, int(args.M), args.L, args.N, _hp(args), args.seed,
                                   args.mode, args.max_iter, args.tol)
    _emit_estimate(est, args, {"method": "random-cs", "M": int(args.M), "L": args.L})
    return 0


def cmd_rip(args) -> int:
    scheme = CoprimeScheme.parse(args.scheme)
    t = generate_indices(scheme, scheme.p * (args.M + 2))[: args.M]
    phi1 = normalize_columns(build_phi(t - t[0], args.N))
    rand = normalize_columns(rip.random_partial_fourier(args.M, args.N, args.seed))
    ks = range(args.k_min, args.k_max + 1)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rip.sample_subgram_eigs(phi1, ks, args.seed).to_csv(out / "rip_phi1.csv")
    rip.sample_subgram_eigs(rand, ks, args.seed).to_csv(out / "rip_random.csv")
    return 0


def _experiment_config(args) -> ExperimentConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "snr_db": _floats(args.snr) if args.snr else None,
        "methods": args.methods.split(",") if args.methods else None,
        "output_dir": str(args.out) if args.out else None,
        "workers": args.workers,
        "L_values": _ints(args.L_values) if getattr(args, "L_values", None) else None,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def cmd_montecarlo(args) -> int:
    cfg = _experiment_config(args)
    curve = run_monte_carlo(cfg, progress=True)
    w = csv.writer(sys.stdout)
    w.writerow(["method", "snr_db", "success_rate"])
    for p in curve.points:
        w.writerow([p.method, f"{p.snr_db:.9g}", f"{p.success_rate:.9g}"])
    return 0


def cmd_spectrum_demo(args) -> int:
    cfg = _experiment_config(args)
    run_spectrum_demo(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lse", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="admissible (L, M) pairs as CSV")
    p.add_argument("--scheme", required=True, help="comma-separated ratios, e.g. 9,10,11")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--L", default="1,10,30,50", help="comma-separated task counts")
    p.add_argument("--rule", choices=["distinct", "no-wrap"], default="distinct")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("synthesize", help="sample a line spectrum to a JSON record")
    p.add_argument("--spectrum", type=Path, help="LineSpectrum JSON")
    p.add_argument("--freqs", help="comma-separated normalized frequencies")
    p.add_argument("--moduli", help="comma-separated amplitude moduli (phases drawn from --seed)")
    p.add_argument("--scheme", default="9,10,11")
    p.add_argument("--nyquist", action="store_true", help="consecutive indices 1..count instead")
    p.add_argument("--count", type=int, default=56, help="number of samples")
    p.add_argument("--snr", type=float, default=None, help="SNR in dB; omit for noiseless")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--spectrum-out", type=Path, default=None)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("estimate", help="multitask VB estimate from a sample record")
    p.add_argument("--samples", type=Path, required=True)
    p.add_argument("--scheme", default=None, help="ratios used for --M auto (default: the record's own indices)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("baseline", help="MUSIC or random-sampling reference estimate")
    p.add_argument("--method", choices=["music", "random-cs"], required=True)
    p.add_argument("--samples", type=Path, help="consecutive-sample record (music)")
    p.add_argument("--spectrum", type=Path, help="LineSpectrum JSON (random-cs)")
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["windows", "sliding"], default="windows")
    p.add_argument("--subarray", type=int, default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("rip", help="sub-Gram eigenvalue statistics as CSV")
    p.add_argument("--scheme", default="9,10,11")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--M", type=int, default=27)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.set_defaults(func=cmd_rip)

    for name, func, helptext in [
        ("montecarlo", cmd_montecarlo, "success-rate sweep over SNR"),
        ("spectrum-demo", cmd_spectrum_demo, "grid spectra for several task counts"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=Path, default=None, help="ExperimentConfig JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--snr", default=None, help="comma-separated SNRs in dB")
        p.add_argument("--methods", default=None, help="comma-separated: proposed,music,random-cs")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", type=Path, default=None, help="output directory")
        if name == "spectrum-demo":
            p.add_argument("--L-values", dest="L_values", default=None, help="comma-separated task counts")
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except vb.NumericalBreakdown as exc:
        log.error("numerical breakdown: %s", exc)
        return EXIT_NUMERIC
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
