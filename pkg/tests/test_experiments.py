import itertools
import json

import numpy as np
import pytest

from coprime_lse.experiments import (
    ExperimentConfig,
    draw_spectrum,
    is_success,
    read_curve,
    run_monte_carlo,
    run_spectrum_demo,
    run_trial,
    trial_seed,
)
from coprime_lse.signal_model import circular_distance


def brute_success(t, e, N):
    return any(all(circular_distance(a, b) <= 0.5 / N + 1e-12 for a, b in zip(t, p))
               for p in itertools.permutations(e))


def quick(**kw):
    base = dict(scheme="9,10,11", L=5, K=1, snr_db=[20.0], trials=3, max_iter=30, methods=["proposed"])
    base.update(kw)
    return ExperimentConfig(**base)


class TestIsSuccess:
    def test_examples(self):
        assert is_success([0.18, 0.35], [0.35, 0.18], 100)
        assert is_success([0.18], [0.185], 100)
        assert not is_success([0.18], [0.19], 100)
        assert is_success([0.998], [0.002], 100)   # wraps around 0
        assert not is_success([0.35, 0.37], [0.35, 0.35], 100)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            K = int(rng.integers(1, 5))
            t = rng.integers(0, 20, K) / 20
            e = (t + rng.integers(-1, 2, K) * rng.choice([0.01, 0.03, 0.05], K)) % 1.0
            e = rng.permutation(e)
            assert is_success(t, e, 20) == brute_success(t, e, 20)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            is_success([0.1, 0.2], [0.1], 100)


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = quick(freqs=[0.3])
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.load(path) == cfg

    def test_rejects(self):
        with pytest.raises(ValueError):
            quick(methods=["esprit"])
        with pytest.raises(ValueError):
            quick(snr_db=[])
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"bogus": 1})
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"schema_version": 99})
        with pytest.raises(ValueError):
            quick(freqs=[0.1, 0.2])

    def test_auto_window(self):
        assert ExperimentConfig(scheme="9,10,11", L=50).window_length() == 27


class TestSeeds:
    def test_pure_function(self):
        a = trial_seed(1, "music", 10.0, 3).generate_state(4)
        b = trial_seed(1, "music", 10.0, 3).generate_state(4)
        np.testing.assert_array_equal(a, b)
        c = trial_seed(1, "proposed", 10.0, 3).generate_state(4)
        assert not np.array_equal(a, c)

    def test_spectrum_shared_across_methods(self):
        cfg1 = quick(methods=["proposed"], K=3)
        cfg2 = quick(methods=["music", "proposed"], K=3)
        for t in range(4):
            assert draw_spectrum(cfg1, t) == draw_spectrum(cfg2, t)

    def test_inserting_a_method_keeps_results(self):
        a = run_trial(quick(methods=["proposed"]), "proposed", 20.0, 1)
        b = run_trial(quick(methods=["music", "proposed"]), "proposed", 20.0, 1)
        assert a.success == b.success


class TestMonteCarlo:
    def test_success_csv_is_byte_identical(self, tmp_path):
        run_monte_carlo(quick(methods=["proposed", "music"], output_dir=str(tmp_path / "a")))
        run_monte_carlo(quick(methods=["proposed", "music"], output_dir=str(tmp_path / "b")))
        assert (tmp_path / "a" / "success.csv").read_bytes() == (tmp_path / "b" / "success.csv").read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        run_monte_carlo(quick(methods=["music"], trials=4, output_dir=str(tmp_path / "s")))
        run_monte_carlo(quick(methods=["music"], trials=4, workers=2, output_dir=str(tmp_path / "p")))
        assert (tmp_path / "s" / "success.csv").read_bytes() == (tmp_path / "p" / "success.csv").read_bytes()

    def test_csv_round_trip_and_counts(self, tmp_path):
        cfg = quick(methods=["proposed", "music"], snr_db=[10.0, 30.0], output_dir=str(tmp_path))
        curve = run_monte_carlo(cfg)
        back = read_curve(tmp_path)
        assert back.points == curve.points
        assert sum(p.trials for p in curve.points) == len(curve.trials) == 2 * 2 * 3
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["scheme"] == "9,10,11"

    def test_noiseless_single_tone_always_found(self):
        curve = run_monte_carlo(quick(snr_db=[float("inf")], trials=5, methods=["proposed", "music"]))
        assert all(p.success_rate == 1.0 for p in curve.points)

    def test_higher_snr_not_worse(self):
        curve = run_monte_carlo(quick(K=3, snr_db=[0.0, 30.0], trials=6, L=10, max_iter=100, methods=["music"]))
        lo, hi = curve.rates("music")
        assert hi >= lo


class TestSpectrumDemo:
    def test_outputs(self, tmp_path):
        cfg = quick(freqs=[0.3], L_values=[1, 5], methods=["proposed", "music"], output_dir=str(tmp_path))
        res = run_spectrum_demo(cfg)
        assert set(res) == {("proposed", 1), ("proposed", 5), ("music", 1), ("music", 5)}
        header = (tmp_path / "spectrum_proposed_L5.csv").read_text().splitlines()[0]
        assert header == "grid_frequency,power,alpha_expect"
        grid, power, _ = res[("proposed", 5)]
        assert grid[np.argmax(power)] == pytest.approx(0.3)

    def test_needs_values(self):
        with pytest.raises(ValueError):
            run_spectrum_demo(quick(freqs=[0.3], L_values=[]))
        with pytest.raises(ValueError):
            run_spectrum_demo(quick(L_values=[1]))
