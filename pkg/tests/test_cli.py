import json

import pytest

from coprime_lse.cli import EXIT_CONFIG, main


def test_plan(capsys):
    assert main(["plan", "--scheme", "9,10,11", "--L", "1,50"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "scheme,N,L,max_M"
    assert out[2] == "\"9,10,11\",100,50,27"


def test_synthesize_then_estimate(tmp_path):
    rec = tmp_path / "rec.json"
    assert main(["synthesize", "--freqs", "0.18,0.35,0.37", "--moduli", "0.2,0.4,0.8",
                 "--count", "56", "--snr", "20", "--out", str(rec)]) == 0
    out = tmp_path / "est.json"
    csv_out = tmp_path / "est.csv"
    assert main(["estimate", "--samples", str(rec), "--L", "30", "--K", "3",
                 "--out-json", str(out), "--out-csv", str(csv_out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["M"] == 27
    assert sorted(doc["frequencies"]) == [0.18, 0.35, 0.37]
    assert len(csv_out.read_text().splitlines()) == 101


def test_baselines(tmp_path):
    rec = tmp_path / "rec.json"
    spec = tmp_path / "spec.json"
    main(["synthesize", "--freqs", "0.2,0.6", "--nyquist", "--count", "56", "--snr", "20",
          "--out", str(rec), "--spectrum-out", str(spec)])
    out = tmp_path / "m.json"
    assert main(["baseline", "--method", "music", "--samples", str(rec), "--K", "2", "--out-json", str(out)]) == 0
    assert sorted(json.loads(out.read_text())["frequencies"]) == [0.2, 0.6]
    out = tmp_path / "r.json"
    assert main(["baseline", "--method", "random-cs", "--spectrum", str(spec), "--snr", "20",
                 "--M", "27", "--L", "10", "--K", "2", "--out-json", str(out)]) == 0
    assert sorted(json.loads(out.read_text())["frequencies"]) == [0.2, 0.6]


def test_rip(tmp_path):
    assert main(["rip", "--k-max", "4", "--out-dir", str(tmp_path)]) == 0
    for name in ("rip_phi1.csv", "rip_random.csv"):
        assert len((tmp_path / name).read_text().splitlines()) == 4


def test_montecarlo(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scheme": "9,10,11", "L": 5, "K": 1, "max_iter": 20, "methods": ["music"]}))
    assert main(["montecarlo", "--config", str(cfg), "--trials", "2", "--snr", "20,30",
                 "--out", str(tmp_path / "mc")]) == 0
    assert (tmp_path / "mc" / "success.csv").exists()
    assert capsys.readouterr().out.splitlines()[0] == "method,snr_db,success_rate"


def test_spectrum_demo(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scheme": "9,10,11", "K": 1, "freqs": [0.4], "max_iter": 20,
                               "methods": ["proposed"], "snr_db": [20]}))
    assert main(["spectrum-demo", "--config", str(cfg), "--L-values", "1,3", "--out", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "spectrum_proposed_L3.csv").exists()


@pytest.mark.parametrize("argv", [
    ["plan", "--scheme", "2,4,5"],
    ["montecarlo", "--methods", "esprit"],
    ["estimate", "--samples", "/nonexistent.json"],
])
def test_config_errors_exit_code(argv):
    assert main(argv) == EXIT_CONFIG
