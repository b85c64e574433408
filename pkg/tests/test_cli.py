import json

import pytest

from modeport.cli import main, parse_config


class TestParsing:
    def test_teleport_flags(self):
        config = parse_config(
            ["teleport", "--theta-prime", "0.7854", "--phi", "0.5"]
        )
        assert config.command == "teleport"
        assert config.theta_prime == pytest.approx(0.7854)
        assert config.phi == pytest.approx(0.5)
        assert config.grid_points == 16
        assert not config.shared_reservoir

    def test_sweep_flags(self):
        config = parse_config(["sweep", "--n", "100", "--seed", "7"])
        assert config.n == 100
        assert config.seed == 7

    def test_grid_too_coarse(self):
        with pytest.raises(SystemExit) as exc:
            parse_config(["teleport", "--grid", "8"])
        assert exc.value.code != 0

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            parse_config(["teleport", "--bogus", "1"])
        assert exc.value.code != 0

    def test_descending_ratios_rejected(self):
        with pytest.raises(SystemExit):
            parse_config(["hardcore", "--ratios", "10,1"])

    def test_config_file_and_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "theta_prime = 0.25  # preparation angle\n"
            "phi = 1.5\n"
            "grid_points = 16\n"
        )
        config = parse_config(
            ["teleport", "--config", str(cfg), "--phi", "2.5"]
        )
        assert config.theta_prime == pytest.approx(0.25)
        assert config.phi == pytest.approx(2.5)  # flag wins

    def test_malformed_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just some words\n")
        with pytest.raises(SystemExit):
            parse_config(["teleport", "--config", str(cfg)])


class TestExecution:
    def test_teleport_artifact(self, tmp_path):
        out = tmp_path / "teleport.json"
        code = main(["teleport", "--theta-prime", "0.7", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["success_probability"] == pytest.approx(0.5, abs=1e-9)
        assert payload["ssr_compliant"] is True
        assert {o["classification"] for o in payload["outcomes"]} == {
            "psi_plus",
            "psi_minus",
            "failure",
        }
        for o in payload["outcomes"]:
            assert 0.0 <= o["probability"] <= 1.0
            assert 0.0 <= o["fidelity_min"] <= 1.0 + 1e-12

    def test_sweep_deterministic_bytes(self, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        argv = ["sweep", "--n", "3", "--seed", "7"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        payload = json.loads(out1.read_text())
        assert payload["generator"] == "pcg64"
        assert len(payload["runs"]) == 3

    def test_hardcore_csv(self, tmp_path):
        out = tmp_path / "scan.csv"
        code = main(["hardcore", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "ratio,infidelity"
        assert len(lines) == 5
        values = [float(line.split(",")[1]) for line in lines[1:]]
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-3

    def test_reservoir_csv_header(self, tmp_path):
        out = tmp_path / "scan.csv"
        code = main(["reservoir", "--nbars", "4", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "nbar,deviation"
        assert len(lines) == 2

    def test_densecoding_round_trip(self, tmp_path):
        out = tmp_path / "dense.json"
        code = main(["densecoding", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        for entry in payload["messages"]:
            assert entry["decoded"] == entry["message"]
            assert entry["deterministic"] is True

    def test_unwritable_output(self, tmp_path):
        code = main(["hardcore", "--ratios", "1", "--out", str(tmp_path / "no" / "x.csv")])
        assert code == 2

    def test_selftest_small_corpus(self, tmp_path, capsys):
        out = tmp_path / "selftest.json"
        code = main(["selftest", "--n", "3", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert printed.count("PASS") == 9
        payload = json.loads(out.read_text())
        assert payload["passed"] is True
        assert len(payload["criteria"]) == 9
