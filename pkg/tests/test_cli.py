"""Config parsing, round-tripping, command dispatch, output determinism."""

import math
import os

import pytest

from ramanlmt.cli import ConfigError, dispatch, main, parse_config, write_config
from ramanlmt.model import PulseCalibration, QMode

TWO_PI = 2.0 * math.pi


class TestParseConfig:
    def test_empty_file_gives_published_defaults(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("")
        cfg, extras = parse_config(path)
        assert cfg.laser.delta_single == pytest.approx(TWO_PI * 9e9)
        assert cfg.laser.delta_two == 0.0
        assert cfg.sequence.big_t == pytest.approx(0.1)
        assert cfg.sequence.tau_d == pytest.approx(150e-6)
        assert cfg.mot_temperature == pytest.approx(2e-6)
        assert cfg.a_true == pytest.approx(1.85e-5)
        assert cfg.n_samples == 200
        assert cfg.epsilon_m == 0.02
        assert cfg.pulse_calibration == PulseCalibration.CALIBRATED
        assert extras["accel"] is None

    def test_table_mode_uses_published_pulse_length(self, tmp_path):
        path = tmp_path / "t.cfg"
        path.write_text("pulse_mode = table\n")
        cfg, _ = parse_config(path)
        assert cfg.sequence.t_pi == pytest.approx(2.00e-6)
        assert cfg.sequence.t_half_pi == pytest.approx(1.00e-6)

    def test_even_pulse_count_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_r = 4\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_unknown_key_rejected_with_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("# comment\nbogus_key = 3\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert "bogus_key" in str(err.value)
        assert ":2:" in str(err.value)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_r 3\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_butts_like_configuration(self, tmp_path):
        path = tmp_path / "butts.cfg"
        path.write_text("delta_single_ghz = 3.5\ndelta_two_khz = 52\nn_r = 3\n")
        cfg, _ = parse_config(path)
        assert cfg.laser.delta_single == pytest.approx(TWO_PI * 3.5e9)
        assert cfg.laser.delta_two == pytest.approx(TWO_PI * 52e3)

    def test_round_trip(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("n_r = 5\ndelta_single_ghz = 7\nepsilon_m = 0.1\n"
                        "q_mode = constant\nunfold_phase = true\n")
        cfg, extras = parse_config(path)
        out = tmp_path / "b.cfg"
        write_config(cfg, out, extras)
        cfg2, _ = parse_config(out)
        assert cfg2 == cfg


class TestDispatch:
    def test_simulate_writes_deterministic_bytes(self, tmp_path):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("n_r = 1\nn_samples = 10\n")
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        assert dispatch("simulate", cfgp, out1, seed=99) == 0
        assert dispatch("simulate", cfgp, out2, seed=99) == 0
        assert out1.read_bytes() == out2.read_bytes()
        header = out1.read_text().splitlines()[0]
        assert header.startswith("n_r,fom,dc_offset,")

    def test_simulate_worker_count_invariance(self, tmp_path, monkeypatch):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("n_samples = 10\nsweep_values = 1,3\n")
        outs = []
        for workers in ("1", "4"):
            monkeypatch.setenv("RAMANLMT_THREADS", workers)
            out = tmp_path / f"w{workers}.csv"
            assert dispatch("sweep-pulses", cfgp, out, seed=7) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_sweep_pulses_table_shape(self, tmp_path):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("n_samples = 6\nsweep_values = 1,3\nreplicate_seeds = 5\n")
        out = tmp_path / "rows.csv"
        assert dispatch("sweep-pulses", cfgp, out) == 0
        lines = out.read_text().splitlines()
        assert lines[0].split(",")[:3] == ["n_r", "fom", "fom_spread"]
        assert len([l for l in lines if not l.startswith("#")]) == 3
        assert any(l.startswith("# fingerprint=") for l in lines)

    def test_sweep_measurement_shares_dynamics(self, tmp_path):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("n_samples = 6\nsweep_values = 0.02,0.5\nreplicate_seeds = 5\n")
        out = tmp_path / "rows.csv"
        assert dispatch("sweep-measurement", cfgp, out) == 0
        rows = [l.split(",") for l in out.read_text().splitlines()[1:3]]
        assert rows[0][5] == rows[1][5]  # mean_q_per_pulse identical

    def test_oracle_check_passes(self, tmp_path):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("")
        out = tmp_path / "oracle.csv"
        assert dispatch("oracle-check", cfgp, out, seed=123) == 0
        worst = [l for l in out.read_text().splitlines() if l.startswith("# worst=")]
        assert worst and float(worst[0].split("=")[1]) < 1e-3

    def test_bad_config_exits_2(self, tmp_path, capsys):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("nonsense = 1\n")
        assert dispatch("simulate", cfgp, tmp_path / "x.csv") == 2
        assert "error:" in capsys.readouterr().err

    def test_cli_q_mode_override(self, tmp_path):
        cfgp = tmp_path / "c.cfg"
        cfgp.write_text("n_samples = 10\n")
        out = tmp_path / "r.csv"
        assert main(["simulate", "--config", str(cfgp), "--out", str(out),
                     "--q-mode", "zero", "--samples", "8", "--seed", "3"]) == 0
        # lossless mode: q per pulse column is exactly zero
        row = out.read_text().splitlines()[1].split(",")
        assert float(row[8]) == 0.0
