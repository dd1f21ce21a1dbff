import json
import math
import subprocess
import sys

import pytest

from onewaysim.cli import main, parse_angle, ConfigError


def run_cli(args, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def test_parse_angle_forms():
    assert parse_angle("0.5") == 0.5
    assert parse_angle("pi") == pytest.approx(math.pi)
    assert parse_angle("pi/4") == pytest.approx(math.pi / 4)
    assert parse_angle("3pi/4") == pytest.approx(3 * math.pi / 4)
    assert parse_angle("-pi/2") == pytest.approx(-math.pi / 2)
    assert parse_angle("2pi") == pytest.approx(2 * math.pi)
    with pytest.raises(ConfigError):
        parse_angle("two pies")


def test_witness_ideal_json(tmp_path):
    code, out = run_cli(["witness", "--ideal"], tmp_path)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["expectation"] == pytest.approx(-1.0, abs=1e-10)
    assert payload["bound"] == pytest.approx(1.0, abs=1e-10)
    assert payload["genuinely_entangled"] is True


def test_witness_runs_with_verify(tmp_path):
    code, out = run_cli(["witness", "--ideal", "--verify"], tmp_path)
    assert code == 0
    assert json.loads(out.read_text())["genuinely_entangled"] is True


def test_budget_json(tmp_path):
    code, out = run_cli(["budget"], tmp_path)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["cycle_us"] == pytest.approx(1.69, abs=1e-12)
    assert payload["max_steps"] == 7
    assert "note" in payload


def test_sweep_noiseless_csv(tmp_path):
    code, out = run_cli(["sweep", "--mode", "rz", "--noiseless"], tmp_path)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "angle_rad,fidelity,mode,noise_tag"
    assert len(lines) == 18  # header + 17 points
    for line in lines[1:]:
        fields = line.split(",")
        assert float(fields[1]) == pytest.approx(1.0, abs=1e-9)
        assert fields[2] == "rz"
        assert fields[3] == "noiseless"


def test_rotate_json_branches(tmp_path):
    code, out = run_cli(["rotate", "--alpha", "pi/4", "--beta", "pi/4"], tmp_path)
    assert code == 0
    payload = json.loads(out.read_text())
    assert set(payload["branches"]) == {"00", "01", "10", "11"}
    assert payload["fidelity"] == pytest.approx(1.0, abs=1e-9)


def test_lifetime_calibrated_crosses_half_near_reference_time(tmp_path):
    code, out = run_cli(
        ["lifetime", "--calibrated", "--t-max", "25", "--t-step", "0.5"], tmp_path
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t_us,fidelity_bound"
    assert len(lines) == 2 + 50  # header + 51 grid points
    rows = [tuple(map(float, line.split(","))) for line in lines[1:]]
    crossing = [t for (t, b), (t2, b2) in zip(rows, rows[1:]) if b >= 0.5 > b2]
    assert len(crossing) == 1
    assert abs(crossing[0] - 14.27) < 0.5


def test_lifetime_requires_noise(tmp_path):
    out = tmp_path / "x.csv"
    code = main(["lifetime", "--out", str(out)])
    assert code == 2


def test_unknown_scenario_exit_2(tmp_path):
    code = main(["teleport"])
    assert code == 2


def test_infeasible_calibration_exit_3(tmp_path):
    code = main(
        ["lifetime", "--calibrated", "--target-f1", "0.5", "--target-f2", "0.9",
         "--out", str(tmp_path / "x.csv")]
    )
    assert code == 3


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("scenario=witness\nimbalance=0.5\n")
    out_a = tmp_path / "a.json"
    assert main(["--config", str(cfg), "--out", str(out_a)]) == 0
    payload_a = json.loads(out_a.read_text())
    assert payload_a["expectation"] > -1.0 + 1e-6  # imperfect preparation

    out_b = tmp_path / "b.json"
    assert main(["--config", str(cfg), "--imbalance", "1.0", "--out", str(out_b)]) == 0
    payload_b = json.loads(out_b.read_text())
    assert payload_b["expectation"] == pytest.approx(-1.0, abs=1e-10)


def test_config_unknown_key_exit_2(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("scenario=witness\nwavelength=795\n")
    assert main(["--config", str(cfg)]) == 2


def test_noise_file_keys(tmp_path):
    nf = tmp_path / "noise.cfg"
    nf.write_text("tau=5.0\nstorage_time=2.0\nimbalance=0.8\n")
    out = tmp_path / "w.json"
    assert main(["witness", "--noise-file", str(nf), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["expectation"] > -1.0 + 1e-4

    bad = tmp_path / "bad.cfg"
    bad.write_text("detuning=10\n")
    assert main(["witness", "--noise-file", str(bad)]) == 2


def test_tomography_scenario_payload(tmp_path):
    code, out = run_cli(["tomography", "--shots", "200", "--seed", "4"], tmp_path)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["dimension"] == 16
    assert len(payload["rho_entries"]) == 256
    assert payload["fidelity_vs_C4"] > 0.9
    assert payload["n_settings"] == 81


def test_witness_csv_format(tmp_path):
    code, out = run_cli(["witness", "--format", "csv"], tmp_path, "w.csv")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "key,value"
    assert any(line.startswith("expectation,") for line in lines)


def test_sweep_per_branch_rows(tmp_path):
    code, out = run_cli(["sweep", "--mode", "rx", "--per-branch"], tmp_path, "s.csv")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "angle_rad,fidelity,mode,noise_tag,branch_s2,branch_s3"
    assert len(lines) == 1 + 17 * 5


def test_byte_identical_reruns(tmp_path):
    scenarios = [
        ["witness", "--ideal"],
        ["budget"],
        ["sweep", "--mode", "rz"],
        ["rotate", "--alpha", "pi/4", "--beta", "pi/4", "--shots", "200", "--seed", "5"],
        ["tomography", "--shots", "100", "--seed", "3"],
    ]
    for i, args in enumerate(scenarios):
        _, first = run_cli(args, tmp_path, f"first_{i}.txt")
        _, second = run_cli(args, tmp_path, f"second_{i}.txt")
        assert first.read_bytes() == second.read_bytes()


def test_tomography_tables_round_trip(tmp_path):
    tables = tmp_path / "tables.jsonl"
    out_a = tmp_path / "a.json"
    code = main(["tomography", "--shots", "150", "--seed", "6",
                 "--tables-out", str(tables), "--out", str(out_a)])
    assert code == 0
    assert len(tables.read_text().splitlines()) == 81

    out_b = tmp_path / "b.json"
    code = main(["tomography", "--tables-in", str(tables), "--out", str(out_b)])
    assert code == 0
    payload_a = json.loads(out_a.read_text())
    payload_b = json.loads(out_b.read_text())
    payload_a.pop("seed")
    assert payload_a == payload_b


def test_invariant_violation_exit_4(tmp_path, monkeypatch):
    import onewaysim.cli as cli_mod

    def broken(scenario):
        raise AssertionError("forced invariant failure")

    monkeypatch.setattr(cli_mod, "verify_invariants", broken)
    code = main(["witness", "--verify", "--out", str(tmp_path / "w.json")])
    assert code == 4


def test_console_entry_point(tmp_path):
    out = tmp_path / "8.json"
    proc = subprocess.run(
        [sys.executable, "-m", "onewaysim.cli", "budget", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(out.read_text())["max_steps"] == 7


def test_stdout_when_no_out(capsys):
    assert main(["witness", "--ideal"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["bound"] == pytest.approx(1.0, abs=1e-10)
