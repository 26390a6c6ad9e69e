import csv
import io
import json
import math

import pytest

from chanrad import cli
from chanrad.channel import SpectralRecord
from chanrad.config import ConfigError, load_config, read_config_file
from chanrad.oracle import OracleReport

SMALL = ["--energy-gev", "1", "--theta-points", "12", "--phi-points", "8", "--j-max", "2",
         "--omega-bins", "30"]


def _record(**kw):
    base = dict(j=1, theta=1.5e-4, phi=0.25, omega=1234567.891234567,
                intensity_coherent=3.14159265358979, intensity_incoherent=2.71828182845905,
                intensity_pol1=1.0, intensity_pol2=2.14159265358979, interference="both")
    base.update(kw)
    return SpectralRecord(**base)


def _table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_minimal_flags_fill_defaults():
    cfg = load_config({"energy_gev": 1.0, "v0_ev": 23.0, "dp_angstrom": 1.92})
    assert (cfg.j_max, cfg.theta_points, cfg.phi_points, cfg.omega_bins) == (5, 200, 64, 400)
    assert cfg.mode == "angular" and cfg.interference == "both"
    # theta_in resolves to half the critical angle sqrt(2 V0 / E)
    assert cfg.theta_in_urad == pytest.approx(0.5 * math.sqrt(46 / 1e9) * 1e6)
    echo = cfg.echo()
    assert echo["energy-gev"] == 1.0 and echo["theta-in-urad"] == cfg.theta_in_urad


def test_negative_depth_names_field():
    with pytest.raises(ConfigError, match="v0-ev"):
        load_config({"energy_gev": 1.0, "v0_ev": -5.0})


def test_missing_energy():
    with pytest.raises(ConfigError, match="energy-gev"):
        load_config({"v0_ev": 23.0})


def test_flag_overrides_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nenergy-gev = 2\nj-max: 3\nphi_points = 16\n")
    cfg = load_config({"j_max": 4}, str(path))
    assert cfg.energy_gev == 2.0 and cfg.j_max == 4 and cfg.phi_points == 16
    assert cfg.echo()["j-max"] == 4


def test_unknown_key_fails(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("energy-gev = 1\ntemperature = 300\n")
    with pytest.raises(ConfigError, match="temperature"):
        load_config({}, str(path))


@pytest.mark.parametrize("flags", [
    {"energy_gev": 1.0, "mode": "sideways"},
    {"energy_gev": 1.0, "j_max": 99},
    {"energy_gev": 1.0, "theta_points": 1},
    {"energy_gev": 1.0, "j_max": "2.5"},
    {"energy_gev": 1.0, "broaden_ev": 0.0},
])
def test_out_of_range_values_rejected(flags):
    with pytest.raises(ConfigError):
        load_config(flags)


def test_steep_incidence_warns():
    with pytest.warns(UserWarning, match="critical angle"):
        load_config({"energy_gev": 1.0, "theta_in_urad": 500.0})


def test_one_record_two_lines():
    buf = io.StringIO()
    cli.emit_table([_record()], "csv", buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[0].split(",") == cli.RECORD_COLUMNS


def test_both_columns_populated():
    buf = io.StringIO()
    cli.emit_table([_record()], "csv", buf, interference="both")
    row = _table(buf.getvalue())[0]
    assert row["dI_coherent"] and row["dI_incoherent"]


def test_unrequested_column_blank():
    buf = io.StringIO()
    cli.emit_table([_record()], "csv", buf, interference="on")
    assert _table(buf.getvalue())[0]["dI_incoherent"] == ""


def test_csv_round_trip_twelve_digits():
    rec = _record()
    buf = io.StringIO()
    cli.emit_table([rec], "csv", buf)
    row = _table(buf.getvalue())[0]
    for col, val in [("omega_eV", rec.omega), ("dI_coherent", rec.intensity_coherent),
                     ("theta_rad", rec.theta)]:
        assert float(row[col]) == pytest.approx(val, rel=5e-12)
        assert float(row[col]) == float(f"{val:.12g}")


def test_jsonl_mirrors_columns():
    buf = io.StringIO()
    cli.emit_table([_record(), _record(j=2)], "jsonl", buf, header={"energy-gev": 1.0})
    lines = buf.getvalue().splitlines()
    assert json.loads(lines[0]) == {"config": {"energy-gev": 1.0}}
    rows = [json.loads(ln) for ln in lines[1:]]
    assert list(rows[1]) == cli.RECORD_COLUMNS and rows[1]["j"] == 2


def test_empty_table_rejected():
    with pytest.raises(ValueError):
        cli.emit_table([], "csv", io.StringIO())


def test_verify_on_defaults(tmp_path):
    out = tmp_path / "verify.csv"
    assert cli.main(["verify", "--energy-gev", "1", "--out", str(out)]) == 0
    rows = _table(out.read_text())
    assert rows and all(r["passed"] == "true" for r in rows)


def test_spectrum_both_columns(tmp_path):
    out = tmp_path / "spec.csv"
    status = cli.main(["spectrum", *SMALL, "--interference", "both", "--out", str(out)])
    assert status == 0
    text = out.read_text()
    assert "# config: interference = both" in text
    rows = _table(text)
    assert list(rows[0]) == cli.SPECTRUM_COLUMNS
    assert all(r["dI_coherent"] != "" and r["dI_incoherent"] != "" for r in rows)
    assert {r["j"] for r in rows} == {"0", "1", "2"}


def test_unwritable_output(tmp_path):
    out = tmp_path / "missing" / "dir" / "a.csv"
    assert cli.main(["angular", *SMALL, "--out", str(out)]) == 5


def test_config_error_status(capsys):
    assert cli.main(["angular", "--energy-gev", "1", "--v0-ev", "-5"]) == 2
    assert "v0-ev" in capsys.readouterr().err


def test_verify_failure_status(monkeypatch, tmp_path):
    monkeypatch.setattr(cli, "run_suite", lambda beam, model: [OracleReport("x", 1.0, 1.0, 1e-9)])
    assert cli.main(["verify", "--energy-gev", "1", "--out", str(tmp_path / "v.csv")]) == 4


def test_numeric_failure_status(monkeypatch, tmp_path):
    def boom(*args, **kwargs):
        raise FloatingPointError("overflow")

    monkeypatch.setattr(cli, "evaluate_map", boom)
    assert cli.main(["angular", *SMALL, "--out", str(tmp_path / "a.csv")]) == 3


def test_table_reproduces_from_its_header(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert cli.main(["angular", *SMALL, "--interference", "off", "--out", str(first)]) == 0
    cfg = read_config_file(str(first))
    assert cfg["interference"] == "off"
    assert cli.main(["--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_jsonl_reproduces_from_its_header(tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    assert cli.main(["spectrum", *SMALL, "--format", "jsonl", "--out", str(first)]) == 0
    assert cli.main(["--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_command_and_mode_must_agree():
    assert cli.main(["angular", "--mode", "spectrum", "--energy-gev", "1"]) == 2
