import json

import numpy as np
import pytest

from dropspread import cli
from dropspread.cli import ParseError, ValidationError, main, parse_config, serialize_config

MINIMAL = """
command = selfsimilar
n = 1.0
alpha = 1.0
D = 1.0
output_dir = out/test
"""


def test_parse_minimal():
    cfg = parse_config(MINIMAL)
    assert cfg.command == "selfsimilar"
    assert cfg.n == 1.0 and cfg.D == 1.0 and cfg.d is None


def test_parse_reports_line_of_unknown_key():
    with pytest.raises(ParseError) as err:
        parse_config("command = transient\nD = 1.0\nbogus = 3\n")
    assert err.value.line == 3


def test_parse_reports_malformed_line():
    with pytest.raises(ParseError) as err:
        parse_config("command = transient\nnonsense\n")
    assert err.value.line == 2


def test_validation_n_out_of_range():
    with pytest.raises(ValidationError, match=r"n out of \[1,3\)"):
        parse_config("command = selfsimilar\nn = 3.5\nalpha = 1.0\nD = 1.0\n")


def test_validation_balanced_asymptotics_redirects():
    with pytest.raises(ValidationError, match="selfsimilar"):
        parse_config("command = asymptotics\nn = 1.0\nalpha = 1.0\nD = 1.0\n")


def test_validation_friction_exclusive():
    with pytest.raises(ValidationError):
        parse_config("command = selfsimilar\nn = 1.0\nalpha = 1.0\n")
    with pytest.raises(ValidationError):
        parse_config("command = selfsimilar\nn = 1.0\nalpha = 1.0\nd = 1.0\nD = 1.0\n")


def test_roundtrip():
    text = """
command = transient
n = 1.5
alpha = 2.25
d = 3.5
mass = 1.75
datum = corner
t_end = 12.5
output_times = 1.0,5.0,12.5
output_dir = out/x
step.tau = 1e-05
step.mesh_nodes = 65
solver.tol_B = 1e-11
"""
    cfg = parse_config(text)
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_main_selfsimilar_and_artifacts(tmp_path):
    cfg = tmp_path / "ss.cfg"
    out = tmp_path / "out"
    cfg.write_text(f"command = selfsimilar\nn = 1.0\nalpha = 1.0\nD = 1.0\n"
                   f"output_dir = {out}\n")
    assert main(["selfsimilar", "--config", str(cfg)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["B"] == pytest.approx(2.5623058987, rel=1e-9)
    assert (out / "profile.csv").exists()
    assert (out / "meta.json").exists()


def test_main_transient_with_override(tmp_path):
    cfg = tmp_path / "tr.cfg"
    out = tmp_path / "out"
    cfg.write_text(
        f"command = transient\nn = 1.0\nalpha = 1.0\nD = 1.0\n"
        f"datum = fig1_bump\nt_end = 0.2\noutput_dir = {out}\n"
        "step.tau = 1e-5\nstep.mesh_nodes = 65\nstep.tau_growth = 1.05\n"
        "step.tau_max_fraction = 0.01\n")
    rc = main(["transient", "--config", str(cfg), "--override", "t_end=0.05"])
    assert rc == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["config"]["t_end"] == 0.05           # override recorded
    rows = (out / "series.csv").read_text().strip().splitlines()
    assert rows[0] == "t,s_minus,s_plus,mass,energy"
    assert float(rows[-1].split(",")[0]) == pytest.approx(0.05, rel=1e-9)


def test_main_asymptotics(tmp_path):
    cfg = tmp_path / "a.cfg"
    out = tmp_path / "out"
    cfg.write_text(f"command = asymptotics\nn = 1.0\nalpha = 0.5\nD = 1.0\n"
                   f"output_dir = {out}\n")
    assert main(["asymptotics", "--config", str(cfg)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["regime"] == "strong"
    assert summary["gamma"] == pytest.approx(1.0 / 9.0)


def test_main_exit_code_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("command = selfsimilar\nn = 9.0\nalpha = 1.0\nD = 1.0\n")
    assert main(["selfsimilar", "--config", str(cfg)]) == 1
    assert "error: config:" in capsys.readouterr().err


def test_main_exit_code_numerical_error(tmp_path, capsys):
    # nodal datum file with a negative interior height
    datum = tmp_path / "datum.csv"
    ys = np.linspace(-1, 1, 21)
    hs = 1.0 - ys ** 2
    hs[10] = -0.5
    datum.write_text("y,h\n" + "\n".join(f"{a},{b}" for a, b in zip(ys, hs)))
    cfg = tmp_path / "tr.cfg"
    cfg.write_text(
        f"command = transient\nn = 1.0\nalpha = 1.0\nD = 1.0\n"
        f"datum = file:{datum}\nt_end = 0.1\noutput_dir = {tmp_path/'out'}\n"
        "step.mesh_nodes = 33\n")
    assert main(["transient", "--config", str(cfg)]) == 2
    assert "error: numerical:" in capsys.readouterr().err


def test_main_exit_code_io_error(tmp_path, capsys):
    assert main(["selfsimilar", "--config", str(tmp_path / "missing.cfg")]) == 3
    assert "error: io:" in capsys.readouterr().err


def test_main_sweep(tmp_path):
    cfg = tmp_path / "sw.cfg"
    out = tmp_path / "sweep"
    cfg.write_text(
        f"command = sweep\nn = 1.0\nalpha = 1.0\nD = 1.0\nt_end = 0.02\n"
        f"output_dir = {out}\nsweep.alpha = 0.5,2.0\n"
        "step.tau = 1e-5\nstep.mesh_nodes = 33\nstep.tau_growth = 1.05\n"
        "step.tau_max_fraction = 0.01\n")
    assert main(["sweep", "--config", str(cfg)]) == 0
    assert (out / "n1_alpha0.5" / "series.csv").exists()
    assert (out / "n1_alpha2" / "series.csv").exists()


def test_main_figure(tmp_path):
    assert main(["figure", "fig5", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fig5" / "data.csv").exists()
    assert (tmp_path / "fig5" / "plot.svg").exists()


def test_custom_datum_file_roundtrip(tmp_path):
    datum = tmp_path / "datum.csv"
    ys = np.linspace(-1, 1, 401)
    datum.write_text("y,h\n" + "\n".join(
        f"{a},{b}" for a, b in zip(ys, 1.5 * (1 - ys ** 2))))
    fn = cli._load_datum(f"file:{datum}")
    assert fn(0.0) == pytest.approx(1.5, abs=1e-12)
