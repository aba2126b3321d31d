import subprocess
import sys

import numpy as np
import pytest

from microcav import io
from microcav.cli import EXIT_AMBIGUOUS, EXIT_ERROR, EXIT_OK, main

CFG = """
wavelength_nm = 638.8
intrinsic_linewidth_hz = 50e6
critical_gap_nm = 360
decay_len_nm = 156.3
distances_nm = 250, 360, 500
points = 801
eta_noise = 0.002
stokes_noise = 0.002
seed = 7
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "scan.cfg"
    p.write_text(CFG)
    return p


def _kv(text):
    return dict(line.split(" = ", 1) for line in text.splitlines() if " = " in line)


def test_simulate_then_fit(tmp_path, cfg_file, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(out)]) == EXIT_OK
    files = sorted(p.name for p in out.iterdir())
    assert files == ["spectrum_D250nm.csv", "spectrum_D360nm.csv", "spectrum_D500nm.csv"]
    capsys.readouterr()

    # overcoupled spectrum: transmittance alone is ambiguous, the phase settles it
    over = str(out / "spectrum_D250nm.csv")
    assert main(["fit", over]) == EXIT_AMBIGUOUS
    plain = _kv(capsys.readouterr().out)
    assert plain["regime"] == "Undercoupled" and plain["twin_regime"] == "Overcoupled"
    assert main(["fit", over, "--joint-phase"]) == EXIT_OK
    joint = _kv(capsys.readouterr().out)
    assert joint["regime"] == "Overcoupled"
    expected = np.exp(110 / 156.3)
    assert float(joint["ratio"]) == pytest.approx(expected, rel=0.02)
    assert float(joint["loaded_linewidth_hz"]) == pytest.approx(50e6 * (1 + expected), rel=0.01)

    rows = tmp_path / "rows.csv"
    assert main(["fit", *map(str, sorted(out.iterdir())), "--joint-phase", "--out", str(rows)]) == 0
    table = io.read_columns(rows, ("ratio",))
    assert table["ratio"].size == 3


def test_simulation_is_byte_identical(tmp_path, cfg_file):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", str(cfg_file), "--out", str(a)])
    main(["simulate", "--config", str(cfg_file), "--out", str(b)])
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes()
    c = tmp_path / "c"
    main(["simulate", "--config", str(cfg_file), "--out", str(c), "--seed", "8"])
    assert (a / "spectrum_D250nm.csv").read_bytes() != (c / "spectrum_D250nm.csv").read_bytes()


def test_wide_sweep_reaches_the_wings(tmp_path):
    cfg = tmp_path / "w.cfg"
    cfg.write_text("wavelength_nm = 638.8\nintrinsic_linewidth_hz = 50e6\nkappa_ex_hz = 20e6\n"
                   "span_linewidths = 100\npoints = 2001\n")
    out = tmp_path / "w"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    spec = io.read_spectrum(out / "spectrum.csv")
    assert spec.eta[0] >= 0.99 and spec.eta[-1] >= 0.99


def test_truncated_file_reports_row(tmp_path, cfg_file, capsys):
    out = tmp_path / "sim"
    main(["simulate", "--config", str(cfg_file), "--out", str(out)])
    src = (out / "spectrum_D500nm.csv").read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(src[:40] + [src[40][:15]] + src[41:]) + "\n")
    capsys.readouterr()
    assert main(["fit", str(bad)]) == EXIT_ERROR
    assert "row 41" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("wavelength_nm = 638.8\nintrinsic_linewidth_hz = x\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "line 2" in err and "intrinsic_linewidth_hz" in err


def test_gapscan_command(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert main(["gapscan", "--preset", "gapscan", "--out", str(out)]) == EXIT_OK
    report = _kv(capsys.readouterr().out)
    assert float(report["critical_gap_nm"]) == pytest.approx(360.0, abs=1e-9)
    cols = io.read_columns(out, ("distance_nm", "eta_min", "linewidth_hz"))
    assert cols["distance_nm"][np.argmin(cols["eta_min"])] == 360.0


def test_thermal_command(tmp_path, capsys):
    out = tmp_path / "th"
    assert main(["thermal", "--preset", "thermal", "--out", str(out)]) == EXIT_OK
    report = _kv(capsys.readouterr().out)
    assert abs(float(report["turning_points_k"]) - 20.0) <= 1.0
    assert float(report["excursion_hz"]) == pytest.approx(0.8e9, rel=0.05)
    assert {p.name for p in out.iterdir()} == {"tuning_curve.csv", "dn_rel.csv",
                                               "thermal_table_synthetic.csv"}


def test_stability_command_from_files(tmp_path, capsys):
    assert main(["gapscan", "--preset", "stability", "--out", str(tmp_path / "curve.csv")]) == 0
    rng = np.random.default_rng(1)
    io.write_columns(tmp_path / "series.csv", {"eta_min": 0.5 + 0.01 * rng.standard_normal(100)})
    capsys.readouterr()
    args = ["stability", "--series", str(tmp_path / "series.csv"),
            "--curve", str(tmp_path / "curve.csv"), "--d-op", "500", "--out", str(tmp_path / "r")]
    assert main(args) == EXIT_OK
    assert (tmp_path / "r").read_text() == capsys.readouterr().out
    assert main(["stability", "--series", str(tmp_path / "series.csv")]) == EXIT_ERROR


def test_stability_preset(capsys):
    assert main(["stability", "--preset", "stability"]) == EXIT_OK
    assert float(_kv(capsys.readouterr().out)["sigma_nm"]) == pytest.approx(13.0, rel=0.2)


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    assert "regimes" in capsys.readouterr().out.split()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "microcav", "presets"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "thermal" in proc.stdout
