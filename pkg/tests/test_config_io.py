import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microcav import config as cf
from microcav import io
from microcav.errors import ConfigError, SpectrumFormatError
from microcav.thermal import ThermalTable, TuningCurve

BASE = "wavelength_nm = 638.8\nintrinsic_linewidth_hz = 50e6\n"


def test_minimal_config():
    cfg = cf.parse_config(BASE + "kappa_ex_hz = 25e6  # comment\n\n# only a comment\n")
    assert cfg.kappa_ex_hz == 25e6
    assert cfg.resonance_hz == pytest.approx(4.6930e14, rel=1e-4)
    assert cfg.mode().kappa0 == pytest.approx(2 * math.pi * 50e6)


def test_range_and_list_syntax():
    cfg = cf.parse_config(BASE + "distances_nm = 0:100:25\ntemperatures_k = 7, 8.5, 10\n")
    assert cfg.distances_nm == (0.0, 25.0, 50.0, 75.0, 100.0)
    assert cfg.temperatures_k == (7.0, 8.5, 10.0)


@pytest.mark.parametrize(
    "text, line, key",
    [
        (BASE + "points = many\n", 3, "points"),
        (BASE + "bogus = 1\n", 3, "bogus"),
        (BASE + "beta = 1.5\n", 3, "beta"),
        (BASE + "points = 10.5\n", 3, "points"),
        (BASE + "distances_nm = 5:1:1\n", 3, "distances_nm"),
        (BASE + "eta_noise = -0.1\n", 3, "eta_noise"),
        (BASE + "seed = 1\nseed = 2\n", 4, "seed"),
        (BASE + "just words\n", 3, None),
        ("# header\nwavelength_nm = -5\nintrinsic_linewidth_hz = 1e6\n", 2, "wavelength_nm"),
        (BASE + "temperatures_k = 5, 4\n", 3, "temperatures_k"),
    ],
)
def test_errors_name_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as exc:
        cf.parse_config(text)
    assert exc.value.line == line
    assert exc.value.key == key
    assert f"line {line}" in str(exc.value)


def test_missing_required_group():
    with pytest.raises(ConfigError, match="wavelength_nm"):
        cf.parse_config("intrinsic_linewidth_hz = 1e6\n")
    with pytest.raises(ConfigError, match="exactly one"):
        cf.parse_config(BASE + "q0 = 1e7\n")


@settings(max_examples=200)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz_=#:,.0123456789 -\n", max_size=200))
def test_parser_is_total(text):
    # any input either parses or raises ConfigError, nothing else escapes
    try:
        cf.parse_config(text)
    except ConfigError:
        pass


def test_all_presets_load():
    names = cf.preset_names()
    assert {"regimes", "undercoupled-noisy", "gapscan", "thermal", "stability"} <= set(names)
    for n in names:
        cf.load_preset(n)
    with pytest.raises(ConfigError, match="unknown preset"):
        cf.load_preset("nope")


def test_regimes_preset_reproduces_both_linewidths():
    from microcav import gapscan

    cfg = cf.load_preset("regimes")
    res = gapscan.scan(cfg.distances_nm, cfg.mode(), cfg.geometry())
    assert sorted(res.linewidth_hz) == [pytest.approx(77e6, rel=1e-9), pytest.approx(220e6, rel=1e-9)]
    ratios = res.kappa_ex / res.kappa0_eff
    assert min(ratios) == pytest.approx(0.439, abs=5e-4)


def test_override_wins():
    cfg = cf.parse_config(BASE + "seed = 3\n", {"seed": 9, "points": None})
    assert cfg.seed == 9 and cfg.points == 2001


floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(st.tuples(floats, floats), min_size=1, max_size=30))
def test_columns_round_trip_bit_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    a = np.array([r[0] for r in rows])
    b = np.array([r[1] for r in rows])
    io.write_columns(path, {"a": a, "b": b})
    back = io.read_columns(path, ("a", "b"))
    assert np.array_equal(back["a"], a) and np.array_equal(back["b"], b)
    assert np.array_equal(np.signbit(back["a"]), np.signbit(a))


def test_spectrum_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    spec = io.SpectrumData(4.7e14 + np.arange(10.0) * 1e6, rng.random(10),
                           rng.standard_normal(10), rng.standard_normal((10, 4)))
    io.write_spectrum(tmp_path / "s.csv", spec)
    back = io.read_spectrum(tmp_path / "s.csv")
    for name in ("frequency_hz", "eta", "phase_rad", "stokes"):
        assert np.array_equal(getattr(back, name), getattr(spec, name))
    assert [p.name for p in tmp_path.iterdir()] == ["s.csv"]  # no temp files left behind


def test_thermal_files_round_trip(tmp_path):
    table = ThermalTable([1.0, 2.0, 3.5], [1e-8, 2e-8, -1e-8], [3e-7, 1e-7, 0.0])
    io.write_thermal_table(tmp_path / "t.csv", table)
    back = io.read_thermal_table(tmp_path / "t.csv")
    assert np.array_equal(back.dn_rel, table.dn_rel)
    curve = TuningCurve([1.0, 2.0, 3.0], [4.7e14, 4.7e14 + 5, 4.7e14 + 1], 14e6)
    io.write_tuning_curve(tmp_path / "c.csv", curve)
    back = io.read_tuning_curve(tmp_path / "c.csv")
    assert np.array_equal(back.nu0, curve.nu0) and back.jitter_sigma == 14e6


@pytest.mark.parametrize(
    "body, row",
    [
        ("frequency_hz,eta\n1,0.5\n2\n", 3),
        ("frequency_hz,eta\n1,0.5\n2,abc\n", 3),
        ("frequency_hz,eta\n1,0.5\n2,nan\n", 3),
        ("frequency_hz,eta\n1,0.5\n1,0.4\n", 3),
        ("frequency_hz\n1\n", 1),
        ("", 1),
        ("frequency_hz,eta\n", 2),
    ],
)
def test_malformed_spectrum_names_row(tmp_path, body, row):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(SpectrumFormatError) as exc:
        io.read_spectrum(path)
    assert exc.value.row == row
    assert f"row {row}" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(SpectrumFormatError):
        io.read_spectrum(tmp_path / "absent.csv")


def test_atomic_write_failure_keeps_old_file(tmp_path, monkeypatch):
    path = tmp_path / "x.txt"
    path.write_text("old")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        io.atomic_write_text(path, "new")
    assert path.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
