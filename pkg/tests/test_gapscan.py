import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microcav import cavity as cv
from microcav import gapscan as gs
from microcav.errors import DomainError, IllConditionedError, NoCriticalGapError

from conftest import NU0

KAPPA0 = 2 * math.pi * 50e6
MODE = cv.ResonatorMode(NU0, KAPPA0)
GAMMA = 156.3


def test_default_decay_length():
    assert gs.default_decay_length() == pytest.approx(96.8, abs=0.05)


def test_contact_and_far_field():
    geom = gs.CouplingGeometry(10 * KAPPA0, GAMMA)
    res = gs.scan([0.0, 1e5], MODE, geom)
    assert res.eta_min[0] == pytest.approx((9 / 11) ** 2, rel=1e-12)
    assert res.regime[0] is cv.Regime.OVERCOUPLED
    assert res.eta_min[1] == pytest.approx(1.0, abs=1e-12)
    assert res.regime[1] is cv.Regime.UNDERCOUPLED


def test_critical_gap_closed_form():
    geom = gs.CouplingGeometry(10 * KAPPA0, GAMMA)
    d_star = gs.critical_gap(MODE, geom)
    assert d_star == pytest.approx(GAMMA * math.log(10), abs=1e-9)
    assert d_star == pytest.approx(359.9, abs=0.05)
    res = gs.scan([d_star], MODE, geom)
    assert res.eta_min[0] == pytest.approx(0.0, abs=1e-20)


def test_with_critical_gap_places_crossing():
    geom = gs.CouplingGeometry.with_critical_gap(KAPPA0, 360.0, GAMMA)
    assert gs.critical_gap(MODE, geom) == pytest.approx(360.0, abs=1e-9)


def test_parasitic_bisection_matches_dense_grid():
    geom = gs.CouplingGeometry(30 * KAPPA0, 120.0, kappa_par_contact=5 * KAPPA0, par_decay_len=60.0)
    d_star = gs.critical_gap(MODE, geom)
    dense = np.arange(0.0, 2000.0, 0.001)
    excess = gs.kappa_ex_at(dense, geom) - KAPPA0 - gs.parasitic_at(dense, geom)
    crossing = dense[np.flatnonzero(np.diff(np.sign(excess)))[0]]
    assert abs(d_star - crossing) < 0.05
    # parasitic loss pulls the crossing inwards
    assert d_star < 120.0 * math.log(30)


def test_no_critical_gap():
    with pytest.raises(NoCriticalGapError):
        gs.critical_gap(MODE, gs.CouplingGeometry(0.5 * KAPPA0, GAMMA))


def test_regime_sequence_along_scan():
    geom = gs.CouplingGeometry.with_critical_gap(KAPPA0, 360.0, GAMMA)
    d = np.arange(0.0, 1201.0, 10.0)
    res = gs.scan(d, MODE, geom)
    names = [r.name for r in res.regime]
    first_under = names.index("UNDERCOUPLED")
    assert set(names[:first_under]) <= {"OVERCOUPLED", "CRITICAL"}
    assert set(names[first_under:]) == {"UNDERCOUPLED"}
    assert "CRITICAL" in names
    assert d[np.argmin(res.eta_min)] == 360.0


@settings(deadline=None)
@given(st.floats(1.5, 1e3), st.floats(20.0, 400.0))
def test_eta_min_has_single_minimum(contact, gamma):
    geom = gs.CouplingGeometry(contact * KAPPA0, gamma)
    d_star = gs.critical_gap(MODE, geom)
    d = np.linspace(0, 3 * d_star + 5 * gamma, 400)
    eta = gs.scan(d, MODE, geom).eta_min
    de = np.diff(eta)
    i = int(np.argmin(eta))
    assert np.all(de[:i] <= 1e-15)
    assert np.all(de[i:] >= -1e-15)


@given(st.floats(1.5, 1e3), st.floats(20.0, 400.0))
def test_linewidth_and_coupling_monotone(contact, gamma):
    geom = gs.CouplingGeometry(contact * KAPPA0, gamma)
    d = np.linspace(0, 2000, 200)
    res = gs.scan(d, MODE, geom)
    assert np.all(np.diff(res.kappa_ex) <= 0)
    assert np.all(np.diff(res.linewidth_hz) <= 0)
    assert res.kappa_ex[1] < res.kappa_ex[0]
    assert np.all(res.linewidth_hz >= KAPPA0 / (2 * math.pi) * (1 - 1e-12))


def _calibration():
    geom = gs.CouplingGeometry.with_critical_gap(KAPPA0, 360.0, GAMMA)
    d = np.arange(0.0, 2000.0 + 1e-9, 5.0)
    return geom, d, gs.scan(d, MODE, geom).eta_min


def test_stability_recovers_jitter():
    geom, d, eta = _calibration()
    series = gs.simulate_eta_series(500.0, 13.0, 10_000, MODE, geom, np.random.default_rng(7))
    est = gs.stability_estimate(series, d, eta, 500.0)
    assert est.sigma_nm == pytest.approx(13.0, rel=0.2)
    assert est.three_sigma_nm == pytest.approx(3 * est.sigma_nm)
    assert est.n_samples == 10_000


def test_stability_linear_in_series_scale():
    geom, d, eta = _calibration()
    series = gs.simulate_eta_series(500.0, 5.0, 2000, MODE, geom, np.random.default_rng(8))
    base = gs.stability_estimate(series, d, eta, 500.0).sigma_nm
    doubled = series.mean() + 2 * (series - series.mean())
    assert gs.stability_estimate(doubled, d, eta, 500.0).sigma_nm == pytest.approx(2 * base)
    assert gs.stability_estimate(np.full(50, 0.3), d, eta, 500.0).sigma_nm == 0.0


def test_stability_against_finite_difference_oracle():
    geom, d, eta = _calibration()
    series = np.array([0.5, 0.51, 0.49, 0.505])
    h = 1e-3
    slope = (gs.scan([500 + h], MODE, geom).eta_min[0] - gs.scan([500 - h], MODE, geom).eta_min[0]) / (2 * h)
    est = gs.stability_estimate(series, d, eta, 500.0)
    assert est.slope_per_nm == pytest.approx(slope, rel=1e-3)
    assert est.sigma_nm == pytest.approx(np.std(series, ddof=1) / abs(slope), rel=1e-3)


def test_stability_ill_conditioned_at_critical_gap():
    geom, d, eta = _calibration()
    with pytest.raises(IllConditionedError):
        gs.stability_estimate([0.0, 0.001, 0.002], d, eta, 360.0)


def test_validation():
    with pytest.raises(DomainError):
        gs.kappa_ex_at(-1.0, gs.CouplingGeometry(KAPPA0, GAMMA))
    with pytest.raises(DomainError):
        gs.CouplingGeometry(-1.0, GAMMA)
    with pytest.raises(DomainError):
        gs.CouplingGeometry(KAPPA0, GAMMA, kappa_par_contact=1.0)
    _, d, eta = _calibration()
    with pytest.raises(DomainError):
        gs.stability_estimate([0.1, 0.2], d, eta, 5000.0)
