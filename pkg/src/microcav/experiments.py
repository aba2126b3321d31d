"""
Synthetic experiments driven by a :class:`ScanConfig`.

Every runner is deterministic for a fixed config (including its seed):
random draws come from per-item substreams of ``SeedSequence(seed)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cavity, gapscan, polarimetry, thermal
from .config import ScanConfig
from .errors import ConfigError, DomainError, NoCriticalGapError
from .io import SpectrumData, read_thermal_table, read_tuning_curve


@dataclass(frozen=True)
class SimulatedSpectrum:
    name: str
    distance_nm: float | None
    coupling: cavity.CouplingState
    kappa0: float  # effective intrinsic loss at this gap [rad/s]
    data: SpectrumData

    @property
    def regime(self) -> cavity.Regime:
        return cavity.classify_ratio(self.coupling.kappa_ex / self.kappa0)

    @property
    def winding(self) -> int:
        return cavity.winding_number(self.data.phase_rad)


def _substreams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _couplings(cfg: ScanConfig):
    """(name, distance, κ0_eff, CouplingState) for each spectrum to simulate."""
    mode = cfg.mode()
    if cfg.distances_nm:
        if not cfg.has_geometry:
            raise ConfigError("distances_nm needs kappa_ex_contact_hz or critical_gap_nm")
        geom = cfg.geometry()
        res = gapscan.scan(cfg.distances_nm, mode, geom, cfg.tol_r)
        return [
            (f"spectrum_D{d:g}nm", float(d), float(k0), cavity.CouplingState(float(kex), cfg.beta))
            for d, k0, kex in zip(res.distances, res.kappa0_eff, res.kappa_ex)
        ]
    if cfg.kappa_ex_hz is None:
        raise ConfigError("set distances_nm (with a geometry) or kappa_ex_hz")
    return [("spectrum", None, mode.kappa0,
             cavity.CouplingState(2 * math.pi * cfg.kappa_ex_hz, cfg.beta))]


def simulate_spectra(cfg: ScanConfig) -> list[SimulatedSpectrum]:
    """
    Laser-sweep spectra with transmittance, polarimetric phase and Stokes columns.

    Per point the laser frequency may jitter (``sweep_jitter_hz``); the file
    records the nominal frequency. η gets additive Gaussian noise
    ``eta_noise``; each analyzer detector gets ``stokes_noise``·S0.
    """
    base = cfg.mode()
    items = _couplings(cfg)
    out = []
    for (name, dist, k0, cpl), rng in zip(items, _substreams(cfg.seed, len(items))):
        mode = cavity.ResonatorMode(base.nu0, k0)
        linewidth = (k0 + cpl.kappa_ex) / (2 * math.pi)
        span = cfg.span_hz if cfg.span_hz is not None else cfg.span_linewidths * linewidth
        offsets = np.linspace(-0.5 * span, 0.5 * span, cfg.points)
        actual = offsets + cfg.sweep_jitter_hz * rng.standard_normal(cfg.points)
        t = cavity.transmission_amplitude(2 * math.pi * actual, mode, cpl)
        eta = np.abs(t) ** 2 + cfg.eta_noise * rng.standard_normal(cfg.points)
        ex, ey = polarimetry.probe_output(t)
        stokes = polarimetry.measure_stokes_array(ex, ey, cfg.stokes_noise, rng)
        phase, _ = polarimetry.phase_sweep(stokes, cfg.stokes_noise)
        data = SpectrumData(base.nu0 + offsets, eta, phase, stokes)
        out.append(SimulatedSpectrum(name, dist, cpl, k0, data))
    return out


def run_gapscan(cfg: ScanConfig) -> tuple[gapscan.GapScanResult, float | None]:
    if not cfg.distances_nm:
        raise ConfigError("gapscan needs distances_nm", key="distances_nm")
    mode, geom = cfg.mode(), cfg.geometry()
    res = gapscan.scan(cfg.distances_nm, mode, geom, cfg.tol_r)
    try:
        d_star = gapscan.critical_gap(mode, geom)
    except NoCriticalGapError:  # no crossing is a legitimate scan outcome
        d_star = None
    return res, d_star


@dataclass(frozen=True)
class ThermalRun:
    table: thermal.ThermalTable
    curve: thermal.TuningCurve
    recovered: thermal.ThermalTable
    turning: thermal.TurningPoints


def _temperatures(cfg: ScanConfig) -> np.ndarray:
    if not cfg.temperatures_k:
        raise ConfigError("thermal needs temperatures_k", key="temperatures_k")
    return np.asarray(cfg.temperatures_k, dtype=float)


def run_thermal(cfg: ScanConfig) -> ThermalRun:
    """
    Forward-simulate ν0(T) (or read a measured curve), add laser jitter,
    invert for dn_rel and locate the turning point.
    """
    temps = _temperatures(cfg)
    nu_ref = cfg.resonance_hz
    t_ref = cfg.t_ref_k if cfg.t_ref_k is not None else float(temps[0])
    if cfg.thermal_table is not None:
        table = read_thermal_table(cfg.thermal_table)
    else:
        table = thermal.synthetic_table(
            nu_ref, t_ref, (float(temps[0]), float(temps[-1])), cfg.turning_k, cfg.excursion_hz
        )
    if cfg.tuning_curve is not None:
        curve = read_tuning_curve(cfg.tuning_curve)
    else:
        if table.dn_rel is None:
            raise DomainError("thermal table lacks dn_rel; supply tuning_curve to invert")
        clean = thermal.forward_tuning(table, nu_ref, t_ref, temps)
        curve = clean
        if cfg.laser_jitter_hz > 0:
            curve = thermal.add_jitter(clean, cfg.laser_jitter_hz, _substreams(cfg.seed, 1)[0])
    recovered = thermal.invert_dn(curve, table)
    turning = thermal.turning_point(curve, cfg.smooth_k)
    return ThermalRun(table, curve, recovered, turning)


def run_stability(cfg: ScanConfig):
    """
    Monte-Carlo stability calibration: jitter the gap around ``d_op_nm``,
    record η_min, then convert the η_min scatter back into a gap σ using the
    scan's η_min(D) curve.

    Returns (StabilityEstimate, eta_series, GapScanResult).
    """
    if cfg.d_op_nm is None:
        raise ConfigError("stability needs d_op_nm", key="d_op_nm")
    mode, geom = cfg.mode(), cfg.geometry()
    distances = cfg.distances_nm or tuple(np.arange(0.0, 2000.0 + 1e-9, 5.0))
    curve = gapscan.scan(distances, mode, geom, cfg.tol_r)
    rng = _substreams(cfg.seed, 1)[0]
    series = gapscan.simulate_eta_series(
        cfg.d_op_nm, cfg.stability_jitter_nm, cfg.samples, mode, geom, rng
    )
    est = gapscan.stability_estimate(series, curve.distances, curve.eta_min, cfg.d_op_nm)
    return est, series, curve
