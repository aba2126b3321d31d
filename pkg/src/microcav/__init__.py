"""Simulation and fitting toolkit for waveguide-coupled high-Q microresonators."""

from .cavity import (
    ComplexSpectrum,
    CouplingState,
    Regime,
    RegimeLabel,
    ResonatorMode,
    classify_regime,
    phase_spectrum,
    transmission_amplitude,
    transmittance_spectrum,
)
from .fit import FitResult, fit_joint, fit_transmittance, q_from_linewidth
from .gapscan import CouplingGeometry, critical_gap, kappa_ex_at, scan, stability_estimate
from .polarimetry import (
    JonesVector,
    StokesSample,
    measure_stokes,
    phase_from_stokes,
    stokes_from_jones,
    waveplate,
)
from .thermal import ThermalTable, TuningCurve, forward_tuning, invert_dn, turning_point

__version__ = "0.1.0"
