"""
Single-mode cavity coupled to a single-mode waveguide.

Coupled-mode input-output model for the through-port amplitude

    t_cav(Δ) = 1 - κ_ex / ((κ0 + κ_ex)/2 - iΔ)
    t(Δ)     = (1 - β) + β·t_cav(Δ)

with Δ = 2π(ν_laser - ν0) in rad/s and all loss rates κ in rad/s (energy
decay rates). β is the amplitude fraction of the guided light that overlaps
the cavity mode; the remainder passes unperturbed.

The sign of the iΔ term is chosen so that the overcoupled phase winds by
+2π as the laser frequency increases.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, UnwrapError

C_VACUUM = 299_792_458.0  # [m/s]
DEFAULT_TOL_R = 0.02
UNWRAP_EPS = 1e-6  # [rad]


def _require_finite(name: str, value) -> None:
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ResonatorMode:
    """
    Intrinsic state of the cavity mode.

    Parameters
    ----------
    nu0 : float
        Resonance frequency [Hz].
    kappa0 : float
        Intrinsic (unloaded) energy loss rate [rad/s].
    """

    nu0: float
    kappa0: float

    def __post_init__(self) -> None:
        _require_finite("nu0", self.nu0)
        _require_finite("kappa0", self.kappa0)
        if self.nu0 <= 0:
            raise DomainError(f"nu0 must be positive, got {self.nu0}")
        if self.kappa0 <= 0:
            raise DomainError(f"kappa0 must be positive, got {self.kappa0}")
        if not 2 * np.pi * self.nu0 / self.kappa0 > 1:
            raise DomainError("intrinsic Q must exceed 1")

    @classmethod
    def from_wavelength(cls, wavelength: float, *, linewidth_hz: float) -> ResonatorMode:
        """Build from vacuum wavelength [m] and intrinsic linewidth [Hz]."""
        return cls(nu0=C_VACUUM / wavelength, kappa0=2 * np.pi * linewidth_hz)

    @classmethod
    def from_q(cls, nu0: float, q0: float) -> ResonatorMode:
        return cls(nu0=nu0, kappa0=2 * np.pi * nu0 / q0)

    @property
    def intrinsic_q(self) -> float:
        return 2 * np.pi * self.nu0 / self.kappa0

    @property
    def intrinsic_linewidth_hz(self) -> float:
        return self.kappa0 / (2 * np.pi)


@dataclass(frozen=True)
class CouplingState:
    """
    Waveguide-cavity coupling.

    Parameters
    ----------
    kappa_ex : float
        External coupling rate [rad/s].
    beta : float
        Mode-match amplitude fraction in [0, 1].
    """

    kappa_ex: float
    beta: float = 1.0

    def __post_init__(self) -> None:
        _require_finite("kappa_ex", self.kappa_ex)
        _require_finite("beta", self.beta)
        if self.kappa_ex < 0:
            raise DomainError(f"kappa_ex must be non-negative, got {self.kappa_ex}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class ComplexSpectrum:
    """Detuning grid [rad/s] with the complex through-port amplitude at each point."""

    detunings: NDArray[np.float64]
    amplitudes: NDArray[np.complex128]

    def __post_init__(self) -> None:
        d = np.asarray(self.detunings, dtype=float)
        a = np.asarray(self.amplitudes, dtype=complex)
        if d.ndim != 1 or d.size == 0:
            raise DomainError("detunings must be a non-empty 1-D array")
        if a.shape != d.shape:
            raise DomainError("detunings and amplitudes must have equal length")
        if np.any(np.diff(d) <= 0):
            raise DomainError("detunings must be strictly increasing")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "amplitudes", a)

    @property
    def transmittance(self) -> NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    @property
    def phase(self) -> NDArray[np.float64]:
        return unwrap_phase(self.amplitudes, self.detunings)


class Regime(enum.Enum):
    UNDERCOUPLED = "Undercoupled"
    CRITICAL = "Critical"
    OVERCOUPLED = "Overcoupled"

    def __str__(self) -> str:
        return self.value


class RegimeLabel(NamedTuple):
    regime: Regime
    ratio: float


def _check_grid(grid: ArrayLike) -> NDArray[np.float64]:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise DomainError("detuning grid must be a non-empty 1-D array")
    _require_finite("detuning grid", g)
    if np.any(np.diff(g) <= 0):
        raise DomainError("detuning grid must be strictly increasing")
    return g


def transmission_amplitude(delta: ArrayLike, mode: ResonatorMode, cpl: CouplingState):
    """
    Complex through-port amplitude t(Δ).

    Accepts a scalar or an array of detunings [rad/s]; returns the same shape.
    """
    d = np.asarray(delta, dtype=float)
    _require_finite("delta", d)
    half_width = 0.5 * (mode.kappa0 + cpl.kappa_ex)
    t_cav = 1.0 - cpl.kappa_ex / (half_width - 1j * d)
    t = (1.0 - cpl.beta) + cpl.beta * t_cav
    return t if t.ndim else complex(t)


def spectrum(grid: ArrayLike, mode: ResonatorMode, cpl: CouplingState) -> ComplexSpectrum:
    g = _check_grid(grid)
    return ComplexSpectrum(g, transmission_amplitude(g, mode, cpl))


def transmittance_spectrum(
    grid: ArrayLike, mode: ResonatorMode, cpl: CouplingState
) -> NDArray[np.float64]:
    """Normalized transmittance η(Δ) = |t(Δ)|² on a strictly increasing grid."""
    g = _check_grid(grid)
    return np.abs(transmission_amplitude(g, mode, cpl)) ** 2


def unwrap_phase(
    amplitudes: ArrayLike, detunings: ArrayLike | None = None, eps: float = UNWRAP_EPS
) -> NDArray[np.float64]:
    """
    Continuous phase of a sampled complex curve.

    Each step is the principal angle of t[k+1]·conj(t[k]), i.e. the
    nearest-multiple-of-2π continuation. The start value is arg t[0].

    Raises
    ------
    UnwrapError
        If any step has magnitude >= π - eps (ambiguous direction), or a
        sample is exactly zero.
    """
    t = np.asarray(amplitudes, dtype=complex)
    if t.size == 0:
        raise DomainError("cannot unwrap an empty array")
    x = np.arange(t.size, dtype=float) if detunings is None else np.asarray(detunings, float)
    zero = np.flatnonzero(t == 0)
    if zero.size:
        k = int(zero[0])
        raise UnwrapError(
            f"phase undefined at sample {k} (amplitude is zero)", k, (x[k], x[k])
        )
    steps = np.angle(t[1:] * np.conj(t[:-1]))
    bad = np.flatnonzero(np.abs(steps) >= np.pi - eps)
    if bad.size:
        k = int(bad[0])
        raise UnwrapError(
            f"phase step {steps[k]:.6g} rad between samples {k} and {k + 1} "
            f"(detuning {x[k]:.6g} .. {x[k + 1]:.6g}) is too close to pi; refine the grid",
            k,
            (float(x[k]), float(x[k + 1])),
        )
    phase = np.empty(t.size)
    phase[0] = np.angle(t[0])
    phase[1:] = phase[0] + np.cumsum(steps)
    return phase


def phase_spectrum(
    grid: ArrayLike, mode: ResonatorMode, cpl: CouplingState
) -> NDArray[np.float64]:
    """Unwrapped cavity-induced phase arg t(Δ) [rad] along the grid."""
    g = _check_grid(grid)
    return unwrap_phase(transmission_amplitude(g, mode, cpl), g)


def winding_number(phase: ArrayLike) -> int:
    """Net number of 2π turns between the first and last sample of an unwrapped phase."""
    p = np.asarray(phase, dtype=float)
    return int(np.rint((p[-1] - p[0]) / (2 * np.pi)))


def classify_ratio(ratio: float, tol_r: float = DEFAULT_TOL_R) -> Regime:
    if not tol_r > 0:
        raise DomainError(f"tol_r must be positive, got {tol_r}")
    if ratio < 1.0 - tol_r:
        return Regime.UNDERCOUPLED
    if ratio > 1.0 + tol_r:
        return Regime.OVERCOUPLED
    return Regime.CRITICAL


def classify_regime(
    mode: ResonatorMode, cpl: CouplingState, tol_r: float = DEFAULT_TOL_R
) -> RegimeLabel:
    r = cpl.kappa_ex / mode.kappa0
    return RegimeLabel(classify_ratio(r, tol_r), r)


def loaded_linewidth_hz(mode: ResonatorMode, cpl: CouplingState) -> float:
    """Full width at half depth of the transmittance dip [Hz]."""
    return (mode.kappa0 + cpl.kappa_ex) / (2 * np.pi)


def loaded_q(mode: ResonatorMode, cpl: CouplingState) -> float:
    return 2 * np.pi * mode.nu0 / (mode.kappa0 + cpl.kappa_ex)


def on_resonance_transmittance(ratio: float, beta: float = 1.0) -> float:
    """η(0) for coupling ratio r = κ_ex/κ0; reduces to ((1-r)/(1+r))² for β = 1."""
    t0 = (1.0 - beta) + beta * (1.0 - 2.0 * ratio / (1.0 + ratio))
    return t0 * t0


def ratio_from_dip(eta_min: float, overcoupled: bool = False) -> float:
    """Invert η_min = ((1-r)/(1+r))² for the chosen branch (β = 1)."""
    if not 0.0 <= eta_min < 1.0:
        raise DomainError(f"eta_min must lie in [0, 1), got {eta_min}")
    s = np.sqrt(eta_min)
    r = (1.0 - s) / (1.0 + s)
    return 1.0 / r if overcoupled else r


def undercoupled_max_phase(mode: ResonatorMode, cpl: CouplingState) -> float:
    """
    Largest |arg t| of an undercoupled mode with β = 1.

    arg t = atan(Δ/a) - atan(Δ/b) with a = κ/2, b = (κ0 - κ_ex)/2 peaks at
    Δ = sqrt(ab).
    """
    a = 0.5 * (mode.kappa0 + cpl.kappa_ex)
    b = 0.5 * (mode.kappa0 - cpl.kappa_ex)
    if b <= 0:
        raise DomainError("mode is not undercoupled")
    return float(np.arctan(np.sqrt(a / b)) - np.arctan(np.sqrt(b / a)))
