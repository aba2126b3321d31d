"""
Jones-calculus model of the polarization analyzer.

The probe is launched at 45 degrees: the x component couples to the cavity
mode and picks up t(Δ), the y component is an unperturbed phase reference.
The analyzer is a half-wave plate, a quarter-wave plate and a polarizing
beam splitter with one photodetector per port. Three waveplate settings give
the six projections H/V, D/A and the two circular states.

Stokes convention (fixed by (1, i)/√2 -> S3 = -1)::

    S0 = |ex|² + |ey|²        S1 = |ex|² - |ey|²
    S2 = 2 Re(ex·conj(ey))    S3 = 2 Im(ex·conj(ey))

so atan2(S3, S2) = arg(ex) - arg(ey), which equals arg t for the probe above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import cavity
from .errors import DomainError, UndefinedPhaseError

# (half-wave angle, quarter-wave angle) [rad] and the Stokes component that
# the difference of the two detector readings measures.
ANALYZER_SETTINGS: tuple[tuple[str, float, float], ...] = (
    ("s1", 0.0, 0.0),
    ("s2", np.pi / 8, 0.0),
    ("s3", 0.0, np.pi / 4),
)
RELIABILITY_SIGMAS = 5.0


@dataclass(frozen=True)
class JonesVector:
    ex: complex
    ey: complex

    def __post_init__(self) -> None:
        if not (np.isfinite(self.ex) and np.isfinite(self.ey)):
            raise DomainError("Jones components must be finite")
        if abs(self.ex) ** 2 + abs(self.ey) ** 2 <= 0:
            raise DomainError("Jones vector must be non-zero")

    def as_array(self) -> NDArray[np.complex128]:
        return np.array([self.ex, self.ey], dtype=complex)


@dataclass(frozen=True)
class StokesSample:
    s0: float
    s1: float
    s2: float
    s3: float

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.s0, self.s1, self.s2, self.s3])

    @property
    def degree_of_polarization(self) -> float:
        return float(np.sqrt(self.s1**2 + self.s2**2 + self.s3**2) / self.s0)


def _rotation(theta: float) -> NDArray[np.float64]:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def waveplate(theta: float, retardance: float) -> NDArray[np.complex128]:
    """
    Jones operator of a linear retarder.

    Parameters
    ----------
    theta : float
        Fast-axis angle from x [rad].
    retardance : float
        Phase delay of the slow axis [rad]; π for a half-wave plate, π/2 for
        a quarter-wave plate.
    """
    core = np.diag([1.0, np.exp(1j * retardance)])
    return _rotation(-theta) @ core @ _rotation(theta)


def half_wave(theta: float) -> NDArray[np.complex128]:
    return waveplate(theta, np.pi)


def quarter_wave(theta: float) -> NDArray[np.complex128]:
    return waveplate(theta, np.pi / 2)


def stokes_from_jones(v: JonesVector) -> StokesSample:
    ex, ey = complex(v.ex), complex(v.ey)
    cross = ex * np.conj(ey)
    ix, iy = abs(ex) ** 2, abs(ey) ** 2
    if ix + iy <= 0:
        raise DomainError("zero Jones vector has no Stokes parameters")
    return StokesSample(
        float(ix + iy), float(ix - iy), float(2.0 * cross.real), float(2.0 * cross.imag)
    )


def stokes_array(ex: ArrayLike, ey: ArrayLike) -> NDArray[np.float64]:
    """Vectorized noiseless Stokes parameters, shape (N, 4)."""
    ex = np.asarray(ex, dtype=complex)
    ey = np.asarray(ey, dtype=complex)
    cross = ex * np.conj(ey)
    ix, iy = np.abs(ex) ** 2, np.abs(ey) ** 2
    if np.any(ix + iy <= 0):
        raise DomainError("zero Jones vector has no Stokes parameters")
    return np.stack([ix + iy, ix - iy, 2.0 * cross.real, 2.0 * cross.imag], axis=-1)


def _port_intensities(fields: NDArray[np.complex128], hwp: float, qwp: float):
    # fields: (N, 2); light passes the HWP, then the QWP, then the PBS
    m = quarter_wave(qwp) @ half_wave(hwp)
    out = fields @ m.T
    return np.abs(out[:, 0]) ** 2, np.abs(out[:, 1]) ** 2


def _signs() -> dict[str, float]:
    # Orientation of each setting's (H port - V port) difference relative to
    # the Stokes convention above, worked out once from reference states.
    refs = {
        "s1": np.array([[1.0, 0.0]], dtype=complex),
        "s2": np.array([[1.0, 1.0]], dtype=complex) / np.sqrt(2),
        "s3": np.array([[1.0, -1j]], dtype=complex) / np.sqrt(2),
    }
    signs = {}
    for name, hwp, qwp in ANALYZER_SETTINGS:
        h, v = _port_intensities(refs[name], hwp, qwp)
        diff = float(h[0] - v[0])
        if abs(abs(diff) - 1.0) > 1e-12:
            raise RuntimeError(f"analyzer setting for {name} is not a projective measurement")
        signs[name] = np.sign(diff)
    return signs


_SETTING_SIGNS = _signs()


def measure_stokes_array(
    ex: ArrayLike,
    ey: ArrayLike,
    sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> NDArray[np.float64]:
    """
    Simulated six-detector-reading Stokes measurement, shape (N, 4).

    Each of the six port intensities receives independent Gaussian noise of
    standard deviation ``sigma * S0``. S0 is the mean of the three per-setting
    port sums.
    """
    if sigma < 0:
        raise DomainError(f"noise sigma must be non-negative, got {sigma}")
    if sigma > 0 and rng is None:
        raise DomainError("a random generator is required when sigma > 0")
    fields = np.stack(
        [np.atleast_1d(np.asarray(ex, complex)), np.atleast_1d(np.asarray(ey, complex))], axis=-1
    )
    s0_true = np.sum(np.abs(fields) ** 2, axis=-1)
    if np.any(s0_true <= 0):
        raise DomainError("zero Jones vector has no Stokes parameters")
    out = np.empty((fields.shape[0], 4))
    totals = []
    for k, (name, hwp, qwp) in enumerate(ANALYZER_SETTINGS, start=1):
        h, v = _port_intensities(fields, hwp, qwp)
        if sigma > 0:
            h = h + sigma * s0_true * rng.standard_normal(h.shape)
            v = v + sigma * s0_true * rng.standard_normal(v.shape)
        out[:, k] = _SETTING_SIGNS[name] * (h - v)
        totals.append(h + v)
    out[:, 0] = np.mean(totals, axis=0)
    return out


def measure_stokes(
    v: JonesVector, sigma: float = 0.0, rng: np.random.Generator | None = None
) -> StokesSample:
    row = measure_stokes_array([v.ex], [v.ey], sigma, rng)[0]
    return StokesSample(*map(float, row))


def phase_from_stokes(s: StokesSample) -> float:
    """Cavity-induced phase atan2(S3, S2) in (-π, π]."""
    if s.s2 == 0 and s.s3 == 0:
        raise UndefinedPhaseError("S2 = S3 = 0: phase is undefined")
    return float(np.arctan2(s.s3, s.s2))


def phase_reliable(stokes: ArrayLike, sigma: float) -> NDArray[np.bool_]:
    """False where S2² + S3² < (5·sigma·S0)², i.e. the phase is mostly noise."""
    s = np.atleast_2d(np.asarray(stokes, dtype=float))
    return s[:, 2] ** 2 + s[:, 3] ** 2 >= (RELIABILITY_SIGMAS * sigma * s[:, 0]) ** 2


def phase_sweep(stokes: ArrayLike, sigma: float = 0.0):
    """
    Phase along a sweep of Stokes rows, unwrapped with ``np.unwrap``.

    Returns
    -------
    phase : ndarray
        Unwrapped phase [rad].
    reliable : ndarray of bool
        Per-point reliability flag (see :func:`phase_reliable`).
    """
    s = np.atleast_2d(np.asarray(stokes, dtype=float))
    if np.any((s[:, 2] == 0) & (s[:, 3] == 0)):
        raise UndefinedPhaseError("S2 = S3 = 0 at some sample: phase is undefined")
    raw = np.arctan2(s[:, 3], s[:, 2])
    return np.unwrap(raw), phase_reliable(s, sigma)


def probe_output(t: ArrayLike, beta_ref: float = 1.0):
    """Output Jones components for a 45-degree probe whose x part sees t."""
    t = np.asarray(t, dtype=complex)
    return t / np.sqrt(2.0), np.full(t.shape, beta_ref / np.sqrt(2.0), dtype=complex)


def polarimetric_phase(
    grid: ArrayLike,
    mode: cavity.ResonatorMode,
    cpl: cavity.CouplingState,
    sigma: float = 0.0,
    rng: np.random.Generator | None = None,
):
    """
    Full measurement chain: cavity -> analyzer -> Stokes -> phase.

    Returns (stokes (N, 4), unwrapped phase, reliable mask).
    """
    t = cavity.transmission_amplitude(np.asarray(grid, float), mode, cpl)
    ex, ey = probe_output(t)
    stokes = measure_stokes_array(ex, ey, sigma, rng)
    phase, ok = phase_sweep(stokes, sigma)
    return stokes, phase, ok
