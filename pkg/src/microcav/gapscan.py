"""
Gap dependence of the taper-sphere coupling.

The external coupling decays evanescently with the gap D,
κ_ex(D) = κ_ex,contact · exp(-D/γ_e). An optional parasitic loss channel
adds κ_par,contact · exp(-D/γ_par) to the intrinsic loss near contact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import cavity
from .cavity import CouplingState, Regime, ResonatorMode
from .errors import DomainError, IllConditionedError, NoCriticalGapError

WAVELENGTH_NM = 638.8
SILICA_INDEX = 1.45
BISECTION_TOL_NM = 0.01
# slope below this fraction of the curve's steepest slope counts as flat
FLAT_SLOPE_FRACTION = 1e-3


def default_decay_length(wavelength_nm: float = WAVELENGTH_NM, n_eff: float = SILICA_INDEX) -> float:
    """Evanescent intensity decay length λ/(2π·sqrt(n² - 1)) [nm]; ≈ 96.8 nm at 638.8 nm."""
    return wavelength_nm / (2 * np.pi * np.sqrt(n_eff**2 - 1.0))


@dataclass(frozen=True)
class CouplingGeometry:
    """
    Parameters
    ----------
    kappa_ex_contact : float
        External coupling rate at D = 0 [rad/s].
    decay_len : float
        Decay length of the external coupling [nm].
    kappa_par_contact : float
        Parasitic intrinsic-loss increase at contact [rad/s]; 0 disables it.
    par_decay_len : float
        Decay length of the parasitic channel [nm].
    beta : float
        Mode-match factor used for every gap.
    """

    kappa_ex_contact: float
    decay_len: float = default_decay_length()
    kappa_par_contact: float = 0.0
    par_decay_len: float = 0.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        vals = (self.kappa_ex_contact, self.decay_len, self.kappa_par_contact, self.par_decay_len)
        if not np.all(np.isfinite(vals)):
            raise DomainError("geometry parameters must be finite")
        if self.kappa_ex_contact <= 0:
            raise DomainError("kappa_ex_contact must be positive")
        if self.decay_len <= 0:
            raise DomainError("decay_len must be positive")
        if self.kappa_par_contact < 0 or self.par_decay_len < 0:
            raise DomainError("parasitic parameters must be non-negative")
        if self.kappa_par_contact > 0 and self.par_decay_len == 0:
            raise DomainError("par_decay_len must be positive when the parasitic channel is on")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError("beta must lie in [0, 1]")

    @property
    def has_parasitic(self) -> bool:
        return self.kappa_par_contact > 0

    @classmethod
    def with_critical_gap(
        cls, kappa0: float, critical_gap: float, decay_len: float, **kwargs
    ) -> CouplingGeometry:
        """Geometry whose (parasitic-free) critical gap sits at ``critical_gap`` nm."""
        return cls(kappa_ex_contact=kappa0 * np.exp(critical_gap / decay_len),
                   decay_len=decay_len, **kwargs)


class GapScanResult(NamedTuple):
    distances: NDArray[np.float64]  # [nm]
    kappa_ex: NDArray[np.float64]  # [rad/s]
    kappa0_eff: NDArray[np.float64]  # [rad/s]
    eta_min: NDArray[np.float64]
    linewidth_hz: NDArray[np.float64]
    regime: list[Regime]


class StabilityEstimate(NamedTuple):
    sigma_nm: float
    three_sigma_nm: float
    slope_per_nm: float
    n_samples: int


def _check_gaps(d) -> NDArray[np.float64]:
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)):
        raise DomainError("gap must be finite")
    if np.any(d < 0):
        raise DomainError(f"gap must be non-negative, got min {d.min()}")
    return d


def kappa_ex_at(d: ArrayLike, geom: CouplingGeometry):
    """External coupling rate [rad/s] at gap(s) ``d`` [nm]."""
    d = _check_gaps(d)
    out = geom.kappa_ex_contact * np.exp(-d / geom.decay_len)
    return out if out.ndim else float(out)


def parasitic_at(d: ArrayLike, geom: CouplingGeometry):
    d = _check_gaps(d)
    if not geom.has_parasitic:
        out = np.zeros_like(d)
    else:
        out = geom.kappa_par_contact * np.exp(-d / geom.par_decay_len)
    return out if out.ndim else float(out)


def scan(
    distances: ArrayLike,
    mode: ResonatorMode,
    geom: CouplingGeometry,
    tol_r: float = cavity.DEFAULT_TOL_R,
) -> GapScanResult:
    d = _check_gaps(np.atleast_1d(distances))
    if d.size == 0:
        raise DomainError("distance list must not be empty")
    kex = np.atleast_1d(kappa_ex_at(d, geom))
    k0 = mode.kappa0 + np.atleast_1d(parasitic_at(d, geom))
    ratio = kex / k0
    eta = np.array([cavity.on_resonance_transmittance(r, geom.beta) for r in ratio])
    linewidth = (k0 + kex) / (2 * np.pi)
    regimes = [cavity.classify_ratio(r, tol_r) for r in ratio]
    return GapScanResult(d, kex, k0, eta, linewidth, regimes)


def critical_gap(
    mode: ResonatorMode, geom: CouplingGeometry, d_max: float | None = None
) -> float:
    """
    Gap D* [nm] where κ_ex(D*) = κ0 + parasitic(D*), by bisection to 0.01 nm.

    ``d_max`` defaults to 50 decay lengths.
    """
    if d_max is None:
        d_max = 50.0 * max(geom.decay_len, geom.par_decay_len)

    def excess(d: float) -> float:
        return kappa_ex_at(d, geom) - mode.kappa0 - parasitic_at(d, geom)

    lo, hi = 0.0, float(d_max)
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo <= 0 or f_hi >= 0:
        raise NoCriticalGapError(
            f"coupling never crosses the intrinsic loss in [0, {d_max:g}] nm "
            f"(excess at contact {f_lo:.4g} rad/s)"
        )
    if not geom.has_parasitic:
        return geom.decay_len * np.log(geom.kappa_ex_contact / mode.kappa0)
    while hi - lo > BISECTION_TOL_NM:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stability_estimate(
    eta_series: ArrayLike,
    curve_distances: ArrayLike,
    curve_eta: ArrayLike,
    d_op: float,
) -> StabilityEstimate:
    """
    Convert transmittance-minimum fluctuations into a gap fluctuation.

    σ_D = stdev(eta_series) / |dη_min/dD| at ``d_op``, with the slope from
    central differences on the calibration curve, linearly interpolated to
    ``d_op``.

    Raises
    ------
    IllConditionedError
        If the calibration curve is flat at ``d_op`` (e.g. at the critical gap).
    """
    series = np.asarray(eta_series, dtype=float)
    cd = np.asarray(curve_distances, dtype=float)
    ce = np.asarray(curve_eta, dtype=float)
    if series.size < 2:
        raise DomainError("need at least two transmittance samples")
    if cd.size < 3 or cd.shape != ce.shape:
        raise DomainError("calibration curve needs >= 3 aligned (D, eta) samples")
    if np.any(np.diff(cd) <= 0):
        raise DomainError("calibration distances must be strictly increasing")
    if not cd[0] <= d_op <= cd[-1]:
        raise DomainError(f"d_op = {d_op} nm lies outside the calibration curve")
    grad = np.gradient(ce, cd)
    slope = float(np.interp(d_op, cd, grad))
    if abs(slope) <= FLAT_SLOPE_FRACTION * np.max(np.abs(grad)):
        raise IllConditionedError(
            f"calibration slope {slope:.3g} /nm at D = {d_op} nm is ~0; "
            "choose an operating gap away from the curve's extremum"
        )
    # constant series: report exactly zero rather than mean-rounding residue
    spread = float(np.std(series, ddof=1)) if np.ptp(series) > 0 else 0.0
    sigma = spread / abs(slope)
    return StabilityEstimate(sigma, 3.0 * sigma, slope, int(series.size))


def simulate_eta_series(
    d_op: float,
    jitter_nm: float,
    n: int,
    mode: ResonatorMode,
    geom: CouplingGeometry,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Transmittance minima seen while the gap jitters around ``d_op`` (Gaussian)."""
    d = np.clip(d_op + jitter_nm * rng.standard_normal(n), 0.0, None)
    return scan(d, mode, geom).eta_min


def coupling_for(d: float, geom: CouplingGeometry) -> CouplingState:
    return CouplingState(kappa_ex_at(d, geom), geom.beta)
