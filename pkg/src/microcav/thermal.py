"""
Temperature tuning of the resonance.

The fractional resonance shift obeys

    -(1/ν0) dν0/dT = α(T) + (1/n_eff) dn_eff/dT

with α the linear thermal expansion coefficient. ``forward_tuning``
integrates it for a given table; ``invert_dn`` recovers the thermo-refractive
term from a measured ν0(T) and a supplied α(T).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, ExtrapolationError


@dataclass(frozen=True)
class ThermalTable:
    """
    Temperature-indexed thermal coefficients.

    Parameters
    ----------
    temperatures : ndarray
        Strictly increasing temperatures [K].
    alpha : ndarray
        Linear thermal expansion coefficient [1/K].
    dn_rel : ndarray or None
        (1/n_eff)(dn_eff/dT) [1/K]; None when it is the unknown.
    """

    temperatures: NDArray[np.float64]
    alpha: NDArray[np.float64]
    dn_rel: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.temperatures, dtype=float)
        a = np.asarray(self.alpha, dtype=float)
        if t.ndim != 1 or t.size < 3:
            raise DomainError("a thermal table needs at least 3 temperatures")
        if a.shape != t.shape:
            raise DomainError("alpha must align with temperatures")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise DomainError("temperatures must be >= 0 K and strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise DomainError("thermal table must be finite")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "alpha", a)
        if self.dn_rel is not None:
            n = np.asarray(self.dn_rel, dtype=float)
            if n.shape != t.shape or not np.all(np.isfinite(n)):
                raise DomainError("dn_rel must be finite and align with temperatures")
            object.__setattr__(self, "dn_rel", n)

    def alpha_at(self, temps: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(temps, dtype=float)
        _check_range(t, self.temperatures)
        return np.interp(t, self.temperatures, self.alpha)

    @property
    def total_coefficient(self) -> NDArray[np.float64]:
        """α + dn_rel, i.e. -(1/ν0) dν0/dT."""
        if self.dn_rel is None:
            raise DomainError("table has no dn_rel column")
        return self.alpha + self.dn_rel


@dataclass(frozen=True)
class TuningCurve:
    temperatures: NDArray[np.float64]  # [K]
    nu0: NDArray[np.float64]  # [Hz]
    jitter_sigma: float = 0.0  # [Hz] per point

    def __post_init__(self) -> None:
        t = np.asarray(self.temperatures, dtype=float)
        nu = np.asarray(self.nu0, dtype=float)
        if t.ndim != 1 or nu.shape != t.shape:
            raise DomainError("temperatures and nu0 must be aligned 1-D arrays")
        if np.any(np.diff(t) <= 0):
            raise DomainError("temperatures must be strictly increasing")
        if np.any(nu <= 0):
            raise DomainError("nu0 must be positive")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "nu0", nu)

    @property
    def shift(self) -> NDArray[np.float64]:
        """ν0(T) - ν0(T_first) [Hz]."""
        return self.nu0 - self.nu0[0]

    @property
    def excursion(self) -> float:
        """Peak-to-peak frequency range [Hz]."""
        return float(self.nu0.max() - self.nu0.min())


class TurningPoints(NamedTuple):
    temperatures: list[float]
    ambiguous: bool

    @property
    def first(self) -> float | None:
        return self.temperatures[0] if self.temperatures else None


def _check_range(t: NDArray[np.float64], table_t: NDArray[np.float64]) -> None:
    lo, hi = table_t[0], table_t[-1]
    if np.any(t < lo) or np.any(t > hi):
        raise ExtrapolationError(
            f"temperature(s) outside table range [{lo:g}, {hi:g}] K: "
            f"{np.asarray(t)[(t < lo) | (t > hi)][:5]}"
        )


def integrate_piecewise_linear(
    x: NDArray[np.float64], y: NDArray[np.float64], x_ref: float, query: ArrayLike
) -> NDArray[np.float64]:
    """
    ∫_{x_ref}^{q} y dx for the linear interpolant of (x, y), at each query point.

    This is the trapezoidal rule on the union of table nodes and the end points.
    """
    q = np.asarray(query, dtype=float)
    seg = np.diff(x) * 0.5 * (y[1:] + y[:-1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])

    def primitive(p: NDArray[np.float64]) -> NDArray[np.float64]:
        i = np.clip(np.searchsorted(x, p, side="right") - 1, 0, x.size - 2)
        h = p - x[i]
        slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i])
        return cum[i] + h * (y[i] + 0.5 * slope * h)

    return primitive(q) - primitive(np.asarray(x_ref, dtype=float))


def forward_tuning(
    table: ThermalTable,
    nu_ref: float,
    t_ref: float,
    temperatures: ArrayLike | None = None,
) -> TuningCurve:
    """
    Resonance frequency vs temperature, ν0(T) = ν_ref · exp(-∫_{T_ref}^{T} (α + dn_rel) dT).

    Evaluated on ``temperatures`` (default: the table nodes).
    """
    if table.dn_rel is None:
        raise DomainError("forward_tuning needs a table with dn_rel")
    if not nu_ref > 0:
        raise DomainError("nu_ref must be positive")
    temps = table.temperatures if temperatures is None else np.asarray(temperatures, float)
    _check_range(np.atleast_1d(t_ref), table.temperatures)
    _check_range(temps, table.temperatures)
    integral = integrate_piecewise_linear(
        table.temperatures, table.total_coefficient, t_ref, temps
    )
    return TuningCurve(temps, nu_ref * np.exp(-integral))


def fractional_slope(curve: TuningCurve) -> NDArray[np.float64]:
    """(1/ν0) dν0/dT by central differences (one-sided at the ends)."""
    if curve.temperatures.size < 3:
        raise DomainError("need at least 3 points to differentiate")
    return np.gradient(curve.nu0, curve.temperatures, edge_order=1) / curve.nu0


def invert_dn(curve: TuningCurve, alpha_table: ThermalTable) -> ThermalTable:
    """
    Thermo-refractive term from a tuning curve: dn_rel = -(1/ν0) dν0/dT - α.

    Only curve points inside the α table's range are used.
    """
    t = curve.temperatures
    lo, hi = alpha_table.temperatures[0], alpha_table.temperatures[-1]
    inside = (t >= lo) & (t <= hi)
    if inside.sum() < 3:
        raise DomainError(
            f"tuning curve [{t[0]:g}, {t[-1]:g}] K and alpha table [{lo:g}, {hi:g}] K "
            "overlap in fewer than 3 points"
        )
    sub = TuningCurve(t[inside], curve.nu0[inside], curve.jitter_sigma)
    alpha = alpha_table.alpha_at(sub.temperatures)
    dn = -fractional_slope(sub) - alpha
    return ThermalTable(sub.temperatures, alpha, dn)


def dn_noise_sigma(jitter_hz: float, nu0: float, baseline_k: float) -> float:
    """
    Noise of dn_rel recovered from a two-point difference of jittered ν0.

    ``baseline_k`` is the temperature span of the difference: twice the grid
    step for interior (central) points, one step at the ends.
    """
    return np.sqrt(2.0) * jitter_hz / (nu0 * baseline_k)


def turning_point(curve: TuningCurve, smooth_k: float | None = None) -> TurningPoints:
    """
    Temperature(s) where the discrete derivative of ν0(T) changes sign.

    The derivative is sampled at interval midpoints and each sign change is
    located by linear interpolation between the bracketing midpoints.

    Parameters
    ----------
    curve : TuningCurve
    smooth_k : float, optional
        Width [K] of a quadratic Savitzky-Golay filter applied to ν0 before
        differentiation (uniform grids only). Frequency jitter otherwise
        produces spurious sign changes near the extremum, where the true
        slope is small.
    """
    t, nu = curve.temperatures, curve.nu0
    if t.size < 3:
        raise DomainError("need at least 3 points")
    if smooth_k is not None:
        from scipy.signal import savgol_filter

        step = t[1] - t[0]
        if not np.allclose(np.diff(t), step, rtol=1e-9, atol=0):
            raise DomainError("smoothing needs a uniform temperature grid")
        window = int(round(smooth_k / step)) | 1
        window = min(window, t.size if t.size % 2 else t.size - 1)
        if window < 3:
            raise DomainError(f"smooth_k = {smooth_k} K spans fewer than 3 samples")
        nu = savgol_filter(nu - nu[0], window, 2, mode="interp") + nu[0]
    slope = np.diff(nu) / np.diff(t)
    mid = 0.5 * (t[1:] + t[:-1])
    found = []
    for k in range(slope.size - 1):
        a, b = slope[k], slope[k + 1]
        if a == 0:
            if 0 < k and slope[k - 1] * b < 0:
                found.append(float(mid[k]))
        elif a * b < 0:
            found.append(float(mid[k] + (mid[k + 1] - mid[k]) * a / (a - b)))
    return TurningPoints(found, len(found) > 1)


def add_jitter(curve: TuningCurve, sigma_hz: float, rng: np.random.Generator) -> TuningCurve:
    """Copy of ``curve`` with i.i.d. Gaussian frequency jitter of ``sigma_hz``."""
    noisy = curve.nu0 + sigma_hz * rng.standard_normal(curve.nu0.shape)
    return TuningCurve(curve.temperatures, noisy, sigma_hz)


# ---------------------------------------------------------------------------
# synthetic data (NOT literature values)


def synthetic_alpha(temps: ArrayLike) -> NDArray[np.float64]:
    """
    Synthetic silica-like expansion coefficient [1/K].

    Smooth, ~1e-7/K in magnitude, changing sign at 13 K. A stand-in for
    tabulated literature data, not a reproduction of it.
    """
    t = np.asarray(temps, dtype=float)
    return 1.2e-7 * np.tanh((t - 13.0) / 6.0)


def synthetic_table(
    nu_ref: float,
    t_ref: float = 7.0,
    t_range: tuple[float, float] = (7.0, 28.0),
    turning_k: float = 20.0,
    excursion_hz: float = 0.8e9,
    step_k: float = 0.25,
) -> ThermalTable:
    """
    Synthetic table whose total coefficient α + dn_rel is linear in T and
    vanishes at ``turning_k``: ν0 rises below the turning point and falls
    above it, with peak-to-peak ``excursion_hz`` over ``t_range``.

    The grid extends a few kelvin beyond ``t_range`` on both sides.
    """
    from scipy.optimize import brentq

    lo, hi = t_range
    if not lo <= turning_k <= hi or not lo <= t_ref <= hi:
        raise DomainError("turning point and reference must lie inside t_range")
    q = 0.5 * (t_ref - turning_k) ** 2
    m = 0.5 * max(turning_k - lo, hi - turning_k) ** 2

    def mismatch(k: float) -> float:
        return nu_ref * np.exp(k * q) * -np.expm1(-k * m) - excursion_hz

    k_hi = 1e-6
    while mismatch(k_hi) < 0:
        k_hi *= 10
    slope = brentq(mismatch, 0.0, k_hi, xtol=1e-30, rtol=1e-15)
    start = max(0.0, lo - 3.0)
    temps = start + step_k * np.arange(int(round((hi + 12.0 - start) / step_k)) + 1)
    total = slope * (temps - turning_k)
    alpha = synthetic_alpha(temps)
    return ThermalTable(temps, alpha, total - alpha)
