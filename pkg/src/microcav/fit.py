"""
Recover cavity parameters from measured transmittance (and phase) spectra.

Internally the frequency axis is recentred on the transmittance minimum and
measured in units of an initial linewidth estimate w, so the free parameters
are O(1):

    x0 = (ν0 - ν_c)/w,   a0 = κ0/(2πw),   a_ex = κ_ex/(2πw)   [, β]

With β = 1 the transmittance is invariant under κ0 <-> κ_ex, so a
transmittance-only fit cannot tell under- from overcoupling; both solutions
are reported. The phase winding resolves the ambiguity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import cavity
from .cavity import RegimeLabel
from .errors import DomainError, FitError, InconsistencyError, LowSignalError
from .lm import LMResult, levenberg_marquardt

MIN_POINTS = 8
ETA_MAX = 1.2
LOW_SIGNAL_FACTOR = 3.0
DEFAULT_PHASE_WEIGHT = 0.1


@dataclass(frozen=True)
class FitResult:
    """
    Fitted cavity parameters with 1σ uncertainties.

    Rates are angular [rad/s]; ``nu0_hz`` is the absolute resonance frequency.
    """

    nu0_hz: float
    nu0_err: float
    kappa0: float
    kappa0_err: float
    kappa_ex: float
    kappa_ex_err: float
    beta_hat: float
    beta_err: float
    residual_rms: float
    regime: RegimeLabel
    iterations: int = 0
    converged_by: str = ""
    degenerate_twin: FitResult | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def loaded_q(self) -> float:
        return 2 * math.pi * self.nu0_hz / (self.kappa0 + self.kappa_ex)

    @property
    def intrinsic_q(self) -> float:
        return 2 * math.pi * self.nu0_hz / self.kappa0

    @property
    def linewidth_hz(self) -> float:
        return (self.kappa0 + self.kappa_ex) / (2 * math.pi)

    @property
    def ratio(self) -> float:
        return self.kappa_ex / self.kappa0

    @property
    def eta_min(self) -> float:
        return cavity.on_resonance_transmittance(self.ratio, self.beta_hat)

    @property
    def depth(self) -> float:
        return 1.0 - self.eta_min

    def swapped(self) -> FitResult:
        """The κ0 <-> κ_ex twin (identical transmittance when β = 1)."""
        r = self.kappa0 / self.kappa_ex
        return replace(
            self,
            kappa0=self.kappa_ex,
            kappa0_err=self.kappa_ex_err,
            kappa_ex=self.kappa0,
            kappa_ex_err=self.kappa0_err,
            regime=RegimeLabel(cavity.classify_ratio(r), r),
            degenerate_twin=None,
        )

    @property
    def ambiguous(self) -> bool:
        """True when a twin in a different regime fits equally well."""
        return (
            self.degenerate_twin is not None
            and self.degenerate_twin.regime.regime is not self.regime.regime
        )

    def as_dict(self, prefix: str = "") -> dict[str, object]:
        d: dict[str, object] = {
            "nu0_hz": self.nu0_hz,
            "nu0_err_hz": self.nu0_err,
            "kappa0_rad_s": self.kappa0,
            "kappa0_err_rad_s": self.kappa0_err,
            "kappa_ex_rad_s": self.kappa_ex,
            "kappa_ex_err_rad_s": self.kappa_ex_err,
            "intrinsic_linewidth_hz": self.kappa0 / (2 * math.pi),
            "external_linewidth_hz": self.kappa_ex / (2 * math.pi),
            "loaded_linewidth_hz": self.linewidth_hz,
            "ratio": self.ratio,
            "beta": self.beta_hat,
            "beta_err": self.beta_err,
            "eta_min": self.eta_min,
            "loaded_q": self.loaded_q,
            "intrinsic_q": self.intrinsic_q,
            "regime": str(self.regime.regime),
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
        }
        return {prefix + k: v for k, v in d.items()}

    def to_text(self) -> str:
        """Flat ``key = value`` block (17 significant digits for floats)."""
        lines = [f"{k} = {_fmt(v)}" for k, v in self.as_dict().items()]
        if self.degenerate_twin is not None:
            twin = self.degenerate_twin.as_dict("twin_")
            for k in ("twin_kappa0_rad_s", "twin_kappa_ex_rad_s", "twin_ratio",
                      "twin_intrinsic_q", "twin_regime"):
                lines.append(f"{k} = {_fmt(twin[k])}")
        for w in self.warnings:
            lines.append(f"warning = {w}")
        return "\n".join(lines) + "\n"

    def to_row(self) -> dict[str, object]:
        """One flat CSV row; twin columns are empty when absent."""
        row = self.as_dict()
        twin = self.degenerate_twin
        row["twin_ratio"] = twin.ratio if twin else ""
        row["twin_regime"] = str(twin.regime.regime) if twin else ""
        row["warnings"] = "; ".join(self.warnings)
        return row


def _fmt(v: object) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# model in scaled coordinates


def _eta_and_jac(x, p, free_beta: bool, beta: float):
    x0, a0, aex = p[0], p[1], p[2]
    b = p[3] if free_beta else beta
    y = x - x0
    A = a0 + aex
    den = y * y + 0.25 * A * A
    num = b * aex * A - b * b * aex * aex
    eta = 1.0 - num / den
    nd2 = num / (den * den)
    cols = [
        -2.0 * y * nd2,
        -(b * aex) / den + 0.5 * A * nd2,
        -(b * A + b * aex - 2.0 * b * b * aex) / den + 0.5 * A * nd2,
    ]
    if free_beta:
        cols.append(-(aex * A - 2.0 * b * aex * aex) / den)
    return eta, np.stack(cols, axis=1)


def _phase_and_jac(x, p, free_beta: bool, beta: float, over: bool):
    # arg t = atan2(-y, c) - atan2(-y, A/2), c = A/2 - β·a_ex; the numerator
    # angle is taken continuous on the chosen branch (c < 0 winds by 2π).
    x0, a0, aex = p[0], p[1], p[2]
    b = p[3] if free_beta else beta
    y = x - x0
    A = a0 + aex
    c = 0.5 * A - b * aex
    h = 0.5 * A
    th_num = np.arctan2(-y, c)
    if over:
        th_num = np.mod(th_num, 2 * np.pi)
    th_den = np.arctan2(-y, h)
    phase = th_num - th_den
    qn = y * y + c * c
    qd = y * y + h * h
    # d atan2(-y, X) = (-X dy + y dX) / (y² + X²), with dy/dx0 = -1
    d_num_dx0 = c / qn
    d_den_dx0 = h / qd
    d_num_dc = y / qn
    d_den_dh = y / qd
    cols = [
        d_num_dx0 - d_den_dx0,
        d_num_dc * 0.5 - d_den_dh * 0.5,
        d_num_dc * (0.5 - b) - d_den_dh * 0.5,
    ]
    if free_beta:
        cols.append(d_num_dc * (-aex))
    return phase, np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# initialization


@dataclass(frozen=True)
class _Scaling:
    center: float  # [Hz]
    width: float  # [Hz]

    def to_x(self, freq):
        return (np.asarray(freq, float) - self.center) / self.width


def _validate(freq, eta):
    f = np.asarray(freq, dtype=float)
    e = np.asarray(eta, dtype=float)
    if f.ndim != 1 or f.shape != e.shape:
        raise DomainError("frequency and transmittance must be aligned 1-D arrays")
    if f.size < MIN_POINTS:
        raise DomainError(f"need at least {MIN_POINTS} points, got {f.size}")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(e))):
        raise DomainError("spectrum contains non-finite values")
    if np.any(np.diff(f) <= 0):
        raise DomainError("frequencies must be strictly increasing")
    if np.any(e < 0) or np.any(e > ETA_MAX):
        raise DomainError(f"transmittance must lie in [0, {ETA_MAX}]")
    return f, e


def noise_floor(eta: NDArray[np.float64]) -> float:
    """Robust per-point noise estimate from second differences (MAD)."""
    d2 = np.diff(eta, 2)
    if d2.size == 0:
        return 0.0
    mad = np.median(np.abs(d2 - np.median(d2)))
    return float(1.4826 * mad / math.sqrt(6.0))


def _smooth(eta: NDArray[np.float64], k: int = 5) -> NDArray[np.float64]:
    if eta.size < 3 * k:
        return eta
    pad = k // 2
    padded = np.pad(eta, pad, mode="edge")
    return np.convolve(padded, np.ones(k) / k, mode="valid")


def _half_depth_width(f, e, i_min: int) -> float:
    level = 0.5 * (1.0 + e[i_min])
    left = i_min
    while left > 0 and e[left] < level:
        left -= 1
    right = i_min
    while right < e.size - 1 and e[right] < level:
        right += 1

    def cross(i, j):
        if e[j] == e[i]:
            return f[i]
        return f[i] + (level - e[i]) * (f[j] - f[i]) / (e[j] - e[i])

    fl = cross(left, left + 1) if left < i_min else f[0]
    fr = cross(right - 1, right) if right > i_min else f[-1]
    width = fr - fl
    if not width > 0:
        width = 4.0 * float(np.median(np.diff(f)))
    return float(width)


def initial_guess(freq: ArrayLike, eta: ArrayLike, overcoupled: bool = False):
    """
    Deterministic seed: ν0 at the (lightly smoothed) minimum, width from the
    half-depth crossings, coupling ratio from the dip depth.

    Returns (center_hz, fwhm_hz, ratio).
    """
    f, e = _validate(freq, eta)
    es = _smooth(e)
    i_min = int(np.argmin(es))
    eta_min = float(np.clip(es[i_min], 0.0, 0.999))
    fwhm = _half_depth_width(f, es, i_min)
    r = cavity.ratio_from_dip(eta_min, overcoupled=overcoupled)
    return float(f[i_min]), fwhm, r


def _check_signal(e: NDArray[np.float64]) -> None:
    sigma = noise_floor(e)
    depth = 1.0 - float(np.min(_smooth(e)))
    if depth <= max(LOW_SIGNAL_FACTOR * sigma, 1e-9):
        raise LowSignalError(
            f"dip depth {depth:.3g} is below {LOW_SIGNAL_FACTOR:g}x the noise floor {sigma:.3g}"
        )


# ---------------------------------------------------------------------------
# public fitting entry points


def _assemble(
    lm: LMResult,
    sc: _Scaling,
    free_beta: bool,
    beta: float,
    n_eta: int,
    warnings: list[str],
    tol_r: float,
) -> FitResult:
    p = lm.params
    cov = lm.covariance()
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    rate = 2 * math.pi * sc.width
    kappa0, kappa_ex = p[1] * rate, p[2] * rate
    if not (kappa0 > 0 and kappa_ex >= 0):
        raise FitError(f"fit converged to unphysical rates (κ0={kappa0:.4g}, κex={kappa_ex:.4g})")
    b = float(p[3]) if free_beta else beta
    if free_beta and not 0.0 <= b <= 1.0:
        warnings.append(f"fitted beta {b:.4g} lies outside [0, 1]")
    r = kappa_ex / kappa0
    rms = float(np.sqrt(np.mean(lm.residuals[:n_eta] ** 2)))
    return FitResult(
        nu0_hz=sc.center + p[0] * sc.width,
        nu0_err=float(err[0] * sc.width),
        kappa0=float(kappa0),
        kappa0_err=float(err[1] * rate),
        kappa_ex=float(kappa_ex),
        kappa_ex_err=float(err[2] * rate),
        beta_hat=b,
        beta_err=float(err[3]) if free_beta else 0.0,
        residual_rms=rms,
        regime=RegimeLabel(cavity.classify_ratio(r, tol_r), r),
        iterations=lm.iterations,
        converged_by=lm.converged_by,
        warnings=tuple(warnings),
    )


def fit_transmittance(
    freq: ArrayLike,
    eta: ArrayLike,
    init: tuple[float, float, float] | None = None,
    *,
    beta: float = 1.0,
    free_beta: bool = False,
    tol_r: float = cavity.DEFAULT_TOL_R,
    max_iter: int = 200,
) -> FitResult:
    """
    Fit the single-mode transmittance model to (frequency [Hz], η) data.

    Parameters
    ----------
    freq, eta : array_like
        Laser frequency and normalized transmittance, at least 8 points.
    init : (nu0_hz, fwhm_hz, ratio), optional
        Initial guess; by default derived from the data (undercoupled branch).
    beta : float
        Mode-match factor, held fixed unless ``free_beta``.
    free_beta : bool
        Fit β as well. Transmittance alone only constrains centre, width and
        depth, so β is then weakly identifiable (a warning is attached).

    Returns
    -------
    FitResult
        Undercoupled representative; for β = 1 the κ0 <-> κ_ex twin is
        attached as ``degenerate_twin``.
    """
    f, e = _validate(freq, eta)
    _check_signal(e)
    center, fwhm, r = init if init is not None else initial_guess(f, e)
    sc = _Scaling(center, fwhm)
    x = sc.to_x(f)
    p0 = [0.0, 1.0 / (1.0 + r), r / (1.0 + r)] + ([beta] if free_beta else [])

    def res(p):
        return _eta_and_jac(x, p, free_beta, beta)[0] - e

    def jac(p):
        return _eta_and_jac(x, p, free_beta, beta)[1]

    lm = levenberg_marquardt(res, jac, np.array(p0), max_iter=max_iter)
    warnings = ["beta is weakly identifiable from transmittance alone"] if free_beta else []
    result = _assemble(lm, sc, free_beta, beta, f.size, warnings, tol_r)
    if not free_beta and beta == 1.0:
        if result.kappa_ex > result.kappa0:
            result = result.swapped()
        result = replace(result, degenerate_twin=result.swapped())
    return result


def fit_joint(
    freq: ArrayLike,
    eta: ArrayLike,
    phase: ArrayLike,
    *,
    phase_weight: float = DEFAULT_PHASE_WEIGHT,
    phase_mask: ArrayLike | None = None,
    beta: float = 1.0,
    free_beta: bool = False,
    tol_r: float = cavity.DEFAULT_TOL_R,
    max_iter: int = 200,
) -> FitResult:
    """
    Joint least squares on transmittance and unwrapped phase.

    The residual vector is [η_model - η, w·(φ_model - φ)] with w =
    ``phase_weight``. The net winding of the supplied phase picks the branch
    (0 turns: numerator of t stays in the right half-plane; 1 turn: it
    encircles the origin), so no twin is reported.

    Raises
    ------
    InconsistencyError
        If the winding is neither 0 nor 1, or the converged parameters lie
        on the other branch than the winding demands.
    """
    f, e = _validate(freq, eta)
    ph = np.asarray(phase, dtype=float)
    if ph.shape != f.shape or not np.all(np.isfinite(ph)):
        raise DomainError("phase must be finite and aligned with the frequencies")
    if phase_weight < 0:
        raise DomainError("phase_weight must be non-negative")
    mask = np.ones(f.size, bool) if phase_mask is None else np.asarray(phase_mask, bool)
    _check_signal(e)
    w = cavity.winding_number(ph)
    if w not in (0, 1):
        raise InconsistencyError(f"phase winds {w} times; expected 0 or 1")
    over = w == 1

    center, fwhm, r = initial_guess(f, e, overcoupled=over)
    if not free_beta and beta != 1.0 and over:
        # with β < 1 the phase only winds when β·κ_ex > (κ0 + κ_ex)/2
        r = max(r, 1.0 / max(2.0 * beta - 1.0, 1e-3) * 1.5)
    sc = _Scaling(center, fwhm)
    x = sc.to_x(f)
    p0 = np.array([0.0, 1.0 / (1.0 + r), r / (1.0 + r)] + ([beta] if free_beta else []))

    # align the data's 2π offset with the model branch
    model0, _ = _phase_and_jac(x, p0, free_beta, beta, over)
    offset = 2 * np.pi * np.rint(np.mean(ph[mask] - model0[mask]) / (2 * np.pi)) if mask.any() else 0.0
    ph_aligned = ph - offset
    wmask = phase_weight * mask

    def res(p):
        eta_m, _ = _eta_and_jac(x, p, free_beta, beta)
        ph_m, _ = _phase_and_jac(x, p, free_beta, beta, over)
        return np.concatenate([eta_m - e, wmask * (ph_m - ph_aligned)])

    def jac(p):
        _, je = _eta_and_jac(x, p, free_beta, beta)
        _, jp = _phase_and_jac(x, p, free_beta, beta, over)
        return np.vstack([je, wmask[:, None] * jp])

    lm = levenberg_marquardt(res, jac, p0, max_iter=max_iter)
    try:
        result = _assemble(lm, sc, free_beta, beta, f.size, [], tol_r)
    except FitError as exc:
        # the unconstrained optimum left the physical region: no positive
        # rates reproduce both the dip and the winding
        raise InconsistencyError(f"phase winding {w} and transmittance disagree; {exc}") from exc
    c = 0.5 * (result.kappa0 + result.kappa_ex) - result.beta_hat * result.kappa_ex
    if over != (c < 0):
        raise InconsistencyError(
            f"phase winding {w} contradicts the fitted coupling ratio {result.ratio:.4g} "
            f"(beta {result.beta_hat:.3g})"
        )
    return result


def q_from_linewidth(nu0: float, fwhm: float) -> float:
    """Loaded quality factor ν0/Δν."""
    if not (nu0 > 0 and fwhm > 0) or not (math.isfinite(nu0) and math.isfinite(fwhm)):
        raise DomainError("nu0 and fwhm must be positive and finite")
    return nu0 / fwhm
