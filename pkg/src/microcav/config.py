"""
Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Lists are comma separated;
a numeric range may be written ``start:stop:step`` (stop inclusive).
All frequencies are in Hz (loss rates are given as κ/2π), gaps in nm,
temperatures in K.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import cavity, gapscan
from .errors import ConfigError

PRESET_PACKAGE = "microcav.presets"


@dataclass(frozen=True)
class ScanConfig:
    # mode
    wavelength_nm: float | None = None
    nu0_hz: float | None = None
    intrinsic_linewidth_hz: float | None = None
    q0: float | None = None
    # coupling
    kappa_ex_hz: float | None = None
    kappa_ex_contact_hz: float | None = None
    critical_gap_nm: float | None = None
    decay_len_nm: float = field(default_factory=gapscan.default_decay_length)
    beta: float = 1.0
    parasitic_contact_hz: float = 0.0
    parasitic_decay_nm: float = 0.0
    tol_r: float = cavity.DEFAULT_TOL_R
    # sweep
    span_hz: float | None = None
    span_linewidths: float = 20.0
    points: int = 2001
    sweep_jitter_hz: float = 0.0
    eta_noise: float = 0.0
    stokes_noise: float = 0.0
    distances_nm: tuple[float, ...] = ()
    # thermal
    temperatures_k: tuple[float, ...] = ()
    t_ref_k: float | None = None
    laser_jitter_hz: float = 14e6
    thermal_table: str | None = None
    tuning_curve: str | None = None
    excursion_hz: float = 0.8e9
    turning_k: float = 20.0
    smooth_k: float | None = None
    # stability
    d_op_nm: float | None = None
    stability_jitter_nm: float = 13.0
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        _validate(self)

    # derived objects ------------------------------------------------------
    @property
    def resonance_hz(self) -> float:
        if self.nu0_hz is not None:
            return self.nu0_hz
        return cavity.C_VACUUM / (self.wavelength_nm * 1e-9)

    def mode(self) -> cavity.ResonatorMode:
        nu0 = self.resonance_hz
        if self.q0 is not None:
            return cavity.ResonatorMode.from_q(nu0, self.q0)
        return cavity.ResonatorMode(nu0, 2 * math.pi * self.intrinsic_linewidth_hz)

    def geometry(self) -> gapscan.CouplingGeometry:
        kw = dict(
            decay_len=self.decay_len_nm,
            kappa_par_contact=2 * math.pi * self.parasitic_contact_hz,
            par_decay_len=self.parasitic_decay_nm,
            beta=self.beta,
        )
        if self.critical_gap_nm is not None:
            return gapscan.CouplingGeometry.with_critical_gap(
                self.mode().kappa0, self.critical_gap_nm, **kw
            )
        if self.kappa_ex_contact_hz is None:
            raise ConfigError("no coupling geometry: set kappa_ex_contact_hz or critical_gap_nm")
        return gapscan.CouplingGeometry(2 * math.pi * self.kappa_ex_contact_hz, **kw)

    @property
    def has_geometry(self) -> bool:
        return self.kappa_ex_contact_hz is not None or self.critical_gap_nm is not None

    def replace(self, **changes) -> ScanConfig:
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ScanConfig)}
_INT_KEYS = {"points", "samples", "seed"}
_LIST_KEYS = {"distances_nm", "temperatures_k"}
_STR_KEYS = {"thermal_table", "tuning_curve"}


def _exactly_one(cfg: ScanConfig, a: str, b: str) -> None:
    va, vb = getattr(cfg, a), getattr(cfg, b)
    if (va is None) == (vb is None):
        raise ConfigError(f"set exactly one of '{a}' and '{b}'")


def _positive(cfg: ScanConfig, *names: str, allow_zero: bool = False) -> None:
    for n in names:
        v = getattr(cfg, n)
        if v is None:
            continue
        if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
            kind = "non-negative" if allow_zero else "positive"
            raise ConfigError(f"must be {kind}, got {v}", key=n)


def _validate(cfg: ScanConfig) -> None:
    _exactly_one(cfg, "wavelength_nm", "nu0_hz")
    _exactly_one(cfg, "intrinsic_linewidth_hz", "q0")
    if cfg.kappa_ex_contact_hz is not None and cfg.critical_gap_nm is not None:
        raise ConfigError("set at most one of 'kappa_ex_contact_hz' and 'critical_gap_nm'")
    _positive(cfg, "wavelength_nm", "nu0_hz", "intrinsic_linewidth_hz", "q0",
              "kappa_ex_contact_hz", "decay_len_nm", "span_hz", "span_linewidths",
              "tol_r", "excursion_hz", "smooth_k", "samples")
    _positive(cfg, "kappa_ex_hz", "critical_gap_nm", "parasitic_contact_hz",
              "parasitic_decay_nm", "sweep_jitter_hz", "eta_noise", "stokes_noise",
              "laser_jitter_hz", "stability_jitter_nm", "d_op_nm", allow_zero=True)
    if cfg.q0 is not None and cfg.q0 <= 1:
        raise ConfigError("q0 must exceed 1", key="q0")
    if not 0.0 <= cfg.beta <= 1.0:
        raise ConfigError(f"must lie in [0, 1], got {cfg.beta}", key="beta")
    if cfg.points < 8:
        raise ConfigError(f"must be >= 8, got {cfg.points}", key="points")
    if cfg.parasitic_contact_hz > 0 and cfg.parasitic_decay_nm <= 0:
        raise ConfigError("must be positive when parasitic_contact_hz > 0", key="parasitic_decay_nm")
    if any(d < 0 or not math.isfinite(d) for d in cfg.distances_nm):
        raise ConfigError("distances must be finite and >= 0", key="distances_nm")
    if any(t < 0 or not math.isfinite(t) for t in cfg.temperatures_k):
        raise ConfigError("temperatures must be finite and >= 0", key="temperatures_k")
    if list(cfg.temperatures_k) != sorted(set(cfg.temperatures_k)):
        raise ConfigError("temperatures must be strictly increasing", key="temperatures_k")


def _parse_number(text: str, key: str, line: int, integer: bool):
    try:
        if integer:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        value = float(text)
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"expected {kind}, got '{text}'", line=line, key=key) from None
    if not math.isfinite(value):
        raise ConfigError(f"value must be finite, got '{text}'", line=line, key=key)
    return value


def _parse_list(text: str, key: str, line: int) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("range must be start:stop:step", line=line, key=key)
        start, stop, step = (_parse_number(p.strip(), key, line, False) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError("range needs step > 0 and stop >= start", line=line, key=key)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(v) for v in np.round(start + step * np.arange(n), 12))
    return tuple(_parse_number(p.strip(), key, line, False) for p in text.split(","))


def parse_config(text: str, overrides: dict[str, object] | None = None) -> ScanConfig:
    """Parse config text. Either the whole file is accepted or ConfigError is raised."""
    values: dict[str, object] = {}
    key_lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{raw.strip()}'", line=lineno)
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _FIELDS:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, key=key)
        key_lines[key] = lineno
        if not value and key not in _LIST_KEYS:
            raise ConfigError("missing value", line=lineno, key=key)
        if key in _LIST_KEYS:
            values[key] = _parse_list(value, key, lineno)
        elif key in _STR_KEYS:
            values[key] = value
        else:
            values[key] = _parse_number(value, key, lineno, key in _INT_KEYS)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScanConfig(**values)
    except ConfigError as exc:
        if exc.line is None and exc.key in key_lines:
            msg = str(exc).split(": ", 1)[-1]
            raise ConfigError(msg, line=key_lines[exc.key], key=exc.key) from None
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, overrides: dict[str, object] | None = None) -> ScanConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, overrides)


def preset_names() -> list[str]:
    files = resources.files(PRESET_PACKAGE).iterdir()
    return sorted(p.name[:-4] for p in files if p.name.endswith(".cfg"))


def load_preset(name: str, overrides: dict[str, object] | None = None) -> ScanConfig:
    res = resources.files(PRESET_PACKAGE).joinpath(f"{name}.cfg")
    if not res.is_file():
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(preset_names())})")
    return parse_config(res.read_text(encoding="utf-8"), overrides)
