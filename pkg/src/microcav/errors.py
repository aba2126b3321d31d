"""Exception hierarchy shared by all microcav modules."""

from __future__ import annotations


class MicrocavError(Exception):
    """Base class for every error raised by microcav."""


class DomainError(MicrocavError, ValueError):
    """Input outside the domain of an operation (non-finite, negative, empty...)."""


class UnwrapError(MicrocavError):
    """Phase grid too coarse: an adjacent step is within epsilon of pi."""

    def __init__(self, message: str, index: int, interval: tuple[float, float]):
        super().__init__(message)
        self.index = index
        self.interval = interval


class UndefinedPhaseError(DomainError):
    """S2 = S3 = 0, so no phase can be assigned."""


class NoCriticalGapError(MicrocavError):
    """External coupling never reaches the intrinsic loss inside the search range."""


class IllConditionedError(MicrocavError):
    """Calibration slope is (near) zero at the operating point."""


class ExtrapolationError(DomainError):
    """Requested temperature lies outside the tabulated range."""


class FitError(MicrocavError):
    """Base class for fitting failures."""


class ConvergenceError(FitError):
    """Levenberg-Marquardt did not converge within the iteration budget."""

    def __init__(self, message: str, best_params, trace: list[float]):
        super().__init__(message)
        self.best_params = best_params
        self.trace = trace


class LowSignalError(FitError):
    """Resonance dip is not distinguishable from the noise floor."""


class InconsistencyError(FitError):
    """Phase winding contradicts the transmittance fit."""


class ConfigError(MicrocavError):
    """Configuration file failed to parse or validate."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


class SpectrumFormatError(MicrocavError):
    """Malformed CSV data file."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row
