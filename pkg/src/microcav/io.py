"""CSV readers and writers for spectra, scans, thermal tables and tuning curves."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import SpectrumFormatError
from .thermal import ThermalTable, TuningCurve

SPECTRUM_COLUMNS = ("frequency_hz", "eta", "phase_rad", "s0", "s1", "s2", "s3")


def fmt(v: object) -> str:
    """17 significant digits so every finite float round-trips exactly."""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".",
                               prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_columns(path: str | Path, columns: dict[str, Sequence[object]]) -> None:
    names = list(columns)
    n = {len(v) for v in columns.values()}
    if len(n) != 1:
        raise ValueError("columns must have equal length")
    atomic_write_text(path, csv_text(names, zip(*columns.values())))


def read_columns(
    path: str | Path, required: Sequence[str], optional: Sequence[str] = ()
) -> dict[str, NDArray[np.float64]]:
    """
    Read a numeric CSV with a mandatory header.

    Row numbers in errors are 1-based file line numbers (the header is row 1).
    Columns other than ``required`` and ``optional`` are ignored.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SpectrumFormatError(f"cannot read {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise SpectrumFormatError(f"{path} is not valid UTF-8") from exc
    if not rows:
        raise SpectrumFormatError("file is empty; a header line is required", row=1)
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise SpectrumFormatError(f"header lacks column(s) {', '.join(missing)}", row=1)
    wanted = [c for c in (*required, *optional) if c in header]
    idx = {c: header.index(c) for c in wanted}
    data: dict[str, list[float]] = {c: [] for c in wanted}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise SpectrumFormatError(
                f"expected {len(header)} fields, found {len(row)}", row=lineno
            )
        for c in wanted:
            cell = row[idx[c]].strip()
            try:
                value = float(cell)
            except ValueError:
                raise SpectrumFormatError(
                    f"column '{c}' holds non-numeric value '{cell}'", row=lineno
                ) from None
            if not math.isfinite(value):
                raise SpectrumFormatError(f"column '{c}' is not finite", row=lineno)
            data[c].append(value)
    if required and not data[required[0]]:
        raise SpectrumFormatError("file has a header but no data rows", row=2)
    return {c: np.asarray(v, dtype=float) for c, v in data.items()}


def _check_increasing(values: NDArray[np.float64], name: str) -> None:
    bad = np.flatnonzero(np.diff(values) <= 0)
    if bad.size:
        # +2: header is row 1, and the offending value is the second of the pair
        raise SpectrumFormatError(f"{name} is not strictly increasing", row=int(bad[0]) + 3)


@dataclass(frozen=True)
class SpectrumData:
    frequency_hz: NDArray[np.float64]
    eta: NDArray[np.float64]
    phase_rad: NDArray[np.float64] | None = None
    stokes: NDArray[np.float64] | None = None  # (N, 4)


def write_spectrum(path: str | Path, spec: SpectrumData) -> None:
    cols: dict[str, Sequence[object]] = {
        "frequency_hz": spec.frequency_hz,
        "eta": spec.eta,
    }
    if spec.phase_rad is not None:
        cols["phase_rad"] = spec.phase_rad
    if spec.stokes is not None:
        for k in range(4):
            cols[f"s{k}"] = spec.stokes[:, k]
    write_columns(path, cols)


def read_spectrum(path: str | Path) -> SpectrumData:
    cols = read_columns(path, ("frequency_hz", "eta"), ("phase_rad", "s0", "s1", "s2", "s3"))
    _check_increasing(cols["frequency_hz"], "frequency_hz")
    stokes = None
    if all(f"s{k}" in cols for k in range(4)):
        stokes = np.stack([cols[f"s{k}"] for k in range(4)], axis=1)
    return SpectrumData(cols["frequency_hz"], cols["eta"], cols.get("phase_rad"), stokes)


def write_thermal_table(path: str | Path, table: ThermalTable) -> None:
    cols: dict[str, Sequence[object]] = {
        "temperature_k": table.temperatures,
        "alpha_per_k": table.alpha,
    }
    if table.dn_rel is not None:
        cols["dn_rel_per_k"] = table.dn_rel
    write_columns(path, cols)


def read_thermal_table(path: str | Path) -> ThermalTable:
    cols = read_columns(path, ("temperature_k", "alpha_per_k"), ("dn_rel_per_k",))
    _check_increasing(cols["temperature_k"], "temperature_k")
    return ThermalTable(cols["temperature_k"], cols["alpha_per_k"], cols.get("dn_rel_per_k"))


def write_tuning_curve(path: str | Path, curve: TuningCurve) -> None:
    write_columns(
        path,
        {
            "temperature_k": curve.temperatures,
            "nu0_hz": curve.nu0,
            "shift_hz": curve.shift,
            "jitter_sigma_hz": np.full(curve.nu0.shape, float(curve.jitter_sigma)),
        },
    )


def read_tuning_curve(path: str | Path) -> TuningCurve:
    cols = read_columns(path, ("temperature_k", "nu0_hz"), ("jitter_sigma_hz",))
    _check_increasing(cols["temperature_k"], "temperature_k")
    sig = cols.get("jitter_sigma_hz")
    return TuningCurve(cols["temperature_k"], cols["nu0_hz"],
                       float(sig[0]) if sig is not None and sig.size else 0.0)
