"""
Command-line front end.

Subcommands::

    microcav simulate  --config CFG | --preset NAME  --out DIR  [--seed N]
    microcav fit       SPECTRUM.csv [...]  [--joint-phase] [--free-beta] [--out ROWS.csv]
    microcav gapscan   --config CFG | --preset NAME  --out FILE.csv
    microcav thermal   --config CFG | --preset NAME  --out DIR
    microcav stability (--series S.csv --curve C.csv --d-op NM | --config/--preset)  [--out REPORT]
    microcav presets

Exit codes: 0 success, 1 error, 2 fit result ambiguous (transmittance-only
fit whose κ0 <-> κ_ex twin lies in the other coupling regime).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiments, fit, gapscan, io
from .errors import MicrocavError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_AMBIGUOUS = 2


def _add_common(p: argparse.ArgumentParser, *, needs_config: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=needs_config)
    src.add_argument("--config", help="key = value configuration file")
    src.add_argument("--preset", help="built-in configuration (see 'microcav presets')")
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int, help="override the config seed")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microcav",
        description="Waveguide-coupled microresonator simulation and fitting",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthetic transmittance/phase/Stokes spectra")
    _add_common(p)

    p = sub.add_parser("fit", help="fit spectrum file(s)")
    p.add_argument("inputs", nargs="+", help="spectrum CSV file(s)")
    p.add_argument("--joint-phase", action="store_true",
                   help="use the phase_rad column to pick the coupling branch")
    p.add_argument("--free-beta", action="store_true", help="fit the mode-match factor too")
    p.add_argument("--phase-weight", type=float, default=fit.DEFAULT_PHASE_WEIGHT)
    p.add_argument("--out", help="write one CSV row per spectrum here")
    p.add_argument("--seed", type=int, help="accepted for uniformity; fitting is deterministic")
    p.add_argument("--config", help="accepted for uniformity; unused")

    p = sub.add_parser("gapscan", help="eta_min and linewidth vs taper-sphere gap")
    _add_common(p)

    p = sub.add_parser("thermal", help="temperature tuning and dn_rel inversion")
    _add_common(p)

    p = sub.add_parser("stability", help="gap stability from eta_min fluctuations")
    _add_common(p, needs_config=False)
    p.add_argument("--series", help="CSV with an eta_min column (time series)")
    p.add_argument("--curve", help="CSV with distance_nm and eta_min columns")
    p.add_argument("--d-op", type=float, help="operating gap [nm]")

    sub.add_parser("presets", help="list built-in configurations")
    return parser


def _load(args) -> cfgmod.ScanConfig:
    overrides = {"seed": args.seed}
    if args.preset:
        return cfgmod.load_preset(args.preset, overrides)
    return cfgmod.load_config(args.config, overrides)


def _require_out(args) -> Path:
    if not args.out:
        raise MicrocavError(f"{args.command} needs --out")
    return Path(args.out)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _require_out(args)
    spectra = experiments.simulate_spectra(cfg)
    out.mkdir(parents=True, exist_ok=True)
    for s in spectra:
        path = out / f"{s.name}.csv"
        io.write_spectrum(path, s.data)
        print(
            f"{path}: ratio={s.coupling.kappa_ex / s.kappa0:.6g} regime={s.regime} "
            f"eta_min={np.min(s.data.eta):.6g} winding={s.winding}"
        )
    return EXIT_OK


def cmd_fit(args) -> int:
    rows = []
    code = EXIT_OK
    for path in args.inputs:
        spec = io.read_spectrum(path)
        if args.joint_phase:
            if spec.phase_rad is None:
                raise MicrocavError(f"{path}: --joint-phase needs a phase_rad column")
            result = fit.fit_joint(
                spec.frequency_hz, spec.eta, spec.phase_rad,
                phase_weight=args.phase_weight, free_beta=args.free_beta,
            )
        else:
            result = fit.fit_transmittance(spec.frequency_hz, spec.eta, free_beta=args.free_beta)
        if len(args.inputs) > 1:
            print(f"# {path}")
        sys.stdout.write(result.to_text())
        if result.ambiguous:
            code = EXIT_AMBIGUOUS
        rows.append({"file": str(path), **result.to_row()})
    if args.out:
        header = list(rows[0])
        io.atomic_write_text(args.out, io.csv_text(header, ([r[h] for h in header] for r in rows)))
    return code


def cmd_gapscan(args) -> int:
    cfg = _load(args)
    out = _require_out(args)
    res, d_star = experiments.run_gapscan(cfg)
    nu0 = cfg.resonance_hz
    io.write_columns(out, {
        "distance_nm": res.distances,
        "kappa_ex_hz": res.kappa_ex / (2 * np.pi),
        "kappa0_eff_hz": res.kappa0_eff / (2 * np.pi),
        "ratio": res.kappa_ex / res.kappa0_eff,
        "eta_min": res.eta_min,
        "linewidth_hz": res.linewidth_hz,
        "loaded_q": nu0 / res.linewidth_hz,
        "regime": [str(r) for r in res.regime],
    })
    i = int(np.argmin(res.eta_min))
    print(f"critical_gap_nm = {'none' if d_star is None else io.fmt(float(d_star))}")
    print(f"eta_min_minimum_at_nm = {io.fmt(float(res.distances[i]))}")
    return EXIT_OK


def cmd_thermal(args) -> int:
    cfg = _load(args)
    out = _require_out(args)
    run = experiments.run_thermal(cfg)
    out.mkdir(parents=True, exist_ok=True)
    io.write_tuning_curve(out / "tuning_curve.csv", run.curve)
    rec = run.recovered
    cols = {
        "temperature_k": rec.temperatures,
        "alpha_per_k": rec.alpha,
        "dn_rel_per_k": rec.dn_rel,
        "rel_dnu_dt_per_k": -(rec.alpha + rec.dn_rel),
    }
    if run.table.dn_rel is not None:
        cols["dn_rel_table_per_k"] = np.interp(rec.temperatures, run.table.temperatures,
                                               run.table.dn_rel)
    io.write_columns(out / "dn_rel.csv", cols)
    if cfg.thermal_table is None:
        io.write_thermal_table(out / "thermal_table_synthetic.csv", run.table)
    tp = run.turning
    print(f"excursion_hz = {io.fmt(run.curve.excursion)}")
    print(f"turning_points_k = {', '.join(io.fmt(t) for t in tp.temperatures) or 'none'}")
    if tp.ambiguous:
        print("warning = multiple sign changes; turning point ambiguous")
    return EXIT_OK


def cmd_stability(args) -> int:
    if args.series or args.curve:
        if not (args.series and args.curve and args.d_op is not None):
            raise MicrocavError("--series, --curve and --d-op must be given together")
        series = io.read_columns(args.series, ("eta_min",))["eta_min"]
        curve = io.read_columns(args.curve, ("distance_nm", "eta_min"))
        est = gapscan.stability_estimate(series, curve["distance_nm"], curve["eta_min"], args.d_op)
        d_op = args.d_op
    else:
        if not (args.config or args.preset):
            raise MicrocavError("give --series/--curve/--d-op or a --config/--preset")
        cfg = _load(args)
        est, _, _ = experiments.run_stability(cfg)
        d_op = cfg.d_op_nm
    report = (
        f"d_op_nm = {io.fmt(float(d_op))}\n"
        f"sigma_nm = {io.fmt(est.sigma_nm)}\n"
        f"three_sigma_nm = {io.fmt(est.three_sigma_nm)}\n"
        f"slope_per_nm = {io.fmt(est.slope_per_nm)}\n"
        f"n_samples = {est.n_samples}\n"
    )
    sys.stdout.write(report)
    if args.out:
        io.atomic_write_text(args.out, report)
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in cfgmod.preset_names():
        print(name)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "gapscan": cmd_gapscan,
    "thermal": cmd_thermal,
    "stability": cmd_stability,
    "presets": cmd_presets,
}


def main(argv: list[str] | None = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (MicrocavError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
