"""Command-line entry point and table output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__
from .channel import entry_coefficients
from .config import FORMATS, INTERFERENCE, KINEMATICS, MODES, ConfigError, RunConfig, load_config
from .oracle import run_suite
from .scan import (
    ScanError,
    ScanGrid,
    broaden,
    convergence_report,
    evaluate_map,
    frequency_spectrum,
    map_records,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4, 5

RECORD_COLUMNS = ["j", "theta_rad", "phi_rad", "omega_eV", "dI_coherent",
                  "dI_incoherent", "dI_pol1", "dI_pol2"]
SPECTRUM_COLUMNS = ["j", "omega_lo_eV", "omega_hi_eV", "omega_eV", "dI_coherent",
                    "dI_incoherent", "dI_pol1", "dI_pol2", "empty"]
VERIFY_COLUMNS = ["check", "max_abs_error", "max_rel_error", "tolerance", "passed"]


def fmt_number(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def _json_value(v):
    if v is None or isinstance(v, (str, bool)):
        return v
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    # round through the 12-digit text form so CSV and JSON carry the same values
    return float(f"{float(v):.12g}")


@contextmanager
def _open_dest(destination):
    if destination is None or destination == "-":
        yield sys.stdout
    elif isinstance(destination, io.IOBase) or hasattr(destination, "write"):
        yield destination
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _write_rows(columns, rows, fmt, destination, header=None):
    if not rows:
        raise ValueError("nothing to write: empty table")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    with _open_dest(destination) as fh:
        if fmt == "csv":
            if header:
                fh.write(f"# chanrad {__version__}\n")
                for k, v in header.items():
                    fh.write(f"# config: {k} = {v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([fmt_number(row[c]) for c in columns])
        else:
            if header:
                fh.write(json.dumps({"config": header}) + "\n")
            for row in rows:
                fh.write(json.dumps({c: _json_value(row[c]) for c in columns}) + "\n")


def record_rows(records, interference: str = "both"):
    rows = []
    for r in records:
        rows.append({
            "j": r.j, "theta_rad": r.theta, "phi_rad": r.phi, "omega_eV": r.omega,
            "dI_coherent": None if interference == "off" else r.intensity_coherent,
            "dI_incoherent": None if interference == "on" else r.intensity_incoherent,
            "dI_pol1": r.intensity_pol1, "dI_pol2": r.intensity_pol2,
        })
    return rows


def emit_table(records, format: str = "csv", destination=None, header=None,
               interference: str = "both"):
    """Write spectral records as CSV or JSON lines.

    Columns are fixed (see ``RECORD_COLUMNS``); the intensity column of the
    mode that was not requested is left empty. ``header`` is the resolved
    configuration, written as comment lines ahead of the table.
    """
    _write_rows(RECORD_COLUMNS, record_rows(records, interference), format, destination, header)


def spectrum_rows(spectrum, interference: str = "both"):
    rows = []
    lo, hi, mid = spectrum.edges[:-1], spectrum.edges[1:], spectrum.centers

    def block(j, coh, inc, pol, empty):
        for b in range(lo.size):
            rows.append({
                "j": j, "omega_lo_eV": lo[b], "omega_hi_eV": hi[b], "omega_eV": mid[b],
                "dI_coherent": None if interference == "off" else coh[b],
                "dI_incoherent": None if interference == "on" else inc[b],
                "dI_pol1": pol[0, b], "dI_pol2": pol[1, b], "empty": int(empty[b]),
            })

    for a, j in enumerate(spectrum.harmonics):
        block(j, spectrum.coherent[a], spectrum.incoherent[a], spectrum.pol[a], spectrum.empty[a])
    # j = 0 is the sum over harmonics
    block(0, spectrum.total("coherent"), spectrum.total("incoherent"),
          spectrum.pol.sum(axis=0), spectrum.empty.all(axis=0))
    return rows


def emit_spectrum(spectrum, format="csv", destination=None, header=None, interference="both"):
    _write_rows(SPECTRUM_COLUMNS, spectrum_rows(spectrum, interference), format, destination, header)


def emit_verify(reports, format="csv", destination=None, header=None):
    _write_rows(VERIFY_COLUMNS, [r.as_row() for r in reports], format, destination, header)


def run(cfg: RunConfig, workers: int = 1, log=sys.stderr) -> int:
    """Execute one configured run and return the process exit status."""
    header = cfg.echo()
    try:
        beam, model = cfg.beam(), cfg.channel()
        if cfg.mode == "verify":
            reports = run_suite(beam, model)
            emit_verify(reports, cfg.format, cfg.out, header)
            for r in reports:
                print(f"{'PASS' if r.passed else 'FAIL'} {r.check}: "
                      f"rel error {r.max_rel_error:.3e} (tol {r.tolerance:.1e})", file=log)
            return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY

        grid = ScanGrid.default(beam, model, cfg.theta_points, cfg.phi_points, cfg.j_max,
                                cfg.omega_bins)
        c = entry_coefficients(beam, model.basis(beam))
        data = evaluate_map(grid, beam, model, c, cfg.kinematics, "cross", workers)
        for arr in (data.coherent, data.incoherent):
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError("non-finite intensity in the angular map")
        if cfg.mode == "angular":
            emit_table(map_records(data, cfg.interference), cfg.format, cfg.out, header,
                       cfg.interference)
        else:
            spec = frequency_spectrum(grid, beam, model, c, cfg.interference, cfg.kinematics,
                                      data=data)
            if cfg.broaden_ev:
                spec = broaden(spec, cfg.broaden_ev)
            emit_spectrum(spec, cfg.format, cfg.out, header, cfg.interference)
        report = convergence_report(beam, model, j_max=cfg.j_max, kinematics=cfg.kinematics)
        print(report.summary(), file=log)
        return EXIT_OK
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=log)
        return EXIT_IO
    except (ScanError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=log)
        return EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="chanrad",
        description="Channeling radiation of positrons in a harmonic planar channel.",
    )
    p.add_argument("command", nargs="?", choices=MODES, help="what to compute")
    p.add_argument("--mode", choices=MODES, help="same as the positional command")
    p.add_argument("--config", metavar="PATH", help="flat key = value file")
    p.add_argument("--energy-gev", type=float)
    p.add_argument("--v0-ev", type=float, help="well depth [eV] (default 23)")
    p.add_argument("--dp-angstrom", type=float, help="plane spacing [A] (default 1.92)")
    p.add_argument("--theta-in-urad", type=float,
                   help="incidence angle [urad] (default: half the critical angle)")
    p.add_argument("--n-levels", type=int, help="cap on retained levels")
    p.add_argument("--j-max", type=int)
    p.add_argument("--theta-points", type=int)
    p.add_argument("--phi-points", type=int)
    p.add_argument("--omega-bins", type=int)
    p.add_argument("--interference", choices=INTERFERENCE)
    p.add_argument("--kinematics", choices=KINEMATICS)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--broaden-ev", type=float, metavar="SIGMA")
    p.add_argument("--workers", type=int, default=1, help="processes (never changes output)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command and args.mode and args.command != args.mode:
        print("error: command and --mode disagree", file=sys.stderr)
        return EXIT_CONFIG
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "workers")}
    flags["mode"] = args.command or args.mode
    try:
        cfg = load_config(flags, args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, max(1, args.workers))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
