"""Command-line frontend: ``nmrqc <simulate|check|registers|gate|fit|dataset>``.

Exit codes: 0 success, 1 input or validation error, 2 size/combination caps
or numerical failure. Errors go to stderr as one line,
``error: <code>: <message>``.
"""

from __future__ import annotations

import argparse
import contextlib
import sys as _sys
from pathlib import Path

import numpy as np

from .errors import InputError, NMRQCError
from .fit import FitSettings, ParameterSpec, fit_parameters, parse_parameter
from .gates import (
    cnot_matrix,
    compile_cnot,
    compile_toffoli,
    serialize_sequence,
    toffoli_matrix,
    verify,
)
from .hamiltonian import CouplingMode
from .registers import (
    DEFAULT_COMBINATION_CAP,
    RegisterCriteria,
    candidates_to_csv,
    find_chain_registers,
    find_toffoli_triples,
)
from .spectrum import (
    SpectrumTrace,
    exact_lines,
    exact_lines_pruned,
    first_order_report,
    render_lineshape,
)
from .spinsys import COMPOUND_II_DOCUMENT, get_isotope, parse_spin_system

DEFAULTS = dict(
    mode="isotropic",
    threshold=0.1,
    k=3,
    jmin=5.0,
    jcross=1.5,
    resolve=3.0,
    combination_cap=DEFAULT_COMBINATION_CAP,
    tolx=1e-4,
    tolf=1e-12,
    max_iter=5000,
    fwhm=0.5,
    seed=0,
    starts=1,
)


class _UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_system(path: str):
    return parse_spin_system(_read(path))


def _carriers(items, system) -> dict[str, float]:
    out = {iso.name: 0.0 for iso in system.isotopes()}
    for item in items or []:
        iso, sep, ppm = item.partition("=")
        if not sep:
            raise _UsageError(f"--carrier expects ISOTOPE=PPM, got {item!r}")
        try:
            out[get_isotope(iso).name] = float(ppm)
        except ValueError:
            raise _UsageError(f"bad carrier value {ppm!r}") from None
    return out


def _cmd_simulate(args, out):
    system = _load_system(args.file)
    carrier = _carriers(args.carrier, system)
    mode = CouplingMode.parse(args.mode)
    if args.prune is not None:
        lines = exact_lines_pruned(system, carrier, args.channel, args.prune, mode)
    else:
        lines = exact_lines(system, carrier, args.channel, mode)
    if args.lineshape:
        try:
            fwhm, lo, hi, pts = args.lineshape.split(",")
            trace = render_lineshape(lines, float(fwhm), float(lo), float(hi), int(pts))
        except ValueError:
            raise _UsageError("--lineshape expects fwhm,min,max,points") from None
        out.write(trace.to_csv())
    else:
        out.write(lines.to_csv())


def _cmd_check(args, out):
    system = _load_system(args.file)
    out.write(first_order_report(system, threshold=args.threshold).to_csv())


def _cmd_registers(args, out):
    system = _load_system(args.file)
    try:
        crit = RegisterCriteria(args.jmin, args.jcross, args.resolve, args.strict)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    if args.k == 3:
        cands = find_toffoli_triples(system, crit)
    else:
        cands = find_chain_registers(system, args.k, crit, args.combination_cap)
    out.write(candidates_to_csv(cands))


def _cmd_gate(args, out):
    system = _load_system(args.file)
    spins = args.spins.split("+")
    if args.gate == "cnot":
        if len(spins) != 2:
            raise _UsageError("cnot needs --spins control+target")
        seq = compile_cnot(system, *spins)
        ideal = cnot_matrix()
    else:
        if len(spins) != 3:
            raise _UsageError("toffoli needs --spins control+control+target")
        seq = compile_toffoli(system, *spins)
        ideal = toffoli_matrix()
    out.write(serialize_sequence(seq))
    if args.verify:
        report = verify(system, seq, ideal)
        out.write(f"# fidelity={report.fidelity:.15f}\n")
        out.write(f"# total_delay_s={report.total_delay_s!r}\n")


def _cmd_fit(args, out):
    system = _load_system(args.file)
    target = SpectrumTrace.from_csv(_read(args.target), args.fwhm)
    spec = ParameterSpec(tuple(parse_parameter(p, system) for p in args.free))
    settings = FitSettings(
        carrier_ppm=_carriers(args.carrier, system),
        channel=args.channel,
        fwhm_hz=args.fwhm,
        mode=CouplingMode.parse(args.mode),
        tol_x=args.tolx,
        tol_f=args.tolf,
        max_iterations=args.max_iter,
        starts=args.starts,
        seed=args.seed,
    )
    out.write(fit_parameters(system, spec, target, settings).report())


def _cmd_dataset(args, out):
    out.write(COMPOUND_II_DOCUMENT)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="nmrqc", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="exact spectrum as line list or trace CSV", formatter_class=fmt)
    s.add_argument("file")
    s.add_argument("--channel", required=True, help="observed isotope, e.g. 1H")
    s.add_argument("--mode", choices=["isotropic", "weakzz"], default=DEFAULTS["mode"])
    s.add_argument("--carrier", action="append", metavar="ISO=PPM", help="carrier per isotope (default 0 ppm)")
    s.add_argument("--lineshape", metavar="FWHM,MIN,MAX,POINTS", help="render a Lorentzian trace instead of lines")
    s.add_argument("--prune", type=float, metavar="JMIN", help="drop |J| < JMIN and simulate each component")
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("check", help="first-order validity report", formatter_class=fmt)
    s.add_argument("file")
    s.add_argument("--threshold", type=float, default=DEFAULTS["threshold"])
    s.set_defaults(func=_cmd_check)

    s = sub.add_parser("registers", help="screen for chain registers / Toffoli triples", formatter_class=fmt)
    s.add_argument("file")
    s.add_argument("--k", type=int, default=DEFAULTS["k"], help="register size")
    s.add_argument("--jmin", type=float, default=DEFAULTS["jmin"], help="chain couplings must reach this (Hz)")
    s.add_argument("--jcross", type=float, default=DEFAULTS["jcross"], help="cross couplings must not exceed this (Hz)")
    s.add_argument("--resolve", type=float, default=DEFAULTS["resolve"], help="min |dnu| / max chain J")
    s.add_argument("--strict", action="store_true", help="require the first chain coupling to exceed the second")
    s.add_argument("--combination-cap", type=int, default=DEFAULTS["combination_cap"])
    s.set_defaults(func=_cmd_registers)

    s = sub.add_parser("gate", help="compile a CNOT or Toffoli pulse sequence", formatter_class=fmt)
    s.add_argument("file")
    s.add_argument("--gate", choices=["cnot", "toffoli"], required=True)
    s.add_argument("--spins", required=True, help="'+'-joined labels, controls first")
    s.add_argument("--verify", action="store_true", help="append fidelity and total delay")
    s.set_defaults(func=_cmd_gate)

    s = sub.add_parser("fit", help="fit shifts/couplings to a target trace CSV", formatter_class=fmt)
    s.add_argument("file")
    s.add_argument("--target", required=True, help="trace CSV with frequency_hz,amplitude")
    s.add_argument("--free", nargs="+", required=True, metavar="PARAM",
                   help="kind:labels[=init[:lo:hi]], e.g. j:HA-HB=12 or shift:HA")
    s.add_argument("--channel", default="1H")
    s.add_argument("--mode", choices=["isotropic", "weakzz"], default=DEFAULTS["mode"])
    s.add_argument("--carrier", action="append", metavar="ISO=PPM")
    s.add_argument("--fwhm", type=float, default=DEFAULTS["fwhm"])
    s.add_argument("--tolx", type=float, default=DEFAULTS["tolx"])
    s.add_argument("--tolf", type=float, default=DEFAULTS["tolf"])
    s.add_argument("--max-iter", type=int, default=DEFAULTS["max_iter"])
    s.add_argument("--starts", type=int, default=DEFAULTS["starts"])
    s.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("dataset", help="print a bundled spin-system document", formatter_class=fmt)
    s.add_argument("name", choices=["compound-ii"])
    s.set_defaults(func=_cmd_dataset)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or _sys.stdout
    err = err or _sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(out):
            args = parser.parse_args(argv)
        args.func(args, out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except NMRQCError as exc:
        err.write(f"error: {exc.code.lstrip('_')}: {exc}\n")
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError, MemoryError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


def main(argv=None) -> None:
    raise SystemExit(run(argv))
