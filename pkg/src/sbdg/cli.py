"""Command-line front end; every subcommand writes CSV."""
from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import spectral
from .basis import eval_basis
from .charpoly import char_poly_exact
from .operators import SbBoundarySpec, assemble_periodic, assemble_shifted
from .eigen import EigenConvergenceError
from .solver import (
    BLOW_UP,
    BlowUpError,
    RunConfig,
    SingularBlockError,
    build_system,
    convergence_study,
    run_to_steady,
)

SCHEMAS = {
    "eigen": ("re", "im"),
    "charpoly": ("power", "coefficient", "value"),
    "cfl-max": ("p", "cfl_max"),
    "stability-map": ("d", "cfl", "rho", "stable"),
    "amplify": ("cfl", "rho"),
    "converge": ("ne", "l2_error", "eoa"),
    "simulate": ("cell", "x", "u_h", "u_exact", "verdict"),
}

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.10e" % value
    return str(value)


def emit_csv(records: Iterable[Sequence], schema: Sequence[str], destination=None) -> None:
    """Header plus one row per record; floats as %.10e, LF line endings.

    ``destination`` is a path, a text stream, or None for stdout.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema)
    for rec in records:
        if len(rec) != len(schema):
            raise ValueError(f"record {rec!r} does not match schema {schema}")
        writer.writerow([_fmt(v) for v in rec])
    text = buf.getvalue()
    if destination is None:
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", newline="") as fh:
            fh.write(text)


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _meshes(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mesh list: {text!r}")
    if not out or any(m < 2 for m in out):
        raise argparse.ArgumentTypeError(f"bad mesh list: {text!r}")
    return out


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"expected an integer >= 2, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbdg", description="Shifted-boundary DG stability and convergence tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p123 = dict(type=int, choices=(1, 2, 3), required=True)
    integ = dict(choices=spectral.INTEGRATORS, required=True)

    c = sub.add_parser("eigen", help="spectrum of M^-1 K (dx = 1)")
    c.add_argument("--p", **p123)
    c.add_argument("--cells", type=_positive_int, required=True)
    c.add_argument("--d", type=float, default=0.0)
    c.add_argument("--periodic", action="store_true")
    c.add_argument("--out")

    c = sub.add_parser("charpoly", help="exact characteristic polynomial")
    c.add_argument("--p", type=int, choices=(1, 2), required=True)
    c.add_argument("--cells", type=int, choices=(2, 3), required=True)
    c.add_argument("--d", type=_rational, required=True)
    c.add_argument("--out")

    c = sub.add_parser("cfl-max", help="periodic CFL limit of RK(p+1)")
    c.add_argument("--p", **p123)
    c.add_argument("--out")

    c = sub.add_parser("stability-map", help="amplification over a (d, CFL) grid")
    c.add_argument("--p", **p123)
    c.add_argument("--integrator", **integ)
    c.add_argument("--d-min", type=float, default=-1.0)
    c.add_argument("--d-max", type=float, default=1.0)
    c.add_argument("--cfl-max", type=float, default=1.0)
    c.add_argument("--grid", type=_positive_int, default=201)
    c.add_argument("--raw-dt", action="store_true")
    c.add_argument("--out")

    c = sub.add_parser("amplify", help="amplification against CFL at fixed d")
    c.add_argument("--p", **p123)
    c.add_argument("--integrator", **integ)
    c.add_argument("--d", type=float, required=True)
    c.add_argument("--cfl-max", type=float, default=1.0)
    c.add_argument("--samples", type=_positive_int, default=101)
    c.add_argument("--raw-dt", action="store_true")
    c.add_argument("--out")

    c = sub.add_parser("converge", help="steady-state error on a mesh sequence")
    c.add_argument("--p", **p123)
    c.add_argument("--d", type=float, default=0.0)
    c.add_argument("--cfl", type=float, default=1.0)
    c.add_argument("--integrator", **integ)
    c.add_argument("--meshes", type=_meshes, default=[20, 40, 80, 160, 320])
    c.add_argument("--raw-dt", action="store_true")
    c.add_argument("--out")

    c = sub.add_parser("simulate", help="single steady-state run, per-cell samples")
    c.add_argument("--p", **p123)
    c.add_argument("--d", type=float, default=0.0)
    c.add_argument("--cfl", type=float, default=1.0)
    c.add_argument("--cells", type=_positive_int, default=20)
    c.add_argument("--integrator", **integ)
    c.add_argument("--raw-dt", action="store_true")
    c.add_argument("--out")
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(list(argv))
    try:
        _validate(args)
    except ValueError as exc:
        raise UsageError(f"sbdg {args.command}: error: {exc}\n{parser.format_usage()}")
    return args


def _validate(args):
    if getattr(args, "d", None) is not None and abs(args.d) > 1:
        raise ValueError(f"--d must lie in [-1, 1], got {args.d}")
    if args.command == "stability-map":
        if not (-1 <= args.d_min < args.d_max <= 1):
            raise ValueError("need -1 <= --d-min < --d-max <= 1")
    if getattr(args, "cfl_max", 1.0) <= 0 or getattr(args, "cfl", 1.0) <= 0:
        raise ValueError("CFL values must be positive")
    if args.command == "converge":
        m = args.meshes
        if any(b != 2 * a for a, b in zip(m, m[1:])):
            raise ValueError("--meshes must double at each step")


def render_args(args: argparse.Namespace) -> list[str]:
    """Inverse of ``parse_args`` for every documented flag.

    Values are attached with '=' so negative numbers such as -2/7 are not
    mistaken for options.
    """
    out = [args.command]
    for key, value in vars(args).items():
        if key == "command" or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            out.append(flag)
        elif isinstance(value, list):
            out.append(f"{flag}={','.join(str(v) for v in value)}")
        elif isinstance(value, float):
            out.append(f"{flag}={value!r}")
        else:
            out.append(f"{flag}={value}")
    return out


def _cmd_eigen(args):
    if args.periodic:
        system = assemble_periodic(args.p, args.cells, 1.0)
    else:
        system = assemble_shifted(args.p, args.cells, 1.0, SbBoundarySpec(d=args.d))
    lam = spectral.eigenvalues(system).eigenvalues
    return [(float(z.real), float(z.imag)) for z in lam]


def _cmd_charpoly(args):
    cp = char_poly_exact(args.p, args.cells, args.d)
    deg = cp.degree
    return [(deg - k, str(c), float(c)) for k, c in enumerate(cp.coefficients)]


def _cmd_cfl_max(args):
    return [(args.p, spectral.periodic_cfl_max(args.p))]


def _cmd_stability_map(args):
    smap = spectral.stability_map(args.p, args.integrator, (args.d_min, args.d_max),
                                  (0.0, args.cfl_max), args.grid, raw_dt=args.raw_dt)
    return list(smap.records())


def _cmd_amplify(args):
    cfl = np.linspace(0.0, args.cfl_max, args.samples)
    return spectral.amplification_curve(args.p, args.integrator, args.d, cfl, raw_dt=args.raw_dt)


def _cmd_converge(args):
    template = RunConfig(args.p, args.meshes[0], args.d, args.cfl, args.integrator,
                         raw_dt=args.raw_dt)
    table = convergence_study(template, args.meshes)
    return [(r.n_elements, r.l2_error, r.eoa) for r in table.rows]


def _cmd_simulate(args):
    config = RunConfig(args.p, args.cells, args.d, args.cfl, args.integrator, raw_dt=args.raw_dt)
    system = build_system(config)
    result = run_to_steady(config, system)
    centers = system.edges[:-1] + 0.5 * system.dx
    modes = result.state.modes.reshape(system.n_elements, system.n_local)
    uh = modes @ eval_basis(system.p, 0.0)
    exact = config.case.u_exact(centers)
    rows = [(e, float(centers[e]), float(uh[e]), float(exact[e]), result.verdict)
            for e in range(system.n_elements)]
    return rows, result.verdict


_COMMANDS = {
    "eigen": _cmd_eigen,
    "charpoly": _cmd_charpoly,
    "cfl-max": _cmd_cfl_max,
    "stability-map": _cmd_stability_map,
    "amplify": _cmd_amplify,
    "converge": _cmd_converge,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand. Exit codes: 0 ok, 1 computational failure, 2 usage."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE
    status = EXIT_OK
    try:
        if args.command == "simulate":
            records, verdict = _cmd_simulate(args)
            status = EXIT_FAIL if verdict == BLOW_UP else EXIT_OK
        else:
            records = _COMMANDS[args.command](args)
        emit_csv(records, SCHEMAS[args.command], args.out)
    except BlowUpError as exc:
        sys.stderr.write(f"sbdg: {exc}\n")
        return EXIT_FAIL
    except (SingularBlockError, spectral.SingularAmplificationError, EigenConvergenceError,
            np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"sbdg: {exc}\n")
        return EXIT_FAIL
    except OSError as exc:
        sys.stderr.write(f"sbdg: cannot write output: {exc}\n")
        return EXIT_FAIL
    return status


def main() -> None:
    sys.exit(dispatch())
