"""Command-line front end.

Exit codes: 0 success, 1 domain error (the computation cannot be carried
out for these inputs), 2 usage error (bad flags, malformed expression),
3 scenario expectation failure.  With ``--json-errors`` the error is also
written to standard error as one JSON object.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .characteristics import (BranchSelectionError, NoRootsError, enumerate_branches,
                              select_physical_branch, write_branches_csv)
from .charges import WindowError, drift_report, write_report_csv
from .deformation_map import (MappedProfile, deformed_solution, map_u_from_w, map_w_from_u,
                              write_field_csv)
from .io import csv_text, dumps, fmt, write_csv
from .model import DeformedSystem, FSpec, GridSpec
from .numerics import QuadratureError
from .profile_dsl import EvaluationError, ProfileSyntaxError, parse
from .shock_finder import (ComplexProfileError, complex_shock_roots, deformed_shock_time,
                           find_shock_events)

log = logging.getLogger("ptshock")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_SCENARIO = 0, 1, 2, 3

# options that are not part of a reproducible configuration
_NOT_CONFIG = {"command", "config", "show_config", "json_errors", "func", "verbose"}


class UsageError(Exception):
    """Bad command-line input; maps to exit code 2."""


class DomainError(Exception):
    """Valid input for which the requested computation is undefined; exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        where = self.prog.partition(" ")[2]
        raise UsageError(f"{where}: {message}" if where else message)


# ---------------------------------------------------------------------------
# argument helpers


def _number(text: str) -> float:
    """Float or exact fraction such as ``3/2``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _number_list(text: str) -> list:
    return [_number(v) for v in str(text).split(",") if v.strip()]


def _f_spec(text: str) -> FSpec:
    try:
        return FSpec.coerce(str(text))
    except ProfileSyntaxError as exc:
        raise UsageError(f"f(w): {exc}")


def _profile(text: str, what: str):
    try:
        return parse(text)
    except ProfileSyntaxError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def _window(args) -> GridSpec:
    lo, hi = args.window
    if not hi > lo:
        raise UsageError("--window needs LO < HI")
    if args.points < 5:
        raise UsageError("--points must be at least 5")
    return GridSpec(lo, hi, args.points)


def _system(args) -> DeformedSystem:
    try:
        return DeformedSystem(args.eps, _f_spec(args.f), args.phase_m, args.phase_sign)
    except ValueError as exc:
        raise UsageError(str(exc))


def _emit(text: str, dest):
    """Write to a file, or to standard output for ``None`` or ``-``."""
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(dest).parent.mkdir(parents=True, exist_ok=True)
        Path(dest).write_text(text)


def _add_profile(p, *, deformed=True, undeformed=True):
    grp = p.add_mutually_exclusive_group()
    if deformed:
        grp.add_argument("--u0", help="initial profile of the deformed equation, in x")
    if undeformed:
        grp.add_argument("--w0", help="initial profile of the undeformed equation, in x")


def _add_system(p):
    p.add_argument("--eps", type=_number, default=1.0,
                   help="deformation parameter epsilon (fractions allowed, e.g. 3/2)")
    p.add_argument("--f", default="1",
                   help="nonlinearity: a power n for f(w)=w^n, or an expression in w")
    p.add_argument("--phase-m", type=int, default=0, help="reality phase integer m")
    p.add_argument("--phase-sign", type=int, default=1, choices=(1, -1),
                   help="reality phase sign")


def _add_window(p, lo=-10.0, hi=10.0, points=4001):
    p.add_argument("--window", type=_number, nargs=2, default=[lo, hi], metavar=("LO", "HI"),
                   help="x interval")
    p.add_argument("--points", type=int, default=points, help="grid points on the window")


# ---------------------------------------------------------------------------
# subcommands


def _initial_profile(args):
    """``(w0, system or None, u0 or None)`` from --u0/--w0."""
    if getattr(args, "u0", None):
        u0 = _profile(args.u0, "--u0")
        system = _system(args)
        return MappedProfile(u0, system), system, u0
    if getattr(args, "w0", None):
        return _profile(args.w0, "--w0"), None, None
    raise UsageError("one of --u0 or --w0 is required")


def cmd_shock_times(args) -> int:
    grid = _window(args)
    if args.u0:
        u0 = _profile(args.u0, "--u0")
        system = _system(args)
        try:
            events = deformed_shock_time(u0, system, grid,
                                         apply_reality_phase=args.apply_phase)
        except ComplexProfileError as exc:
            raise DomainError(str(exc))
    elif args.w0:
        w0 = _profile(args.w0, "--w0")
        try:
            events = find_shock_events(w0, _f_spec(args.f), grid)
        except ComplexProfileError as exc:
            raise DomainError(f"{exc}; use complex-roots for complex profiles")
    else:
        raise UsageError("one of --u0 or --w0 is required")
    if args.json:
        _emit(dumps([e.to_dict() for e in events]) + "\n", args.json)
    if args.csv:
        write_csv(args.csv, ["index", "t_s", "x_s", "re_x0", "im_x0"],
                  [(k + 1, e.t_s, e.x_s, complex(e.x0_seed).real, complex(e.x0_seed).imag)
                   for k, e in enumerate(events)])
    if args.json != "-":
        sys.stdout.write(event_table(args.eps, events))
    return EXIT_OK


def event_table(eps: float, events) -> str:
    """One row ``eps | t_s1 | t_s2 ... | x_s1 | x_s2 ...``."""
    k = len(events)
    head = ["eps"] + [f"t_s{j + 1}" for j in range(k)] + [f"x_s{j + 1}" for j in range(k)]
    row = [f"{eps:g}"] + [f"{e.t_s:.6g}" for e in events] + [f"{e.x_s:.6g}" for e in events]
    width = [max(len(a), len(b)) for a, b in zip(head, row)]
    line = " | ".join(h.rjust(w) for h, w in zip(head, width))
    vals = " | ".join(v.rjust(w) for v, w in zip(row, width))
    rule = "-" * len(line)
    return f"{line}\n{rule}\n{vals}\n"


def cmd_evolve(args) -> int:
    w0, system, u0 = _initial_profile(args)
    f = system.f if system else _f_spec(args.f)
    grid = _window(args)
    out = Path(args.out)
    lines = []
    for t in args.t:
        try:
            bs = enumerate_branches(w0, f, grid, t)
        except NoRootsError as exc:
            raise DomainError(str(exc))
        write_branches_csv(out / f"branches_t{t:g}.csv", bs)
        counts = bs.counts()
        try:
            sel = select_physical_branch(bs)
            jump = "none" if sel.x_jump is None else fmt(sel.x_jump)
            single = sel.x_jump is None
        except BranchSelectionError:
            jump, single = "undetermined", False
        lines.append(f"t={t:g} branches={int(counts.min())}..{int(counts.max())} jump={jump}")
        if system is not None and system.epsilon != 1 and single:
            uf = deformed_solution(u0, system, t, grid.x)
            write_field_csv(out / f"field_t{t:g}.csv", grid.x, uf.u, uf.u_x)
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_transform(args) -> int:
    if args.profile is None:
        raise UsageError("--profile is required")
    prof = _profile(args.profile, "--profile")
    grid = _window(args)
    x = grid.x
    try:
        system = DeformedSystem(args.eps, FSpec(args.n))
    except ValueError as exc:
        raise UsageError(str(exc))
    try:
        if args.direction == "u2w":
            mf = map_w_from_u(prof, system, x)
            text = csv_text(["x", "re_w", "im_w", "ambiguous"],
                            zip(x, mf.w.real, mf.w.imag, mf.ambiguous.astype(int)))
        else:
            if args.n != 1:
                raise UsageError("w2u is implemented for f(w) = w only (--n 1)")
            uf = map_u_from_w(prof, args.eps, x, args.bc, anchor=args.anchor, tol=args.tol)
            text = csv_text(["x", "re_u", "im_u", "re_ux", "im_ux"],
                            zip(x, uf.u.real, uf.u.imag, uf.u_x.real, uf.u_x.imag))
    except (EvaluationError, ZeroDivisionError) as exc:
        raise DomainError(f"profile cannot be mapped: {exc}")
    _emit(text, args.out)
    return EXIT_OK


def cmd_charges(args) -> int:
    w0, system, u0 = _initial_profile(args)
    lo, hi = args.window
    try:
        if system is not None:
            rep = drift_report(u0, args.kappa, args.t, system=system, window=(lo, hi),
                               tol=args.tol)
        else:
            rep = drift_report(w0, args.kappa, args.t, f=_f_spec(args.f), window=(lo, hi),
                               tol=args.tol)
    except WindowError as exc:
        raise DomainError(str(exc))
    except ValueError as exc:
        raise DomainError(str(exc))
    if args.json:
        _emit(dumps(rep) + "\n", args.json)
    if args.csv:
        write_report_csv(args.csv, rep)
    if args.json != "-":
        rows = [(t, k, complex(v).real, complex(v).imag, rep.drift[k], flag)
                for t, k, v, flag in rep.entries]
        sys.stdout.write(csv_text(["t", "kappa", "re_I", "im_I", "drift", "flag"], rows))
    return EXIT_OK


def cmd_complex_roots(args) -> int:
    if not args.w0:
        raise UsageError("--w0 is required")
    w0 = _profile(args.w0, "--w0")
    res = complex_shock_roots(w0, _f_spec(args.f), tuple(args.box), args.n,
                              window=_window(args))
    if res.degenerate:
        sys.stderr.write(f"{res.note}: events from the real-axis search\n")
        rows = [(e.t_s, e.x_s, complex(e.x0_seed).real, complex(e.x0_seed).imag, 0.0)
                for e in res.events]
        header = ["t_s", "x_s", "re_z", "im_z", "residual"]
    else:
        rows = [(r.t_s, r.x_s, r.z.real, r.z.imag, r.residual) for r in res.roots]
        header = ["t_s", "x_s", "re_z", "im_z", "residual"]
    if args.json:
        payload = {"degenerate": res.degenerate, "note": res.note,
                   "roots": [r.to_dict() for r in res.roots],
                   "events": [e.to_dict() for e in res.events]}
        _emit(dumps(payload) + "\n", args.json)
    if args.json != "-":
        sys.stdout.write(csv_text(header, rows))
    return EXIT_OK


def cmd_scenario(args) -> int:
    from .scenarios import UnknownScenarioError, run_all, run_scenario

    overrides = {"classify": not args.no_classify, "charges": not args.no_charges,
                 "fields": not args.no_fields}
    if args.out:
        overrides["out_dir"] = args.out
    elif args.plot:
        raise UsageError("--plot needs --out")
    try:
        if args.name == "all":
            reports = run_all(overrides, workers=args.jobs)
        else:
            reports = [run_scenario(args.name, overrides)]
    except UnknownScenarioError as exc:
        raise UsageError(f"{exc}")
    failed = 0
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        sys.stdout.write(f"{status} {rep.name}: {sum(c.passed for c in rep.checks)}/"
                         f"{len(rep.checks)} checks\n")
        for c in rep.checks:
            if args.verbose_checks or not c.passed:
                mark = "ok  " if c.passed else "FAIL"
                sys.stdout.write(f"  {mark} {c.name}: computed={_show(c.computed)} "
                                 f"expected={_show(c.expected)} {c.mode} "
                                 f"tol={_show(c.tolerance)} [{c.source}]\n")
        failed += not rep.passed
        if args.plot:
            from .plotting import plot_scenario

            for p in plot_scenario(Path(args.out) / rep.name):
                log.info("wrote %s", p)
    if args.json:
        _emit(dumps(reports if args.name == "all" else reports[0]) + "\n", args.json)
    return EXIT_SCENARIO if failed else EXIT_OK


def _show(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


# ---------------------------------------------------------------------------
# parser and config


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptshock",
                description="Shock and peak formation in Burgers-type equations and their "
                            "PT-symmetric deformations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--json-errors", action="store_true",
                   help="also report errors as a JSON object on standard error")
    p.add_argument("--config", help="INI file with defaults ([ptshock] or [<command>] sections)")
    p.add_argument("--show-config", action="store_true",
                   help="print the resolved settings of the command and exit")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    # the same switches are accepted after the command name
    common = _Parser(add_help=False)
    common.add_argument("--json-errors", action="store_true", default=argparse.SUPPRESS,
                        help=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--show-config", action="store_true", default=argparse.SUPPRESS,
                        help=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS,
                        help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    _sub_add = sub.add_parser

    def add_parser(name, **kw):
        return _sub_add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("shock-times", help="shock/peak times and positions of a real profile")
    _add_profile(s)
    _add_system(s)
    _add_window(s)
    s.add_argument("--apply-phase", action="store_true",
                   help="multiply u0 by the reality phase before computing times")
    s.add_argument("--json", help="write events as JSON to a file ('-' for stdout only)")
    s.add_argument("--csv", help="write events as CSV to a file")
    s.set_defaults(func=cmd_shock_times)

    s = sub.add_parser("evolve", help="branches of the characteristic solution at given times")
    _add_profile(s)
    _add_system(s)
    _add_window(s, -5.0, 5.0, 1001)
    s.add_argument("--t", type=_number_list, required=False, default=[0.1],
                   help="comma-separated times")
    s.add_argument("--out", default="evolve_out", help="output directory")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("transform", help="map a profile between the two equations")
    s.add_argument("--direction", choices=("u2w", "w2u"), default="u2w")
    s.add_argument("--profile", help="profile to map, in x")
    s.add_argument("--eps", type=_number, default=3.0)
    s.add_argument("--n", type=int, default=1, help="power n of f(w) = w^n")
    s.add_argument("--bc", type=complex, default=0j,
                   help="value of u at the anchored end (w2u)")
    s.add_argument("--anchor", choices=("left", "right"), default="left",
                   help="end where u is prescribed (w2u)")
    s.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance (w2u)")
    _add_window(s, -5.0, 5.0, 1001)
    s.add_argument("--out", help="CSV file (default: standard output)")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("charges", help="conserved charges and their drift in time")
    _add_profile(s)
    _add_system(s)
    s.add_argument("--window", type=_number, nargs=2, default=[-10.0, 10.0],
                   metavar=("LO", "HI"), help="x interval of the core quadrature")
    s.add_argument("--kappa", type=_number_list, default=[1.0, 2.0],
                   help="comma-separated exponents")
    s.add_argument("--t", type=_number_list, default=[0.05, 0.1, 0.2],
                   help="comma-separated times")
    s.add_argument("--tol", type=float, default=1e-12, help="quadrature tolerance")
    s.add_argument("--json", help="write the report as JSON ('-' for stdout only)")
    s.add_argument("--csv", help="write the report as CSV")
    s.set_defaults(func=cmd_charges)

    s = sub.add_parser("complex-roots", help="complex shock conditions of a complex profile")
    _add_profile(s, deformed=False)
    s.add_argument("--f", default="1", help="nonlinearity (power n or expression in w)")
    s.add_argument("--box", type=_number, nargs=4, default=[-3.0, 3.0, -3.0, 3.0],
                   metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"), help="seed box")
    s.add_argument("--n", type=int, default=41, help="seed lattice size per side")
    _add_window(s)
    s.add_argument("--json", help="write roots as JSON ('-' for stdout only)")
    s.set_defaults(func=cmd_complex_roots)

    s = sub.add_parser("scenario", help="run a named case study, or 'all'")
    s.add_argument("name", help="scenario name or 'all'")
    s.add_argument("--out", help="directory for CSV/JSON output")
    s.add_argument("--plot", action="store_true", help="render PNG figures next to the CSVs")
    s.add_argument("--jobs", type=int, default=1, help="parallel processes for 'all'")
    s.add_argument("--no-classify", action="store_true", help="skip catastrophe classification")
    s.add_argument("--no-charges", action="store_true", help="skip charge drift checks")
    s.add_argument("--no-fields", action="store_true", help="skip field output")
    s.add_argument("--verbose-checks", action="store_true", help="list every check")
    s.add_argument("--json", help="write the report(s) as JSON ('-' for stdout)")
    s.set_defaults(func=cmd_scenario)
    return p


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(command)
    return None


def _apply_config(parser, args, argv):
    """Re-parse with config-file values as defaults so explicit flags win."""
    cfg = configparser.ConfigParser()
    try:
        with open(args.config) as fh:
            cfg.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    except configparser.Error as exc:
        raise UsageError(f"malformed config file: {exc}")
    sub = _subparser(parser, args.command)
    values = {}
    for section in ("ptshock", args.command):
        if cfg.has_section(section):
            values.update(cfg.items(section))
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in _NOT_CONFIG:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        act = known[dest]
        if isinstance(act, (argparse._StoreTrueAction,)):
            defaults[dest] = cfg.BOOLEAN_STATES.get(raw.strip().lower())
            if defaults[dest] is None:
                raise UsageError(f"config key {key!r} needs a boolean")
        elif act.nargs in (2, 4):
            parts = raw.replace(",", " ").split()
            defaults[dest] = [act.type(v) if act.type else v for v in parts]
        else:
            try:
                defaults[dest] = act.type(raw) if act.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def show_config(args) -> str:
    cp = configparser.ConfigParser()
    cp.add_section(args.command)
    for key, val in sorted(vars(args).items()):
        if key in _NOT_CONFIG or val is None:
            continue
        if isinstance(val, list):
            sep = "," if key in ("t", "kappa") else " "
            val = sep.join(fmt(v) for v in val)
        elif isinstance(val, float):
            val = fmt(val)
        cp.set(args.command, key.replace("_", "-"), str(val))
    from io import StringIO

    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


def _report_error(args_json: bool, code: int, kind: str, exc: Exception):
    sys.stderr.write(f"ptshock: {kind}: {exc}\n")
    if args_json:
        payload = {"error": kind, "message": str(exc), "exit_code": code}
        if isinstance(exc.__cause__, ProfileSyntaxError):
            payload["offset"] = exc.__cause__.offset
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


_EXPRESSION_OPTIONS = ("--u0", "--w0", "--profile", "--f")


def _attach_expressions(argv):
    """Join expression options with their value, so ``--w0 -x`` parses."""
    out = []
    k = 0
    while k < len(argv):
        if argv[k] in _EXPRESSION_OPTIONS and k + 1 < len(argv) and argv[k + 1].startswith("-"):
            out.append(f"{argv[k]}={argv[k + 1]}")
            k += 2
        else:
            out.append(argv[k])
            k += 1
    return out


def main(argv=None) -> int:
    argv = _attach_expressions(list(sys.argv[1:] if argv is None else argv))
    json_errors = "--json-errors" in argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required; see --help")
        if args.config:
            args = _apply_config(parser, args, argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        if args.show_config:
            sys.stdout.write(show_config(args))
            return EXIT_OK
        return args.func(args)
    except UsageError as exc:
        return _report_error(json_errors, EXIT_USAGE, "usage", exc)
    except (DomainError, EvaluationError, ComplexProfileError, WindowError, NoRootsError,
            BranchSelectionError, QuadratureError) as exc:
        return _report_error(json_errors, EXIT_DOMAIN, "domain", exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
