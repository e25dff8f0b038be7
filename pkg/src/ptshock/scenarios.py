"""Named case studies with their expected values and a pass/fail report.

Each scenario builds its initial profile, runs the pipeline (mapping, shock
finding, evolution, inverse mapping, charges) and compares the results to
embedded expectations.  Every expectation records where the number comes
from:

``published``
    a value printed with the original case study, compared at a tolerance
    that matches its printed precision;
``closed form``
    an exact expression evaluated in double precision;
``derived``
    a self-consistency bound (conservation, agreement of two methods).

Reports contain no timings or paths outside the output directory, so two
runs produce identical JSON.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .characteristics import (enumerate_branches, select_physical_branch, write_branches_csv)
from .charges import drift_report, write_report_csv
from .deformation_map import (MappedProfile, deformed_solution, derivative_sampler, fold_to_peak,
                              map_u_from_w, match_jump, write_folded_csv)
from .direct_solver import integrate_deformed
from .io import write_csv, write_json
from .model import DeformedSystem, GridSpec
from .profile_dsl import parse
from .shock_finder import (CatastropheFunction, classify_catastrophe, complex_shock_roots,
                           deformed_shock_time, find_shock_events, literal_deformed_time)

__all__ = ["Check", "ScenarioReport", "UnknownScenarioError", "CATALOG", "DEFAULTS",
           "run_scenario", "run_all", "closed_forms"]

log = logging.getLogger(__name__)

DEFAULTS = {
    "window": (-10.0, 10.0),
    "scan_points": 4001,
    "classify": True,
    "charges": True,
    "fields": True,
    "out_dir": None,
}


class UnknownScenarioError(KeyError):
    """The requested scenario is not in the catalog."""

    def __str__(self):
        return str(self.args[0])


@dataclass(frozen=True)
class Check:
    """One comparison of a computed value with its expectation.

    ``mode`` is ``rel`` or ``abs`` (``|computed - expected| <= tolerance``,
    relative to ``|expected|`` for ``rel``), ``below``/``above`` (a bound on
    ``computed``) or ``equal``.
    """

    name: str
    computed: object
    expected: object
    tolerance: Optional[float]
    mode: str
    source: str
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "computed": self.computed, "expected": self.expected,
                "tolerance": self.tolerance, "mode": self.mode, "source": self.source,
                "passed": self.passed}


@dataclass
class ScenarioReport:
    name: str
    description: str
    parameters: dict
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description,
                "parameters": self.parameters, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks], "values": self.values,
                "files": list(self.files)}


def _compare(computed, expected, tol, mode) -> bool:
    if mode == "equal":
        return computed == expected
    if computed is None or not np.all(np.isfinite(computed)):
        return False
    if mode == "below":
        return bool(computed < tol)
    if mode == "above":
        return bool(computed > tol)
    diff = abs(computed - expected)
    if mode == "abs":
        return bool(diff <= tol)
    if mode == "rel":
        return bool(diff <= tol * abs(expected))
    raise ValueError(f"unknown comparison mode {mode!r}")


class _Run:
    """Collects checks, values and emitted files while a scenario executes."""

    def __init__(self, name: str, cfg: dict):
        self.name = name
        self.cfg = cfg
        self.checks: list = []
        self.values: dict = {}
        self.files: list = []
        self.out = Path(cfg["out_dir"]) if cfg.get("out_dir") else None

    def check(self, name, computed, expected, tol, mode="rel", source="published"):
        if isinstance(computed, (np.floating, np.integer)):
            computed = computed.item()
        self.checks.append(Check(name, computed, expected, tol, mode, source,
                                 _compare(computed, expected, tol, mode)))

    def path(self, artifact: str, suffix: str = ".csv") -> Optional[Path]:
        """Destination of ``<scenario>/<artifact><suffix>``, or None when not writing."""
        if self.out is None:
            return None
        rel = f"{self.name}/{artifact}{suffix}"
        self.files.append(rel)
        return self.out / rel

    def csv(self, artifact, header, rows):
        p = self.path(artifact)
        if p is not None:
            write_csv(p, header, rows)


# ---------------------------------------------------------------------------
# exact expressions


def closed_forms() -> dict:
    """Exact shock data of the Cauchy profile ``1/(1+x^2)`` with ``eps = 3``.

    The second position follows from the characteristic through the second
    minimiser, ``x_s = x0 + w0(x0) t_s``.
    """
    r = math.sqrt(385.0)
    x01 = math.sqrt(23.0 - r) / (6.0 * math.sqrt(2.0))
    x02 = -math.sqrt(23.0 + r) / (6.0 * math.sqrt(2.0))
    t1 = (95.0 - r) ** 6 / (2.0**21 * 3.0**10 * (5.0 * math.sqrt(11.0) - 2.0 * math.sqrt(35.0)))
    t2 = (95.0 + r) ** 6 / (5.0 + r) / (2.0**18 * 3.0**10 * math.sqrt(2.0 * (23.0 + r)))
    xs1 = 3.0 * (19.0 * r - 365.0) / (64.0 * (5.0 * math.sqrt(11.0) - 2.0 * math.sqrt(35.0)))
    w02 = -12.0 * x02**2 / (1.0 + x02**2) ** 5
    xs2 = x02 + w02 * t2
    return {"x0_1": x01, "x0_2": x02, "t_s1": t1, "t_s2": t2, "x_s1": xs1, "x_s2": xs2,
            "x_s2_as_printed": -3.0 * math.sqrt(0.5 * (23.0 + r)) / 16.0}


def _profile_error(actual: Callable, exact: Callable, xs) -> float:
    xs = np.asarray(xs, dtype=float)
    return float(np.max(np.abs(np.asarray(actual(xs.astype(complex))) - exact(xs))))


def _tgc_error(cf: CatastropheFunction, exact: Callable, xs) -> float:
    xs = np.asarray(xs, dtype=float)
    t = np.asarray(cf(xs.astype(complex))).real
    ref = exact(xs)
    return float(np.max(np.abs(t - ref) / np.abs(ref)))


_SAMPLE_X = np.array([-2.3, -1.1, -0.7, -0.35, 0.15, 0.3, 0.8, 1.3, 2.9])


# ---------------------------------------------------------------------------
# shared steps


def _grid(cfg) -> GridSpec:
    lo, hi = cfg["window"]
    return GridSpec(float(lo), float(hi), int(cfg["scan_points"]))


def _events(run: _Run, events, artifact="events"):
    run.values[artifact] = [e.to_dict() for e in events]
    run.csv(artifact, ["index", "t_s", "x_s", "re_x0", "im_x0", "kind"],
            [(k + 1, e.t_s, e.x_s, complex(e.x0_seed).real, complex(e.x0_seed).imag, e.kind)
             for k, e in enumerate(events)])


def _consistency(run: _Run, u0, system, w0, events, cfg):
    """Deformed-side events equal the events of the mapped profile."""
    grid = _grid(cfg)
    mapped = find_shock_events(w0, system.f, grid)
    dev = max((max(abs(a.t_s - b.t_s), abs(a.x_s - b.x_s)) for a, b in zip(events, mapped)),
              default=0.0)
    run.check("mapped profile gives the same event count", len(mapped), len(events), None,
              "equal", "derived")
    run.check("mapped profile gives the same events", dev, None, 1e-10, "below", "derived")
    lit = max(abs(literal_deformed_time(u0, system, complex(e.x0_seed)).real - e.t_s) / e.t_s
              for e in events)
    run.check("literal deformed time formula at the seeds", lit, None, 1e-10, "below",
              "derived")


def _classify(run: _Run, w0, eps, events, expected_kind, count):
    sampler = derivative_sampler(w0, eps, tol=1e-8)
    kinds = []
    for k, e in enumerate(events[:count]):
        c = classify_catastrophe(e, sampler, points=401)
        kinds.append({"t_s": e.t_s, "kind": c.kind, "ux_growth": c.ux_growth,
                      "uxx_growth": c.uxx_growth})
        run.check(f"event {k + 1} catastrophe class", c.kind, expected_kind, None, "equal",
                  "published")
    run.values["classification"] = kinds


def _charges(run: _Run, profile, times, *, system=None, f=None, shock_time=None,
             kappas=(1.0, 2.0), artifact="charges"):
    rep = drift_report(profile, kappas, times, system=system, f=f, shock_time=shock_time)
    for k in kappas:
        run.check(f"I_{k:g} drift before the shock", rep.drift[float(k)], None, 1e-6, "below",
                  "derived")
    run.values[artifact] = rep.to_dict()
    p = run.path(artifact)
    if p is not None:
        write_report_csv(p, rep)
    return rep


def _profiles(run: _Run, u0, system, times, x, artifact="profiles"):
    """``u`` (and ``w``) at several pre-shock times, stacked in one CSV."""
    if run.out is None:
        return
    rows = []
    for t in times:
        uf = deformed_solution(u0, system, t, x)
        for xi, wi, ui in zip(x, uf.w, uf.u):
            rows.append((t, xi, wi.real, wi.imag, ui.real, ui.imag))
    run.csv(artifact, ["t", "x", "re_w", "im_w", "re_u", "im_u"], rows)


def _tgc_curve(run: _Run, cf: CatastropheFunction, lo=-3.0, hi=3.0, n=1201):
    if run.out is None:
        return
    xs = np.linspace(lo, hi, n)
    with np.errstate(all="ignore"):
        t = np.asarray(cf(xs.astype(complex))).real
    run.csv("t_gc", ["x0", "t_gc"], zip(xs, t))


# ---------------------------------------------------------------------------
# scenarios


def cauchy_eps3(run: _Run):
    cfg = run.cfg
    u0 = parse("1/(1+x^2)")
    system = DeformedSystem(3)
    w0 = MappedProfile(u0, system)
    grid = _grid(cfg)
    events = deformed_shock_time(u0, system, grid)
    _events(run, events)
    run.check("at least two events", len(events) >= 2, True, None, "equal", "published")
    if len(events) < 2:
        return
    e1, e2 = events[:2]
    cf = closed_forms()
    run.values["closed_forms"] = cf
    for key, val, ref in [("t_s1", e1.t_s, 0.311791), ("t_s2", e2.t_s, 0.644466),
                          ("x_s1", e1.x_s, 0.0770263), ("x_s2", e2.x_s, -1.21712)]:
        run.check(f"{key} printed value", val, ref, 1e-4)
        run.check(f"{key} closed form", val, cf[key], 1e-10, "rel", "closed form")
    run.check("x0_1 closed form", complex(e1.x0_seed).real, cf["x0_1"], 1e-10, "rel",
              "closed form")
    run.check("x0_2 closed form", complex(e2.x0_seed).real, cf["x0_2"], 1e-10, "rel",
              "closed form")
    run.check("mapped profile -12x^2/(1+x^2)^5",
              _profile_error(w0, lambda x: -12 * x**2 / (1 + x**2) ** 5, _SAMPLE_X),
              None, 1e-12, "below", "closed form")
    cat = CatastropheFunction(w0, system.f, grid)
    run.check("t_gc = (1+x^2)^6 / (24 x (1-4x^2))",
              _tgc_error(cat, lambda x: (1 + x**2) ** 6 / (24 * x * (1 - 4 * x**2)), _SAMPLE_X),
              None, 1e-10, "below", "closed form")
    _tgc_curve(run, cat)
    _consistency(run, u0, system, w0, events, cfg)
    if cfg["classify"]:
        _classify(run, w0, 3.0, events, "curvature", 2)
    if cfg["charges"]:
        _charges(run, u0, (0.05, 0.1, 0.2), system=system, shock_time=e1.t_s)
        post = drift_report(u0, (0.5, 2.0), (0.4, 0.5), system=system, shock_time=e1.t_s)
        run.check("I_1/2 drift with the loop removed", post.drift[0.5], None, 1e-4, "below",
                  "derived")
        run.check("I_2 drift with the loop removed", post.drift[2.0], None, 1e-2, "above",
                  "published")
        run.values["charges_post_shock"] = post.to_dict()
        p = run.path("charges_post_shock")
        if p is not None:
            write_report_csv(p, post)
    # direct integration of the deformed equation as an independent oracle
    t_half = 0.5 * e1.t_s
    dgrid = GridSpec(-10.0, 10.0, 801)
    direct = integrate_deformed(u0, system, dgrid, t_half, shock_time=e1.t_s)
    ref = deformed_solution(u0, system, t_half, dgrid.x)
    run.check("direct solver agreement at t_s1/2", float(np.max(np.abs(direct.u - ref.u))), None,
              1e-3, "below", "derived")
    if cfg["fields"]:
        x = np.linspace(-4.0, 4.0, 801)
        _profiles(run, u0, system, (0.0, t_half, e1.t_s), x)
        for label, t in (("folded_t0.4", 0.4), ("folded_ts2", e2.t_s)):
            prof = fold_to_peak(w0, 3.0, t, system.f)
            run.values[label] = {"t": t, "loop_x0": prof.loop_x0, "peak": prof.peak}
            p = run.path(label)
            if p is not None:
                write_folded_csv(p, prof)


def rational_odd_shock(run: _Run):
    cfg = run.cfg
    u0 = parse("x/(1+x^2)")
    system = DeformedSystem(3)
    w0 = MappedProfile(u0, system)
    events = deformed_shock_time(u0, system, _grid(cfg))
    _events(run, events)
    run.check("at least one event", len(events) >= 1, True, None, "equal", "published")
    if not events:
        return
    e = events[0]
    run.check("t_s", e.t_s, 1.0 / 3.0, 1e-6, "abs")
    run.check("x_s", e.x_s, 0.0, 1e-6, "abs")
    run.check("mapped profile -3x(1-x^2)^2/(1+x^2)^5",
              _profile_error(w0, lambda x: -3 * x * (1 - x**2) ** 2 / (1 + x**2) ** 5, _SAMPLE_X),
              None, 1e-12, "below", "closed form")
    _consistency(run, u0, system, w0, events, cfg)
    if cfg["classify"]:
        _classify(run, w0, 3.0, events, "gradient", 1)
    if cfg["charges"]:
        _charges(run, u0, (0.1, 0.2, 0.3), system=system, shock_time=e.t_s)
    if cfg["fields"]:
        _profiles(run, u0, system, (0.0, 0.5 * e.t_s, e.t_s), np.linspace(-4.0, 4.0, 801))


def gauss_eps2(run: _Run):
    cfg = run.cfg
    u0 = parse("exp(-x^2-i*pi/4)")
    system = DeformedSystem(2)
    w0 = MappedProfile(u0, system)
    grid = _grid(cfg)
    events = deformed_shock_time(u0, system, grid)
    _events(run, events)
    run.check("exactly one event", len(events), 1, None, "equal", "published")
    if not events:
        return
    e = events[0]
    run.check("t_s", e.t_s, 0.25, 1e-8, "abs")
    run.check("x_s", e.x_s, 0.0, 1e-6, "abs")
    run.check("mapped profile -4x exp(-2x^2)",
              _profile_error(w0, lambda x: -4 * x * np.exp(-2 * x**2), _SAMPLE_X),
              None, 1e-12, "below", "closed form")
    cat = CatastropheFunction(w0, system.f, grid)
    run.check("t_gc = exp(2x^2) / (4 - 16x^2)",
              _tgc_error(cat, lambda x: np.exp(2 * x**2) / (4 - 16 * x**2), _SAMPLE_X),
              None, 1e-10, "below", "closed form")
    _tgc_curve(run, cat)
    _consistency(run, u0, system, w0, events, cfg)
    if cfg["classify"]:
        _classify(run, w0, 2.0, events, "curvature", 1)
    if cfg["charges"]:
        _charges(run, u0, (0.05, 0.1, 0.2), system=system, shock_time=e.t_s)
    if cfg["fields"]:
        _profiles(run, u0, system, (0.0, 0.15, e.t_s), np.linspace(-4.0, 4.0, 801))


def complex_eps32(run: _Run):
    cfg = run.cfg
    eps = 1.5
    w0 = parse("exp(i*pi/4)/(x^2+1)")
    roots = complex_shock_roots(w0, 1, window=_grid(cfg))
    run.values["roots"] = [r.to_dict() for r in roots]
    run.csv("roots", ["re_z", "im_z", "t_s", "x_s", "residual"],
            [(r.z.real, r.z.imag, r.t_s, r.x_s, r.residual) for r in roots])
    pos = roots.positive()
    run.check("a root with positive time", len(pos) >= 1, True, None, "equal", "published")
    if not pos:
        return
    r1 = pos[0]
    z_ref = complex(0.164903, -0.553299)
    run.check("Re z_01", r1.z.real, z_ref.real, 1e-3, "abs")
    run.check("Im z_01", r1.z.imag, z_ref.imag, 1e-3, "abs")
    mirror = [r for r in roots if abs(r.z + r1.z) < 1e-6]
    run.check("mirror root -z_01 exists", len(mirror) == 1, True, None, "equal", "published")
    if mirror:
        run.check("mirror root time is -t_s1", mirror[0].t_s, -r1.t_s, 1e-10, "abs", "published")
    run.check("t_s1", r1.t_s, 0.4791, 1e-3, "abs")
    run.check("x_s1", r1.x_s, 0.494709, 1e-3, "abs")
    run.check("root residual", r1.residual, None, 1e-10, "below", "derived")

    x = np.linspace(-5.0, 5.0, 1001)
    u0 = map_u_from_w(w0, eps, x)
    k = u0.u_far
    run.values["k"] = [k.real, k.imag]
    run.check("initial u is real", float(np.max(np.abs(u0.u.imag))), None, 1e-12, "below",
              "published")
    run.check("k printed value", k.real, 1.2794, 1e-3, "abs")
    run.check("k closed form (2 pi / 3)^(1/3)", k.real, (2 * math.pi / 3) ** (1 / 3), 1e-10,
              "rel", "closed form")

    grid = GridSpec(-5.0, 5.0, 1001)
    jumps = {}
    for label, t in (("0.45", 0.45), ("0.55", 0.55)):
        bs = enumerate_branches(w0, 1, grid, t)
        sel = select_physical_branch(bs)
        jumps[label] = sel.x_jump
        p = run.path(f"branches_t{label}")
        if p is not None:
            write_branches_csv(p, bs)
    run.values["jump_position"] = jumps
    run.check("no jump before the shock (t=0.45)", jumps["0.45"] is None, True, None, "equal",
              "published")
    run.check("jump after the shock (t=0.55)", jumps["0.55"] is not None, True, None, "equal",
              "published")

    bs = enumerate_branches(w0, 1, grid, 1.0)
    jm = match_jump(bs, eps, k)
    run.values["jump_match"] = {"x_re_cross": jm.x_re_cross, "x_im_cross": jm.x_im_cross,
                                "continuous": jm.continuous}
    run.check("x_1 (Re crossing) at t=1", jm.x_re_cross, 1.0663, 1e-3, "abs")
    run.check("x_2 (Im crossing) at t=1", jm.x_im_cross, 0.1893, 1e-3, "abs")
    run.check("no continuous matching at t=1", jm.continuous, False, None, "equal")
    run.csv("jump_t1", ["x", "re_u_left", "im_u_left", "re_u_right", "im_u_right"],
            zip(jm.x, jm.u_left.real, jm.u_left.imag, jm.u_right.real, jm.u_right.imag))
    if cfg["charges"]:
        _charges(run, w0, (0.1, 0.2, 0.3), f=1, shock_time=r1.t_s)
    if cfg["fields"] and run.out is not None:
        from .characteristics import evolved_field

        rows = []
        for t in (0.05, 0.3, 0.45):
            fld = evolved_field(w0, 1, t, (-20.0, 20.0))
            uf = map_u_from_w(fld, eps, x)
            rows += [(t, xi, wi.real, wi.imag, ui.real, ui.imag)
                     for xi, wi, ui in zip(x, uf.w, uf.u)]
        run.csv("profiles", ["t", "x", "re_w", "im_w", "re_u", "im_u"], rows)


# rows: eps, t_s1, t_s2, x_s1, x_s2 as printed
EPS_TABLE = (
    (3, 0.311791, 0.644466, 0.0770262, -1.21712),
    (5, 0.394011, 0.662872, -0.18255, 1.05226),
    (7, 0.594697, 0.913866, 0.241058, -0.970114),
    (9, 0.997223, 1.45053, -0.279227, 0.919109),
    (11, 1.78617, 2.50127, 0.306641, -0.883621),
    (13, 3.34619, 4.555, -0.327569, 0.857142),
)


def eps_table(run: _Run):
    u0 = parse("1/(1+x^2)")
    grid = _grid(run.cfg)
    rows = []
    for eps, t1, t2, x1, x2 in EPS_TABLE:
        events = deformed_shock_time(u0, DeformedSystem(eps), grid)
        run.check(f"eps={eps}: at least two events", len(events) >= 2, True, None, "equal")
        if len(events) < 2:
            continue
        e1, e2 = events[:2]
        for key, val, ref in (("t_s1", e1.t_s, t1), ("t_s2", e2.t_s, t2),
                              ("x_s1", e1.x_s, x1), ("x_s2", e2.x_s, x2)):
            run.check(f"eps={eps}: {key}", val, ref, 1e-3)
        rows.append((eps, e1.t_s, e2.t_s, e1.x_s, e2.x_s))
    run.values["table"] = [dict(zip(("eps", "t_s1", "t_s2", "x_s1", "x_s2"), r)) for r in rows]
    run.csv("table", ["eps", "t_s1", "t_s2", "x_s1", "x_s2"], rows)


def multipeak_eps3(run: _Run):
    cfg = run.cfg
    u0 = parse("1/(1+(x-1)^2)+1/(1+(x+1)^2)")
    system = DeformedSystem(3)
    w0 = MappedProfile(u0, system)
    grid = _grid(cfg)
    events = deformed_shock_time(u0, system, grid)
    _events(run, events)
    expected = ((0.221045, 1.01299), (0.429609, -2.21359), (0.558845, -0.856069),
                (0.798264, 0.116185))
    run.check("four events", len(events), 4, None, "equal")
    for k, (e, (t_ref, x_ref)) in enumerate(zip(events, expected)):
        run.check(f"t_s{k + 1}", e.t_s, t_ref, 1e-3)
        run.check(f"x_s{k + 1}", e.x_s, x_ref, 1e-3)

    def w_exact(x):
        return -96 * (x**2 + 2) * (x**5 + 4 * x**3 - 4 * x) ** 2 / (x**4 + 4) ** 5

    def t_exact(x):
        poly = (2 * x**14 + 25 * x**12 + 60 * x**10 - 156 * x**8 - 384 * x**6 + 240 * x**4
                + 192 * x**2 - 64)
        return -(x**4 + 4) ** 6 / (384 * x * poly)

    run.check("mapped profile closed form", _profile_error(w0, w_exact, _SAMPLE_X), None, 1e-12,
              "below", "closed form")
    cat = CatastropheFunction(w0, system.f, grid)
    run.check("t_gc rational function", _tgc_error(cat, t_exact, _SAMPLE_X), None, 1e-10,
              "below", "closed form")
    _tgc_curve(run, cat, -4.0, 4.0, 1601)
    _consistency(run, u0, system, w0, events, cfg)
    if cfg["classify"]:
        _classify(run, w0, 3.0, events, "curvature", 4)
    if cfg["charges"] and events:
        _charges(run, u0, (0.05, 0.1, 0.2), system=system, shock_time=events[0].t_s)
    if cfg["fields"]:
        _profiles(run, u0, system, (0.0, 0.1, events[0].t_s), np.linspace(-5.0, 5.0, 1001))


CATALOG = {
    "cauchy_eps3": (cauchy_eps3, "Cauchy profile 1/(1+x^2), eps=3: two real shock/peak events"),
    "rational_odd_shock": (rational_odd_shock,
                           "Odd profile x/(1+x^2), eps=3: gradient catastrophe at u=0"),
    "gauss_eps2": (gauss_eps2, "Gaussian exp(-x^2-i pi/4), eps=2: real w, complex u"),
    "complex_eps32": (complex_eps32,
                      "Complex w0 = exp(i pi/4)/(x^2+1), eps=3/2: complex roots and a jump"),
    "eps_table": (eps_table, "Cauchy profile for eps = 3, 5, ..., 13: first two events"),
    "multipeak_eps3": (multipeak_eps3, "Two shifted Cauchy profiles, eps=3: four peaks"),
}


def _config(overrides: Optional[dict]) -> dict:
    cfg = dict(DEFAULTS)
    for key, val in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ValueError(f"unknown scenario setting {key!r}")
        cfg[key] = val
    lo, hi = cfg["window"]
    cfg["window"] = (float(lo), float(hi))
    return cfg


def run_scenario(name: str, overrides: Optional[dict] = None) -> ScenarioReport:
    """Run one catalog scenario; files go under ``out_dir/<name>/`` when set."""
    if name not in CATALOG:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; choose from {', '.join(sorted(CATALOG))}")
    fn, description = CATALOG[name]
    cfg = _config(overrides)
    run = _Run(name, cfg)
    log.info("running scenario %s", name)
    with np.errstate(all="ignore"):
        fn(run)
    params = {k: v for k, v in cfg.items() if k != "out_dir"}
    report = ScenarioReport(name, description, params, run.checks, run.values, run.files)
    p = run.path("report", ".json")
    if p is not None:
        report.files = list(run.files)
        write_json(p, report)
    return report


def _run_named(args):
    return run_scenario(*args)


def run_all(overrides: Optional[dict] = None, workers: int = 1) -> list:
    """All scenarios in catalog order; ``workers > 1`` runs them in processes."""
    names = list(CATALOG)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_named, [(n, overrides) for n in names]))
    return [run_scenario(n, overrides) for n in names]
