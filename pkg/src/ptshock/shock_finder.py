"""Shock and peak formation times.

For ``w_t + f(w) w_x = 0`` the characteristic from ``x0`` breaks at
``t_gc(x0) = -1 / g'(x0)`` with ``g = f(w0)``; the first shock is the
smallest positive local minimum and sits at ``x_s = g(x0) t_s + x0``.
The deformed system is handled by mapping its initial profile onto the
undeformed one, where ``f(w0) = eps u0 (i u0')^(eps - 1)`` for power-law
``f``.  Complex initial data lead to two real conditions on a complex
``x0`` (see :func:`complex_shock_roots`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .characteristics import is_real_profile
from .model import DeformedSystem, FSpec, GridSpec, ShockEvent, reality_phase
from .profile_dsl import Dual, derivatives, power

__all__ = [
    "CatastropheFunction",
    "ComplexShockRoot",
    "ComplexRootSearch",
    "ComplexProfileError",
    "find_shock_events",
    "deformed_catastrophe",
    "deformed_shock_time",
    "literal_deformed_time",
    "complex_shock_roots",
    "classify_catastrophe",
    "Classification",
]

log = logging.getLogger(__name__)

POLISH_TOL = 1e-12


class ComplexProfileError(ValueError):
    """``f(w0)`` is not real on the real axis, so ``t_gc`` is complex."""


class CatastropheFunction:
    """``t_gc(x0) = -1 / g'(x0)`` for ``g = f(w0)``.

    ``g`` may be given directly (``g=...``) instead of ``w0`` and ``f``;
    it must accept nested :class:`Dual` arguments.
    """

    def __init__(self, w0=None, f=None, window: GridSpec = GridSpec(), g: Callable = None):
        if g is None:
            if w0 is None:
                raise ValueError("need w0 or g")
            fs = FSpec.coerce(f)
            g = lambda x: fs(w0(x))  # noqa: E731
        self.g = g
        self.window = window

    def derivs(self, x0, order: int = 1):
        """``[g, g', ..., g^(order)]`` at ``x0``."""
        return derivatives(self.g, x0, order)

    def slope(self, x0):
        return self.derivs(x0, 1)[1]

    def __call__(self, x0):
        with np.errstate(divide="ignore"):
            return -1.0 / self.slope(x0)

    def position(self, x0, t):
        """Where the characteristic from ``x0`` is at time ``t``."""
        return self.derivs(x0, 0)[0] * t + x0


def _real(v, scale, what):
    v = np.asarray(v)
    finite = np.isfinite(v)
    if np.any(np.abs(v.imag[finite]) > 1e-10 * scale):
        raise ComplexProfileError(
            f"{what} is complex on the real axis; multiply the profile by "
            "reality_phase(system) or use complex_shock_roots")
    return v.real


def find_shock_events(w0=None, f=None, window: GridSpec = GridSpec(), *,
                      catastrophe: Optional[CatastropheFunction] = None,
                      system: str = "undeformed") -> list:
    """All positive local minima of ``t_gc`` in the window, sorted by time.

    A uniform scan brackets sign changes of ``g''`` (from negative to
    positive, where ``g' < 0``); each bracket is solved with Brent's method
    and polished by Newton steps on ``g'' = 0`` until ``|t_gc'| < 1e-12``.
    """
    cf = catastrophe or CatastropheFunction(w0, f, window)
    xs = window.x
    g, g1, g2 = cf.derivs(xs, 2)
    scale = max(1.0, float(np.nanmax(np.abs(np.where(np.isfinite(g1), g1, 0)))))
    g = _real(g, max(1.0, float(np.nanmax(np.abs(np.where(np.isfinite(g), g, 0))))), "f(w0)")
    g1 = _real(g1, scale, "d f(w0)/dx0")
    g2 = np.asarray(g2).real

    def second(x):
        return float(np.real(cf.derivs(x, 2)[2]))

    events = []
    for k in range(len(xs) - 1):
        a, b = g2[k], g2[k + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if not (a < 0 <= b):
            continue
        if not (g1[k] < 0 or g1[k + 1] < 0):
            continue
        x0 = xs[k + 1] if b == 0 else brentq(second, xs[k], xs[k + 1], xtol=1e-15, rtol=1e-15)
        x0 = _polish(cf, x0, xs[k], xs[k + 1])
        v, d1 = (complex(c) for c in cf.derivs(x0, 1))
        if not d1.real < 0:
            continue
        t_s = -1.0 / d1.real
        events.append(ShockEvent(t_s, v.real * t_s + x0, complex(x0), "gradient", system))
    events.sort(key=lambda e: (e.t_s, e.x_s))
    return events


def _polish(cf, x0, lo, hi, max_iter=8):
    for _ in range(max_iter):
        _, d1, d2, d3 = (complex(c).real for c in cf.derivs(x0, 3))
        if abs(d2 / d1**2) < POLISH_TOL or d3 == 0:
            break
        step = d2 / d3
        xn = x0 - step
        if not lo - 1e-9 <= xn <= hi + 1e-9:
            break
        x0 = xn
        if abs(step) < 1e-16 * (1 + abs(x0)):
            break
    return x0


def _slope_pair(fn, x):
    """``(fn(x), fn'(x))`` for ``x`` that may itself be a nested dual."""
    one = x * 0 + 1
    r = fn(Dual(x, one))
    return r.value, r.deriv


def deformed_catastrophe(u0, system: DeformedSystem, window: GridSpec = GridSpec(),
                         phase: complex = 1.0) -> CatastropheFunction:
    """``g = f(w0) = eps u0 (i u0')^(eps - 1)`` for the deformed profile ``u0``."""
    eps = system.epsilon
    _ = system.n  # power-law f required

    def g(x):
        u, ux = _slope_pair(u0, x)
        u = u * phase
        ux = ux * phase
        return eps * u * power(1j * ux, eps - 1)

    return CatastropheFunction(window=window, g=g)


def deformed_shock_time(u0, system: DeformedSystem, window: GridSpec = GridSpec(), *,
                        apply_reality_phase: bool = False) -> list:
    """Shock (peak) events of the deformed system started from ``u0``.

    Raises :class:`ComplexProfileError` when the catastrophe time is complex
    and ``apply_reality_phase`` is not set.
    """
    phase = reality_phase(system) if apply_reality_phase else 1.0
    cf = deformed_catastrophe(u0, system, window, phase)
    events = find_shock_events(window=window, catastrophe=cf, system="deformed")
    return [ShockEvent(e.t_s, e.x_s, e.x0_seed, "unclassified", "deformed") for e in events]


def literal_deformed_time(u0, system: DeformedSystem, x0, phase: complex = 1.0):
    """``-1 / (eps^(1/n) d/dx0 [u0^(1/n) (i u0')^((eps-1)/n)])`` evaluated as written.

    For ``n = 1`` this coincides with ``t_gc`` of :func:`deformed_catastrophe`.
    """
    eps, n = system.epsilon, system.n

    def h(x):
        u, ux = _slope_pair(u0, x)
        return power(u * phase, 1.0 / n) * power(1j * ux * phase, (eps - 1) / n)

    d = derivatives(h, x0, 1)[1]
    return -1.0 / (eps ** (1.0 / n) * d)


# ---------------------------------------------------------------------------
# complex initial data


@dataclass(frozen=True)
class ComplexShockRoot:
    """Solution ``z`` of the two complex shock conditions and its event."""

    z: complex
    t_s: float
    x_s: float
    residual: float

    def to_dict(self) -> dict:
        return {"z": [self.z.real, self.z.imag], "t_s": self.t_s, "x_s": self.x_s,
                "residual": self.residual}


@dataclass
class ComplexRootSearch:
    """Roots found by :func:`complex_shock_roots`.

    For real profiles the conditions hold on a whole interval of the real
    axis; ``degenerate`` is then set and ``events`` holds the real-axis
    result of :func:`find_shock_events`.
    """

    roots: list
    degenerate: bool = False
    note: str = ""
    events: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, k):
        return self.roots[k]

    def positive(self):
        """Roots with positive time, earliest first."""
        return [r for r in self.roots if r.t_s > 0]


def _conditions(g_fn, z):
    g, g1, g2 = derivatives(g_fn, z, 2)
    h = z - g / g1
    dh = g * g2 / g1**2
    return g1, g2, h, dh, g


def complex_shock_roots(w0=None, f=None, box: Sequence[float] = (-3.0, 3.0, -3.0, 3.0),
                        n: int = 41, *, g: Callable = None, window: GridSpec = GridSpec(),
                        tol: float = 1e-10, max_iter: int = 80,
                        dedupe: float = 1e-6) -> ComplexRootSearch:
    """Complex ``x0`` with ``Im g'(x0) = 0`` and ``Im[x0 - g/g'] = 0``.

    ``g = f(w0)``.  Damped Newton on the two real equations is started from
    an ``n x n`` lattice over ``box = (re_min, re_max, im_min, im_max)``.
    Each root yields ``t_s = -1/Re g'`` (with sign) and
    ``x_s = Re[x0 - g/g']``.
    """
    if g is None:
        fs = FSpec.coerce(f)
        g_fn = lambda x: fs(w0(x))  # noqa: E731
        if is_real_profile(w0, fs, (window.x_min, window.x_max)):
            events = find_shock_events(w0, fs, window)
            return ComplexRootSearch([], True, "real-profile degenerate case", events)
    else:
        g_fn = g
    re = np.linspace(box[0], box[1], n)
    im = np.linspace(box[2], box[3], n)
    z = (re[:, None] + 1j * im[None, :]).ravel()
    active = np.ones(z.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            zi = z[idx]
            g1, g2, h, dh, _ = _conditions(g_fn, zi)
            F1, F2 = g1.imag, h.imag
            # d Im F / d(a, b) = (Im F', Re F')
            a11, a12 = g2.imag, g2.real
            a21, a22 = dh.imag, dh.real
            det = a11 * a22 - a12 * a21
            da = (F1 * a22 - a12 * F2) / det
            db = (a11 * F2 - a21 * F1) / det
            step = da + 1j * db
            size = np.abs(step)
            cap = 0.5 * (1 + np.abs(zi))
            step = np.where(size > cap, step * cap / size, step)
            zn = zi - step
            bad = ~np.isfinite(zn) | (np.abs(det) < 1e-300)
            z[idx] = np.where(bad, np.nan, zn)
            done = bad | (np.abs(step) < 1e-15 * (1 + np.abs(zn)))
            active[idx[done]] = False
        g1, _, h, _, _ = _conditions(g_fn, z)
    res = np.maximum(np.abs(g1.imag), np.abs(h.imag))
    scale = 1 + np.abs(z)
    ok = np.isfinite(z) & (res < tol * scale)
    ok &= (z.real >= box[0] - 1e-9) & (z.real <= box[1] + 1e-9)
    ok &= (z.imag >= box[2] - 1e-9) & (z.imag <= box[3] + 1e-9)
    ok &= np.abs(g1.real) > 1e-12
    roots = []
    for k in np.flatnonzero(ok):
        zk = complex(z[k])
        if any(abs(zk - r.z) < dedupe for r in roots):
            continue
        t_s = -1.0 / g1[k].real
        roots.append(ComplexShockRoot(zk, float(t_s), float(h[k].real), float(res[k])))
    roots.sort(key=lambda r: (r.t_s, r.x_s, r.z.real, r.z.imag))
    return ComplexRootSearch(roots)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    """Outcome of :func:`classify_catastrophe` with the growth factors used."""

    kind: str            # "gradient" | "curvature" | "inconclusive"
    ux_growth: float
    uxx_growth: float
    ux_max: tuple
    uxx_max: tuple


def classify_catastrophe(event: ShockEvent, sampler: Callable, *, tau: float = None,
                         refine: int = 16, levels: int = 2, half_width: float = None,
                         points: int = 2001) -> Classification:
    """Decide whether ``u_x`` or only ``u_xx`` diverges as ``t -> t_s``.

    ``sampler(t, x)`` returns ``(u_x, u_xx)`` sampled at the abscissae ``x``.
    Samples are taken at ``t_s - tau / refine**k``.  Each window is centred
    on the characteristic that breaks and shrinks like the steep zone, as
    ``(time gap)^(3/2)``, so successive levels resolve it ever more finely.
    Curvature: ``max|u_x|`` grows by less than 2 per level while
    ``max|u_xx|`` grows by at least 4.  Gradient: ``max|u_x|`` grows by 2 or
    more per level.
    """
    t_s, x_s = event.t_s, event.x_s
    x0 = complex(event.x0_seed).real
    speed = (x_s - x0) / t_s
    if tau is None:
        tau = 0.02 * t_s
    if half_width is None:
        half_width = 0.25
    uxm, uxxm = [], []
    for k in range(levels + 1):
        dt = tau / refine**k
        t = t_s - dt
        centre = x_s - speed * dt
        hw = half_width * (dt / tau) ** 1.5
        x = np.linspace(centre - hw, centre + hw, points)
        ux, uxx = sampler(t, x)
        uxm.append(float(np.nanmax(np.abs(ux))))
        with np.errstate(all="ignore"):
            uxxm.append(float(np.nanmax(np.abs(uxx))) if np.any(np.isfinite(uxx)) else np.nan)
    gx = [uxm[k + 1] / uxm[k] for k in range(levels)]
    gxx = [uxxm[k + 1] / uxxm[k] for k in range(levels)]
    if min(gx) >= 2.0:
        kind = "gradient"
    elif max(gx) < 2.0 and min(gxx) >= 4.0:
        kind = "curvature"
    else:
        kind = "inconclusive"
    return Classification(kind, min(gx), min(gxx), tuple(uxm), tuple(uxxm))
