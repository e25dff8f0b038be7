"""Explicit maps between the undeformed and the deformed equation.

For ``f(w) = w^n`` a solution ``u`` of ``u_t - i f(u) (i u_x)^eps = 0`` gives
a solution ``w = (eps u (i u_x)^(eps-1))^(1/n)`` of ``w_t + f(w) w_x = 0``.
With ``n = 1`` the map is inverted by quadrature::

    u = C J^a,   J(x) = int_{-inf}^x w^p dq,   p = 1/(eps-1),  a = (eps-1)/eps,
    C = (-i)^(1 - 1/eps) (eps-1)^(1/eps - 1) eps^((eps-2)/eps).

Fractional powers use the principal branch at the start of a path and are
continued along it (see :func:`ptshock.numerics.track_power`), so the
square root of a function with a double zero changes sign there.  The map
``u -> w`` is ``eps``-to-one: ``u -> lambda u`` with ``lambda^eps = 1`` gives
the same ``w``.  The ``align`` option of :func:`map_u_from_w` chooses that
factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .characteristics import (BranchField, BranchSet, EvolvedField, NoRootsError, _edge_branch,
                              _interp_cross, characteristic_slope, evolved_field, push_forward)
from .io import write_csv
from .model import DeformedSystem, FSpec
from .numerics import QuadratureError, cumulative_integral, half_line_integral, track_power
from .profile_dsl import Dual, derivatives, power

__all__ = [
    "MappedProfile",
    "map_w_from_u",
    "map_u_from_w",
    "u_derivatives_from_w",
    "UField",
    "MappedField",
    "inverse_constant",
    "FoldedProfile",
    "fold_to_peak",
    "JumpMatch",
    "match_jump",
    "verify_map_residual",
    "deformed_solution",
    "derivative_sampler",
    "write_field_csv",
    "write_folded_csv",
]


def inverse_constant(epsilon: float) -> complex:
    """``C = (-i)^(1-1/eps) (eps-1)^(1/eps-1) eps^((eps-2)/eps)`` (principal branch)."""
    e = epsilon
    return complex((-1j) ** (1 - 1 / e) * (e - 1) ** (1 / e - 1) * e ** ((e - 2) / e))


def _slope_pair(fn, x):
    one = x * 0 + 1
    r = fn(Dual(x, one))
    return r.value, r.deriv


class MappedProfile:
    """``w(x) = (eps u (i u_x)^(eps-1))^(1/n)`` for a dual-aware ``u``.

    The result accepts numbers, arrays and nested duals, so shock times and
    derivatives of the mapped profile are exact.  Powers use the principal
    branch pointwise.
    """

    def __init__(self, u, system: DeformedSystem, phase: complex = 1.0):
        self.u = u
        self.system = system
        self.phase = phase

    def __call__(self, x):
        eps, n = self.system.epsilon, self.system.n
        u, ux = _slope_pair(self.u, x)
        if self.phase != 1.0:
            u, ux = u * self.phase, ux * self.phase
        if eps == 1 and n == 1:
            return u
        v = eps * u * power(1j * ux, eps - 1)
        return v if n == 1 else power(v, 1.0 / n)

    def __repr__(self):
        return f"MappedProfile({self.u!r}, eps={self.system.epsilon})"


@dataclass
class MappedField:
    """Sampled ``w`` with a flag per point where the root branch is ambiguous."""

    x: np.ndarray
    w: np.ndarray
    ambiguous: np.ndarray


def map_w_from_u(u, system: DeformedSystem, x=None, u_x=None, phase: complex = 1.0):
    """Deformed field ``u`` to undeformed field ``w``.

    * ``u`` callable and ``x`` omitted: returns a :class:`MappedProfile`.
    * ``u`` callable and ``x`` given: ``u`` and ``u_x`` are evaluated exactly
      on ``x`` and mapped as samples.
    * ``u`` and ``u_x`` arrays on ``x``: mapped as samples.

    Sampled fractional powers are continued along ``x``.  Points where the
    power's argument vanishes (so its branch is undetermined) are flagged.
    """
    eps = system.epsilon
    n = system.n
    if callable(u) and x is None:
        return MappedProfile(u, system, phase)
    x = np.asarray(x, dtype=float)
    if callable(u):
        uu, ux = derivatives(u, x, 1)
    else:
        if u_x is None:
            raise ValueError("sampled u needs u_x")
        uu, ux = np.asarray(u, dtype=complex), np.asarray(u_x, dtype=complex)
    uu = uu * phase
    ux = ux * phase
    if eps == 1 and n == 1:
        return MappedField(x, uu.copy(), np.zeros(x.shape, dtype=bool))
    base = 1j * ux
    tiny = 1e-14 * max(1e-300, float(np.max(np.abs(base))))
    amb = np.zeros(x.shape, dtype=bool)
    if not float(eps - 1).is_integer():
        amb |= np.abs(base) <= tiny
    v = eps * uu * track_power(base, eps - 1, x=x)
    if n > 1:
        amb |= np.abs(uu) <= 1e-14 * max(1e-300, float(np.max(np.abs(uu))))
        v = track_power(v, 1.0 / n, x=x)
    return MappedField(x, v, amb)


# ---------------------------------------------------------------------------
# w -> u


@dataclass
class UField:
    """``u = C J^a`` on a grid with the quantities needed for derivatives."""

    x: np.ndarray
    u: np.ndarray
    u_x: np.ndarray
    J: np.ndarray
    wp: np.ndarray          # tracked w^p at the nodes
    w: np.ndarray
    epsilon: float
    anchor: str = "left"
    error: float = 0.0
    converged: bool = True
    diverging: np.ndarray = field(default=None)
    factor: complex = 1.0   # root of unity applied by ``align``
    u_far: complex = complex("nan")   # limit of u at the unanchored infinity

    @property
    def power(self) -> float:
        return 1.0 / (self.epsilon - 1.0)

    @property
    def exponent(self) -> float:
        return (self.epsilon - 1.0) / self.epsilon


def _roots_of_unity(epsilon: float):
    q = Fraction(epsilon).limit_denominator(64).numerator
    return np.exp(2j * math.pi * np.arange(q) / epsilon)


def _align(u, align, epsilon):
    if align is None:
        return 1.0
    cands = _roots_of_unity(epsilon)
    if isinstance(align, str):
        if align != "real":
            raise ValueError("align must be None, 'real' or reference values")
        cost = [np.nansum(np.abs((lam * u).imag)) for lam in cands]
    else:
        ref = np.broadcast_to(np.asarray(align, dtype=complex), u.shape)
        cost = [np.nansum(np.abs(lam * u - ref)) for lam in cands]
    return complex(cands[int(np.argmin(cost))])


def _as_path_fn(w):
    def fn(xs):
        return np.asarray(w(np.asarray(xs, dtype=float)), dtype=complex)
    return fn


def _supersample(x, max_step: float):
    """Grid containing ``x`` with gaps no wider than ``max_step``; indices of ``x``."""
    gaps = np.diff(x)
    pieces = np.maximum(1, np.ceil(gaps / max_step).astype(int))
    if np.all(pieces == 1):
        return x, np.arange(len(x))
    idx = np.concatenate([[0], np.cumsum(pieces)])
    fine = np.empty(idx[-1] + 1)
    for k in np.flatnonzero(pieces > 1):
        fine[idx[k]:idx[k + 1]] = x[k] + gaps[k] * np.arange(pieces[k]) / pieces[k]
    fine[idx] = x
    return fine, idx


def map_u_from_w(w: Callable, epsilon: float, x, lower_bc: complex = 0.0, *,
                 anchor: str = "left", tol: float = 1e-10, tail: bool = True,
                 align=None, max_step: float = 0.02) -> UField:
    """Undeformed field ``w`` (a callable of ``x``) to deformed field ``u``.

    ``anchor="left"`` integrates from ``-inf`` and fixes ``u(-inf) =
    lower_bc``; ``anchor="right"`` integrates from ``+inf`` and fixes
    ``u(+inf) = lower_bc``, continuing the power ``J^a`` from the right
    end so that it starts at the prescribed value.  ``align`` picks the
    ``eps``-th root of unity multiplying ``u``: ``"real"`` makes ``u`` as
    real as possible, an array (or number) makes it closest to reference
    values.  The fractional power of ``J`` is continued on a grid with
    steps of at most ``max_step`` and read off at ``x``, so coarse output
    grids do not lose track of its branch.
    """
    x_out = np.asarray(x, dtype=float)
    if len(x_out) > 1 and np.any(np.diff(x_out) <= 0):
        raise ValueError("x must be strictly increasing")
    x, nodes = _supersample(x_out, max_step) if len(x_out) > 1 else (x_out, np.arange(len(x_out)))
    fn = _as_path_fn(w)
    if epsilon == 1:
        wv = fn(x)
        nan = np.full(x.shape, np.nan + 0j)
        return UField(x, wv + 0, nan, nan, nan, wv, 1.0, anchor, 0.0, True,
                      np.zeros(x.shape, dtype=bool))
    p = 1.0 / (epsilon - 1.0)
    a = (epsilon - 1.0) / epsilon
    C = inverse_constant(epsilon)
    J_bc = 0j if lower_bc == 0 else complex(lower_bc / C) ** (1.0 / a)

    def track(path, v):
        return track_power(v, p, x=path)

    start = None if lower_bc == 0 else lower_bc / C
    if anchor == "left":
        res = cumulative_integral(fn, x, tol=tol, tail=tail, post=track)
        J = J_bc + res.values
        wp = res.integrand
        uJ = track_power(J, a, start=start, x=x)
        rest = _far_tail(fn, x[-1], "right", p, wp[-1], tol, track) if tail else 0j
    elif anchor == "right":
        y = -x[::-1]
        res = cumulative_integral(lambda ys: fn(-ys), y, tol=tol, tail=tail, post=track)
        J = (J_bc - res.values)[::-1]
        wp = res.integrand[::-1]
        uJ = track_power(J[::-1], a, start=start, x=y)[::-1]
        rest = -_far_tail(fn, x[0], "left", p, wp[0], tol, track) if tail else 0j
    else:
        raise ValueError("anchor must be 'left' or 'right'")
    if not res.converged:
        raise QuadratureError(
            f"integral of w^{p:g} did not converge (error estimate {res.error:.3g}); "
            "w may decay too slowly for this epsilon")
    x, J, wp, u = x_out, J[nodes], wp[nodes], (C * uJ)[nodes]
    lam = _align(u, align, epsilon)
    u = lam * u
    end = -1 if anchor == "left" else 0
    with np.errstate(all="ignore"):
        J_far = J[end] + rest
        u_far = complex(u[end] * (J_far / J[end]) ** a) if J[end] != 0 else complex(C * lam * J_far ** a)
        scale = float(np.max(np.abs(J))) if len(J) else 0.0
        diverging = np.abs(J) <= 1e-12 * max(scale, 1e-300)
        ux = np.where(J == 0, np.inf + 0j, a * u * wp / np.where(J == 0, 1.0, J))
    _fill_isolated(ux, diverging)
    return UField(x, u, ux, J, wp, fn(x), float(epsilon), anchor, res.error,
                  res.converged, diverging, lam, u_far)


def _far_tail(fn, x0, side, p, start, tol, track):
    """Half-line integral beyond the unanchored end; NaN where ``w`` is undefined.

    Only the diagnostic ``u_far`` uses it, so a field that exists on part
    of the line (one branch of a folded curve) still maps.
    """
    try:
        return half_line_integral(fn, x0, side, p, start, tol, track)
    except (NoRootsError, ArithmeticError):
        return complex("nan")


def _fill_isolated(v, mask):
    """Replace isolated flagged entries by the mean of their neighbours."""
    for j in np.flatnonzero(mask):
        if 0 < j < len(v) - 1 and not mask[j - 1] and not mask[j + 1]:
            v[j] = 0.5 * (v[j - 1] + v[j + 1])


def u_derivatives_from_w(field: UField, w_x) -> tuple:
    """``(u_x, u_xx)`` from ``w``, ``w_x`` and the running integral ``J``.

    ``u_x = a u w^p / J`` and
    ``u_xx = u_x [ (a - 1) w^p / J + p w_x / w ]``, the second obtained by
    differentiating the first.  Isolated nodes with ``w = 0`` or ``J = 0``
    take the average of their neighbours (the limit is finite there when
    the field is smooth; ``field.diverging`` still flags them).
    """
    w_x = np.asarray(w_x, dtype=complex)
    if field.epsilon == 1:
        return w_x.copy(), np.full(w_x.shape, np.nan + 0j)
    a, p = field.exponent, field.power
    with np.errstate(all="ignore"):
        ux = field.u_x
        uxx = ux * ((a - 1.0) * field.wp / field.J + p * w_x / field.w)
    _fill_isolated(uxx, (field.w == 0) | field.diverging)
    return ux, uxx


# ---------------------------------------------------------------------------
# peak folding


@dataclass
class FoldedProfile:
    """Deformed profile obtained from the multivalued characteristic curve.

    Samples are parametrised by the characteristic foot ``x0``; ``s`` is the
    arc length of the undeformed curve ``(x, w)``.  Samples with
    ``keep == False`` form the eliminated loop ``[s_loop[0], s_loop[1]]``.
    ``charges`` maps ``kappa`` to ``(before, after)`` elimination.
    """

    x0: np.ndarray
    s: np.ndarray
    x: np.ndarray
    w: np.ndarray
    u: np.ndarray
    keep: np.ndarray
    loop_x0: Optional[tuple]
    s_loop: Optional[tuple]
    peak: Optional[tuple]
    charges: dict

    @property
    def folded(self) -> bool:
        return self.loop_x0 is not None

    def retained(self):
        """``(x, u)`` of the single-valued profile."""
        return self.x[self.keep], self.u[self.keep]


def _crossing(xa, ua, xb, ub):
    """First intersection of two real polylines parametrised along the curve."""
    best = None
    for i in range(len(xa) - 1):
        p1 = np.array([xa[i], ua[i]])
        d1 = np.array([xa[i + 1] - xa[i], ua[i + 1] - ua[i]])
        lo, hi = min(xa[i], xa[i + 1]), max(xa[i], xa[i + 1])
        cand = np.flatnonzero((np.maximum(xb[:-1], xb[1:]) >= lo) & (np.minimum(xb[:-1], xb[1:]) <= hi))
        for j in cand:
            p2 = np.array([xb[j], ub[j]])
            d2 = np.array([xb[j + 1] - xb[j], ub[j + 1] - ub[j]])
            den = d1[0] * d2[1] - d1[1] * d2[0]
            if den == 0:
                continue
            r = p2 - p1
            sa = (r[0] * d2[1] - r[1] * d2[0]) / den
            sb = (r[0] * d1[1] - r[1] * d1[0]) / den
            if 0 <= sa <= 1 and 0 <= sb <= 1:
                if best is None or (i, sa) < best[:2]:
                    best = (i, sa, j, sb)
    return best


def fold_to_peak(w0, epsilon: float, t: float, f=None, x0_window=(-10.0, 10.0),
                 points: int = 8001, kappas=None, tol: float = 1e-11) -> FoldedProfile:
    """Peaked single-valued deformed profile from the characteristic curve.

    The curve ``x(x0) = x0 + f(w0(x0)) t``, ``w = w0(x0)`` is mapped to
    ``u(x0) = C J(x0)^a`` with ``J(x0) = int w0^p (1 + t g'(x0)) dx0``
    (``g = f(w0)``), the root ``w0^p`` being continued along the curve.  The
    resulting curve in the ``(x, u)`` plane crosses itself after the shock;
    the loop between the two crossing points is removed.  ``u`` is aligned
    to be as real as possible.
    """
    f = FSpec.coerce(f)
    if not f.is_identity:
        raise ValueError("fold_to_peak needs f(w) = w")
    p = 1.0 / (epsilon - 1.0)
    a = (epsilon - 1.0) / epsilon
    C = inverse_constant(epsilon)
    if kappas is None:
        kappas = (p, 2.0)

    def gp(x0):
        return derivatives(lambda z: f(w0(z)), x0, 1)[1]

    def integrand(x0):
        return track_power(w0(np.asarray(x0, dtype=complex)), p, x=x0) * (1.0 + t * gp(x0))

    x0 = np.linspace(x0_window[0], x0_window[1], points)
    res = cumulative_integral(integrand, x0, tol=tol, tail=True)
    J = res.values
    xc, wc = push_forward(w0, f, t, x0)
    xc = xc.real
    u = C * track_power(J, a, x=x0)
    u = _align(u, "real", epsilon) * u
    dx = np.diff(xc)
    dw = np.abs(np.diff(wc))
    s = np.concatenate([[0.0], np.cumsum(np.hypot(dx, dw))])
    keep = np.ones(points, dtype=bool)
    loop = None
    s_loop = None
    peak = None
    back = np.flatnonzero(dx < 0)
    if back.size:
        ia, ib = back[0], back[-1] + 1          # folds: x turns back at ia, forward at ib
        ur = u.real
        hit = _crossing(xc[: ia + 1][::-1], ur[: ia + 1][::-1], xc[ib:], ur[ib:])
        if hit is not None:
            i, sa, j, sb = hit
            k1 = ia - i                          # index on the reversed left part
            x01 = x0[k1] + sa * (x0[k1 - 1] - x0[k1])
            x02 = x0[ib + j] + sb * (x0[ib + j + 1] - x0[ib + j])
            x01, x02 = _polish_loop(w0, f, t, x0, res, u, C, a, p, x01, x02)
            loop = (float(x01), float(x02))
            keep = (x0 <= x01) | (x0 >= x02)
            s1 = float(np.interp(x01, x0, s))
            s4 = float(np.interp(x02, x0, s))
            s_loop = (s1, s4)
            xp = float(np.interp(x01, x0, xc))
            up = complex(np.interp(x01, x0, u.real) + 1j * np.interp(x01, x0, u.imag))
            peak = (xp, up)

    charges = {}
    for kappa in kappas:
        before = _charge_quad(w0, f, t, kappa, x0_window, None)
        after = _charge_quad(w0, f, t, kappa, x0_window, loop)
        charges[float(kappa)] = (before, after)
    return FoldedProfile(x0, s, xc, wc, u, keep, loop, s_loop, peak, charges)


def _polish_loop(w0, f, t, x0, res, u, C, a, p, x01, x02):
    """Solve ``x(a) = x(b)``, ``Re u(a) = Re u(b)`` from a polyline estimate.

    ``u`` between grid nodes comes from one Gauss-Kronrod panel added to the
    cumulative integral, with the root branches continued from the nodes.
    """
    from scipy.optimize import fsolve

    from .numerics import gk15, _branch_factors

    facs_p = _branch_factors(p)
    facs_a = _branch_factors(a)

    def xpos(q):
        return float((q + f(w0(complex(q))) * t).real)

    def uval(q):
        k = int(np.clip(np.searchsorted(x0, q) - 1, 0, len(x0) - 2))
        node = x0[k]

        def integrand(z):
            g, g1 = derivatives(lambda y: f(w0(y)), np.asarray(z, dtype=complex), 1)
            return np.exp(p * np.log(g + 0j)) * (1.0 + t * g1)

        ref = integrand(np.array([node]))[0]
        fac = facs_p[int(np.argmin(np.abs(ref * facs_p - res.integrand[k])))] if ref != 0 else 1.0
        part = gk15(lambda z: integrand(z) * fac, node, q)[0] if q != node else 0j
        Jq = res.values[k] + part
        val = C * np.exp(a * np.log(Jq + 0j))
        return complex(val * facs_a[int(np.argmin(np.abs(val * facs_a - u[k])))])

    def eqs(v):
        qa, qb = v
        return [xpos(qa) - xpos(qb), (uval(qa) - uval(qb)).real]

    sol, info, ier, _ = fsolve(eqs, [x01, x02], full_output=True, xtol=1e-14)
    if ier == 1 and abs(sol[0] - x01) < 1e-2 and abs(sol[1] - x02) < 1e-2:
        return float(sol[0]), float(sol[1])
    return x01, x02


def _charge_quad(w0, f, t, kappa, window, loop, tol=1e-12):
    """``int f(w)^kappa dx`` along the whole curve, omitting the loop in ``x0``.

    The curve is traversed in ``x0`` from ``-inf`` to ``+inf``; the right
    tail is included by integrating one extra unit panel plus the mapped
    half-line on the reflected axis.
    """

    def integrand(x0):
        g, g1 = derivatives(lambda z: f(w0(z)), np.asarray(x0, dtype=complex), 1)
        return track_power(g, kappa, x=x0) * (1.0 + t * g1)

    x_hi = window[1]
    grid = [window[0], x_hi] if loop is None else [window[0], loop[0], loop[1], x_hi]
    res = cumulative_integral(integrand, np.array(grid), tol=tol, tail=True)
    tail = half_line_integral(integrand, x_hi, "right", kappa, res.integrand[-1], tol)
    total = res.values[-1] + tail
    if loop is not None:
        total -= res.values[2] - res.values[1]
    return complex(total)


# ---------------------------------------------------------------------------
# complex jumps


@dataclass
class JumpMatch:
    """Left and right deformed solutions and where their parts coincide."""

    x: np.ndarray
    u_left: np.ndarray
    u_right: np.ndarray
    x_re_cross: Optional[float]
    x_im_cross: Optional[float]
    re_crossings: list
    im_crossings: list
    continuous: bool


def _refine_cross(x, d, fn, xtol=1e-13):
    """Refine a sign change of ``fn`` bracketed on the sample grid."""
    from scipy.optimize import brentq

    out = []
    for k in range(len(d) - 1):
        if d[k] == 0:
            out.append(float(x[k]))
        elif d[k] * d[k + 1] < 0:
            out.append(float(brentq(fn, x[k], x[k + 1], xtol=xtol)))
    return out


def match_jump(bs: BranchSet, epsilon: float, k: complex, *, tol: float = 1e-10,
               cross_tol: float = 1e-6, bc=(0.0, 0.0)) -> JumpMatch:
    """Deformed solutions built from the left- and right-vanishing branches.

    ``u_left`` comes from the branch with ``w(-inf) = bc[0]`` and
    ``u(-inf) = 0``; ``u_right`` from the branch with ``w(+inf) = bc[1]``
    and ``u(+inf) = k``.  The solution is continuous only where ``Re`` and
    ``Im`` of the two coincide at the same point.
    """
    left = _edge_branch(bs, complex(bc[0]), "left", 0.1)
    right = _edge_branch(bs, complex(bc[1]), "right", 0.1)
    x = bs.grid.x
    fl = BranchField.from_branchset(bs, left)
    fr = BranchField.from_branchset(bs, right)
    ul = map_u_from_w(fl, epsilon, x, 0.0, anchor="left", tol=tol)
    ur = map_u_from_w(fr, epsilon, x, k, anchor="right", tol=tol)
    d = ul.u - ur.u
    if left == right:
        return JumpMatch(x, ul.u, ur.u, None, None, [], [], True)

    def diff_at(xq):
        # values at one abscissa through the same quadrature, anchored at the grid
        xs = np.sort(np.append(x, xq))
        a = map_u_from_w(fl, epsilon, xs, 0.0, anchor="left", tol=tol)
        b = map_u_from_w(fr, epsilon, xs, k, anchor="right", tol=tol)
        j = int(np.searchsorted(xs, xq))
        return a.u[j] - b.u[j]

    re_c = _interp_cross(x, d.real)
    im_c = _interp_cross(x, d.imag)
    re_c = [_polish_cross(lambda q: diff_at(q).real, x, c) for c in re_c]
    im_c = [_polish_cross(lambda q: diff_at(q).imag, x, c) for c in im_c]
    # report the closest Re/Im pair; with only one kind present, its first member
    if re_c and im_c:
        xre, xim = min(((r, i) for r in re_c for i in im_c), key=lambda ri: abs(ri[0] - ri[1]))
    else:
        xre = re_c[0] if re_c else None
        xim = im_c[0] if im_c else None
    cont = xre is not None and xim is not None and abs(xre - xim) < cross_tol
    return JumpMatch(x, ul.u, ur.u, xre, xim, re_c, im_c, bool(cont))


def _polish_cross(fn, x, c, iters=30):
    """Secant refinement of a crossing first located on the grid."""
    h = x[1] - x[0]
    a, b = c - 0.5 * h, c + 0.5 * h
    fa, fb = fn(a), fn(b)
    if fa * fb > 0:
        return c
    for _ in range(iters):
        m = b - fb * (b - a) / (fb - fa) if fb != fa else 0.5 * (a + b)
        if not a < m < b:
            m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0 or b - a < 1e-13:
            return float(m)
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return float(0.5 * (a + b))


def derivative_sampler(w0, epsilon: float, f=None, window=(-20.0, 20.0),
                       points: int = 8001, tol: float = 1e-10):
    """``sampler(t, x) -> (u_x, u_xx)`` of the deformed field before the shock.

    The undeformed field at time ``t`` comes from the push-forward curve of
    the real profile ``w0``; ``u`` and its derivatives follow from the
    inverse map.  For ``epsilon = 1`` the pair is ``(w_x, nan)``.
    """
    f = FSpec.coerce(f)

    def sampler(t, x):
        x = np.asarray(x, dtype=float)
        field = EvolvedField(w0, f, t, window, points)
        w = field(x)
        w_x = characteristic_slope(w0, f, t, x, w)
        if epsilon == 1:
            return w_x, np.full(x.shape, np.nan + 0j)
        uf = map_u_from_w(field, epsilon, x, tol=tol)
        return u_derivatives_from_w(uf, w_x)

    return sampler


def deformed_solution(u0, system: DeformedSystem, t: float, x, *, window=(-20.0, 20.0),
                      points: int = 8001, tol: float = 1e-10) -> UField:
    """Deformed field ``u(x, t)`` before the shock, via the undeformed equation.

    ``u0`` is mapped to ``w0``, evolved along characteristics, and mapped
    back with ``u(-inf) = 0``.  The root of unity left free by the inverse
    map is fixed by matching ``u0`` on the same grid.
    """
    x = np.asarray(x, dtype=float)
    w0 = MappedProfile(u0, system)
    field = evolved_field(w0, system.f, t, window, points)
    ref = np.asarray(u0(x.astype(complex)), dtype=complex)
    return map_u_from_w(field, system.epsilon, x, tol=tol, align=ref)


# ---------------------------------------------------------------------------
# PDE residual


def verify_map_residual(u_of_t: Callable, system: DeformedSystem, t: float, x,
                        dt: float = 1e-4) -> float:
    """``max |u_t - i f(u) (i u_x)^eps|`` over interior nodes.

    ``u_of_t(t)`` returns ``u`` sampled on the uniform grid ``x``.  Both
    derivatives are second-order centred differences.
    """
    x = np.asarray(x, dtype=float)
    h = x[1] - x[0]
    up = np.asarray(u_of_t(t + dt), dtype=complex)
    um = np.asarray(u_of_t(t - dt), dtype=complex)
    u = np.asarray(u_of_t(t), dtype=complex)
    ut = (up - um) / (2 * dt)
    ux = (u[2:] - u[:-2]) / (2 * h)
    ui = u[1:-1]
    fu = system.f(ui)
    rhs = 1j * fu * power(1j * ux, system.epsilon) if ux.size else ux
    r = np.abs(ut[1:-1] - rhs)
    return float(np.max(r)) if r.size else 0.0


# ---------------------------------------------------------------------------
# export


def write_field_csv(path, x, u, u_x=None):
    """Columns ``x, re_u, im_u, re_ux, im_ux``."""
    u = np.asarray(u, dtype=complex)
    ux = np.full(u.shape, np.nan + 0j) if u_x is None else np.asarray(u_x, dtype=complex)
    rows = zip(x, u.real, u.imag, ux.real, ux.imag)
    return write_csv(path, ["x", "re_u", "im_u", "re_ux", "im_ux"], rows)


def write_folded_csv(path, prof: FoldedProfile):
    """Columns ``s, x0, x, re_w, im_w, re_u, im_u, kept``."""
    rows = zip(prof.s, prof.x0, prof.x, prof.w.real, prof.w.imag, prof.u.real, prof.u.imag,
               prof.keep.astype(int))
    return write_csv(path, ["s", "x0", "x", "re_w", "im_w", "re_u", "im_u", "kept"], rows)
