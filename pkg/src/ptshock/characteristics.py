"""Characteristic solution of ``w_t + f(w) w_x = 0``.

The implicit relation ``w = w0(x - f(w) t)`` is solved by Newton iteration
in complex ``w``.  Roots at every grid node are grouped into branches by
continuity in ``x``; a physical single-valued field is then selected from
the branches by its asymptotic boundary values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .io import write_csv
from .model import BranchSet, FSpec, GridSpec
from .profile_dsl import derivatives

log = logging.getLogger(__name__)

ROOT_TOL = 1e-10
MAX_NEWTON = 60
DEDUPE_RADIUS = 1e-7


class NoRootsError(RuntimeError):
    """No seed converged to a root of the implicit relation."""


class BranchSelectionError(ValueError):
    """No branch reaches a prescribed asymptotic limit."""


def _fvals(f: FSpec, w):
    fw, dfw = derivatives(f, w, 1)
    return fw, dfw


def is_real_profile(w0, f=None, window=(-5.0, 5.0), samples: int = 41) -> bool:
    """True when ``f(w0(x))`` is real on a test segment of the real axis."""
    f = FSpec.coerce(f)
    x = np.linspace(window[0], window[1], samples)
    try:
        g = f(w0(x.astype(complex)))
    except ArithmeticError:
        x = x + 1e-3
        g = f(w0(x.astype(complex)))
    g = np.asarray(g)
    scale = max(1.0, float(np.max(np.abs(g))))
    return bool(np.max(np.abs(g.imag)) <= 1e-12 * scale)


def push_forward(w0, f, t: float, x0):
    """Characteristic curve ``(x0 + f(w0(x0)) t, w0(x0))``."""
    f = FSpec.coerce(f)
    x0 = np.asarray(x0, dtype=complex)
    w = w0(x0)
    if not isinstance(w, np.ndarray):
        w = np.full(x0.shape, w, dtype=complex)
    return x0 + f(w) * t, w


def residual(w0, f, x, t, w):
    """``|w - w0(x - f(w) t)|``."""
    f = FSpec.coerce(f)
    return np.abs(w - w0(np.asarray(x, dtype=complex) - f(w) * t))


def newton_implicit(w0, f, x, t, seeds, tol: float = ROOT_TOL, max_iter: int = MAX_NEWTON):
    """Vectorized Newton for ``w - w0(x - f(w) t) = 0``.

    ``x`` and ``seeds`` broadcast together.  Returns ``(w, ok)`` where ``ok``
    marks converged entries with residual at most ``tol``.
    """
    f = FSpec.coerce(f)
    x, w = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(seeds, dtype=complex))
    x = x.ravel().copy()
    w = w.ravel().copy()
    active = np.ones(w.shape, dtype=bool)
    ok = np.zeros(w.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            wi = w[idx]
            fw, dfw = _fvals(f, wi)
            xi = x[idx] - fw * t
            try:
                g, dg = derivatives(w0, xi, 1)
            except ArithmeticError:
                g, dg = _safe_derivs(w0, xi)
            F = wi - g
            J = 1.0 + t * dg * dfw
            step = F / J
            big = np.abs(step) > 10.0 * (1.0 + np.abs(wi))
            step = np.where(big, step * 10.0 * (1.0 + np.abs(wi)) / np.abs(step), step)
            wn = wi - step
            bad = ~np.isfinite(wn)
            w[idx] = wn
            conv = (np.abs(step) <= 1e-14 * (1.0 + np.abs(wn))) | (np.abs(F) <= 1e-3 * tol)
            done = conv | bad
            active[idx[done]] = False
        res = residual(w0, f, x, t, w)
    ok = np.isfinite(w) & (res <= tol)
    return w, ok


def _safe_derivs(w0, xi):
    g = np.full(xi.shape, np.nan + 0j)
    dg = np.full(xi.shape, np.nan + 0j)
    for k, z in enumerate(xi):
        try:
            a, b = derivatives(w0, z, 1)
            g[k], dg[k] = a, b
        except ArithmeticError:
            pass
    return g, dg


def _dedupe(roots, radius=DEDUPE_RADIUS):
    out = []
    for r in sorted(roots, key=lambda z: (round(z.real, 9), round(z.imag, 9))):
        if all(abs(r - q) > radius for q in out):
            out.append(r)
    return out


def solve_implicit(w0, f, x: float, t: float, seeds=None, real_only: bool = False):
    """All distinct roots of ``w = w0(x - f(w) t)`` reachable from ``seeds``.

    Non-converging seeds are dropped.  Raises :class:`NoRootsError` when
    nothing converges.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if seeds is None:
        seeds = _box_seeds()
    seeds = np.concatenate([np.atleast_1d(np.asarray(seeds, dtype=complex)),
                            np.atleast_1d(w0(complex(x)))])
    w, ok = newton_implicit(w0, f, complex(x), t, seeds)
    roots = [complex(r) for r in w[ok]]
    if real_only:
        roots = [complex(r.real) for r in roots if abs(r.imag) <= 1e-9 * (1 + abs(r))]
    roots = _dedupe(roots)
    if not roots:
        raise NoRootsError(f"no root found at x={x}, t={t}")
    return roots


def _box_seeds(half_width: float = 2.0, n: int = 5):
    s = np.linspace(-half_width, half_width, n)
    return (s[:, None] + 1j * s[None, :]).ravel()


def _curve_seeds(w0, f, grid: GridSpec, t: float, oversample: int = 4):
    """Seeds from sign changes of ``x(x0) - x_j`` along the real push-forward."""
    f = FSpec.coerce(f)
    xs = grid.x
    gmax = float(np.max(np.abs(f(w0(xs.astype(complex))))))
    margin = gmax * t + 1.0
    x0 = np.linspace(grid.x_min - margin, grid.x_max + margin,
                     oversample * grid.points + 1)
    xc, wc = push_forward(w0, f, t, x0)
    xc = xc.real
    seeds = [[] for _ in xs]
    lo = np.minimum(xc[:-1], xc[1:])
    hi = np.maximum(xc[:-1], xc[1:])
    j0 = np.searchsorted(xs, lo, side="left")
    j1 = np.searchsorted(xs, hi, side="right")
    for k in np.flatnonzero(j1 > j0):
        for j in range(j0[k], j1[k]):
            d = xc[k + 1] - xc[k]
            s = 0.5 if d == 0 else (xs[j] - xc[k]) / d
            seeds[j].append(wc[k] + s * (wc[k + 1] - wc[k]))
    return seeds


def enumerate_branches(w0, f, grid: GridSpec, t: float, real: Optional[bool] = None,
                       box: float = 2.0, box_n: int = 5) -> BranchSet:
    """Roots at every grid node, grouped into continuous branches."""
    f = FSpec.coerce(f)
    if real is None:
        real = is_real_profile(w0, f, (grid.x_min, grid.x_max))
    xs = grid.x
    n = len(xs)
    node_seeds = [list(s) for s in _curve_seeds(w0, f, grid, t)] if real else [[] for _ in xs]
    box_seeds = _box_seeds(box, box_n)
    w0x = w0(xs.astype(complex))
    for j in range(n):
        node_seeds[j].extend(box_seeds)
        node_seeds[j].append(w0x[j])

    roots = [[] for _ in range(n)]

    def run(seed_lists):
        owner = np.concatenate([[j] * len(s) for j, s in enumerate(seed_lists)]).astype(int)
        if owner.size == 0:
            return False
        seeds = np.concatenate([np.asarray(s, dtype=complex) for s in seed_lists if len(s)])
        w, ok = newton_implicit(w0, f, xs[owner], t, seeds)
        added = False
        for j, r in zip(owner[ok], w[ok]):
            r = complex(r)
            if real:
                if abs(r.imag) > 1e-9 * (1 + abs(r)):
                    continue
                r = complex(r.real)
            if all(abs(r - q) > DEDUPE_RADIUS for q in roots[j]):
                roots[j].append(r)
                added = True
        return added

    def run_one(j, seed):
        w, ok = newton_implicit(w0, f, xs[j], t, np.asarray(seed, dtype=complex))
        for r in w[ok]:
            r = complex(r)
            if real:
                if abs(r.imag) > 1e-9 * (1 + abs(r)):
                    continue
                r = complex(r.real)
            if all(abs(r - q) > DEDUPE_RADIUS for q in roots[j]):
                roots[j].append(r)

    run(node_seeds)
    # continuation sweeps: a node with fewer roots than its neighbour is
    # re-seeded from the neighbour's roots
    for order in (range(1, n), range(n - 2, -1, -1)):
        for j in order:
            k = j - 1 if order.step == 1 else j + 1
            if len(roots[k]) > len(roots[j]):
                run_one(j, roots[k])
    for j in range(n):
        roots[j] = _dedupe(roots[j])

    samples, folds = _group(xs, roots)
    for x, before, after in folds:
        log.info("branch count changes from %d to %d near x=%.6g", before, after, x)
    return BranchSet(grid, t, samples, tuple(folds), w0=w0, f=f)


def _group(xs, roots):
    samples = []
    folds = []
    next_id = 0
    prev = []
    for j, rs in enumerate(roots):
        if j == 0:
            cur = [(k, r) for k, r in enumerate(sorted(rs, key=lambda z: (z.real, z.imag)))]
            next_id = len(cur)
        else:
            cur = []
            if prev and rs:
                cost = np.abs(np.array([p for _, p in prev])[:, None] - np.array(rs)[None, :])
                pi, ri = linear_sum_assignment(cost)
                scale = np.maximum(1.0, np.abs(np.array(rs)))
                used = set()
                for a, b in zip(pi, ri):
                    if cost[a, b] <= 0.5 * scale[b]:
                        cur.append((prev[a][0], rs[b]))
                        used.add(b)
            else:
                used = set()
            for b, r in enumerate(rs):
                if b not in used:
                    cur.append((next_id, r))
                    next_id += 1
            if len(rs) != len(prev):
                folds.append((float(0.5 * (xs[j - 1] + xs[j])), len(prev), len(rs)))
        cur.sort()
        samples.append(tuple(cur))
        prev = cur
    return tuple(samples), folds


@dataclass
class PhysicalField:
    """Single-valued selection from a :class:`BranchSet`.

    ``rule`` is ``"unique"`` (no jump), ``"equal_charge"`` (real fields,
    jump placed to conserve ``I_1``) or ``"midpoint_convention"`` (complex
    fields; the jump sits halfway between the Re and Im crossings and is a
    labelling convention, not a derived position).
    """

    x: np.ndarray
    w: np.ndarray
    left_branch: int
    right_branch: int
    x_jump: Optional[float] = None
    rule: str = "unique"
    crossings: dict = field(default_factory=dict)


def _edge_branch(bs: BranchSet, limit: complex, side: str, tol: float) -> int:
    node = bs.samples[0] if side == "left" else bs.samples[-1]
    if not node:
        raise BranchSelectionError(f"no roots at the {side} edge")
    dist = [(abs(w - limit), b) for b, w in node]
    d, b = min(dist)
    if d > tol:
        raise BranchSelectionError(
            f"no branch approaches {limit} at the {side} edge (closest {d:.3g})")
    return b


def _interp_cross(x, d):
    """Abscissae where the real sequence ``d`` changes sign (linear interpolation)."""
    out = []
    for k in range(len(d) - 1):
        if d[k] == 0:
            out.append(float(x[k]))
        elif d[k] * d[k + 1] < 0:
            out.append(float(x[k] - d[k] * (x[k + 1] - x[k]) / (d[k + 1] - d[k])))
    return out


def select_physical_branch(bs: BranchSet, bc=(0.0, 0.0), target_charge=None,
                           tol: float = 0.1) -> PhysicalField:
    """Pick the branch meeting the left limit, then the one meeting the right.

    Real fields with a fold are joined where ``I_1 = \\int f(w) dx`` equals
    ``target_charge`` (default: the signed charge of the full multivalued
    curve, which is the equal-area rule).  Complex fields are joined at the
    midpoint of the Re and Im crossings of the two branches.
    """
    left = _edge_branch(bs, complex(bc[0]), "left", tol)
    right = _edge_branch(bs, complex(bc[1]), "right", tol)
    xl, wl = bs.branch(left)
    xs = bs.grid.x
    if left == right and len(xl) == len(xs):
        return PhysicalField(xs, wl, left, right)
    xr, wr = bs.branch(right)
    lo, hi = max(xl[0], xr[0]), min(xl[-1], xr[-1])
    if lo > hi:
        raise BranchSelectionError("left and right branches do not overlap")
    real = bool(np.all(np.abs(wl.imag) == 0) and np.all(np.abs(wr.imag) == 0))
    f = bs.f if bs.f is not None else FSpec(1)

    if real:
        target = target_charge
        if target is None:
            target = signed_charge(bs, f)
        fl = f(wl.astype(complex)).real
        fr = f(wr.astype(complex)).real
        cl = np.concatenate([[0.0], np.cumsum(0.5 * (fl[1:] + fl[:-1]) * np.diff(xl))])
        cr = np.concatenate([np.cumsum((0.5 * (fr[1:] + fr[:-1]) * np.diff(xr))[::-1])[::-1], [0.0]])

        def charge_at(xj):
            return float(np.interp(xj, xl, cl) + np.interp(xj, xr, cr)) - complex(target).real

        a, b = lo, hi
        fa, fb = charge_at(a), charge_at(b)
        if fa * fb > 0:
            xj = a if abs(fa) < abs(fb) else b
        else:
            xj = brentq(charge_at, a, b, xtol=1e-14)
        rule = "equal_charge"
        crossings = {"charge_residual": charge_at(xj)}
    else:
        mask = (xs >= lo) & (xs <= hi)
        xo = xs[mask]
        a = np.interp(xo, xl, wl.real) + 1j * np.interp(xo, xl, wl.imag)
        b = np.interp(xo, xr, wr.real) + 1j * np.interp(xo, xr, wr.imag)
        re_c = _interp_cross(xo, (a - b).real)
        im_c = _interp_cross(xo, (a - b).imag)
        centre = float(xo[int(np.argmin(np.abs(a - b)))])
        xre = min(re_c, key=lambda v: abs(v - centre)) if re_c else None
        xim = min(im_c, key=lambda v: abs(v - (centre if xre is None else xre))) if im_c else None
        picks = [v for v in (xre, xim) if v is not None]
        # with one crossing missing the jump sits at the other one; with
        # neither, at the closest approach of the two branches
        xj = float(np.mean(picks)) if picks else centre
        rule = "midpoint_convention"
        crossings = {"re": re_c, "im": im_c, "closest": centre}

    w = np.empty(len(xs), dtype=complex)
    w[:] = np.nan
    lmask = xs <= xj
    rmask = ~lmask
    w[lmask] = np.interp(xs[lmask], xl, wl.real) + 1j * np.interp(xs[lmask], xl, wl.imag)
    w[rmask] = np.interp(xs[rmask], xr, wr.real) + 1j * np.interp(xs[rmask], xr, wr.imag)
    return PhysicalField(xs, w, left, right, float(xj), rule, crossings)


def signed_charge(bs: BranchSet, f: FSpec) -> complex:
    """``\\int f(w) dx`` along the whole multivalued curve (traversal-signed).

    Each branch contributes its trapezoid integral with the sign of the
    direction in which the curve traverses it: branches reaching a fold at
    their left end run backwards.
    """
    total = 0j
    xs = bs.grid.x
    for bid in bs.branch_ids:
        xb, wb = bs.branch(bid)
        if len(xb) < 2:
            continue
        fb = f(wb.astype(complex))
        val = np.sum(0.5 * (fb[1:] + fb[:-1]) * np.diff(xb))
        starts_inside = xb[0] > xs[0]
        ends_inside = xb[-1] < xs[-1]
        sign = -1.0 if (starts_inside and ends_inside) else 1.0
        total += sign * val
    return total


class BranchField:
    """Callable ``w(x)`` following one branch, refined by Newton.

    Seeds come from linear interpolation of the branch samples; outside the
    sampled range the seed is ``w0(x)``, which is the right choice on the
    side where the branch vanishes asymptotically.
    """

    def __init__(self, w0, f, t: float, x_ref, w_ref):
        self.w0 = w0
        self.f = FSpec.coerce(f)
        self.t = t
        order = np.argsort(x_ref)
        self.x_ref = np.asarray(x_ref, dtype=float)[order]
        self.w_ref = np.asarray(w_ref, dtype=complex)[order]

    @classmethod
    def from_branchset(cls, bs: BranchSet, bid: int):
        xb, wb = bs.branch(bid)
        return cls(bs.w0, bs.f, bs.t, xb, wb)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        inside = (x >= self.x_ref[0]) & (x <= self.x_ref[-1])
        seed = np.where(
            inside,
            np.interp(x, self.x_ref, self.w_ref.real) + 1j * np.interp(x, self.x_ref, self.w_ref.imag),
            self.w0(x.astype(complex)),
        )
        w, ok = newton_implicit(self.w0, self.f, x, self.t, seed)
        if not np.all(ok):
            bad = np.flatnonzero(~ok)
            raise NoRootsError(f"Newton failed at {len(bad)} points, e.g. x={x[bad[0]]}")
        return w[0] if scalar else w


class EvolvedField(BranchField):
    """Single-valued evolved field, valid before the first shock.

    Inside the sampled range the foot ``x0`` of the characteristic through
    ``x`` is found by safeguarded Newton iteration on the monotone map
    ``x0 -> x0 + f(w0(x0)) t``, bracketed by the samples; this stays robust
    arbitrarily close to the shock time.
    """

    def __init__(self, w0, f, t: float, window=(-20.0, 20.0), points: int = 8001):
        f = FSpec.coerce(f)
        x0 = np.linspace(window[0], window[1], points)
        xc, wc = push_forward(w0, f, t, x0)
        xr = xc.real
        # strictly increasing subsequence (a running maximum past a fold)
        keep = np.concatenate([[True], xr[1:] > np.maximum.accumulate(xr)[:-1]])
        super().__init__(w0, f, t, xr[keep], wc[keep])
        self.x0_ref = x0[keep]

    def _g(self, x0):
        g, g1 = derivatives(lambda z: self.f(self.w0(z)), x0.astype(complex), 1)
        return g.real, g1.real

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        inside = (x >= self.x_ref[0]) & (x <= self.x_ref[-1])
        out = np.empty(x.shape, dtype=complex)
        if np.any(~inside):
            out[~inside] = BranchField.__call__(self, x[~inside])
        if np.any(inside):
            xi = x[inside]
            k = np.clip(np.searchsorted(self.x_ref, xi) - 1, 0, len(self.x_ref) - 2)
            lo, hi = self.x0_ref[k].copy(), self.x0_ref[k + 1].copy()
            s = (xi - self.x_ref[k]) / (self.x_ref[k + 1] - self.x_ref[k])
            z = lo + s * (hi - lo)
            t = self.t
            act = np.arange(xi.size)
            for _ in range(100):
                za, la, ha = z[act], lo[act], hi[act]
                g, g1 = self._g(za)
                F = za + g * t - xi[act]
                la = np.where(F < 0, za, la)
                ha = np.where(F > 0, za, ha)
                with np.errstate(all="ignore"):
                    zn = za - F / (1.0 + t * g1)
                bad = ~np.isfinite(zn) | (zn <= la) | (zn >= ha)
                zn = np.where(bad, 0.5 * (la + ha), zn)
                zn = np.where(F == 0, za, zn)
                done = (np.abs(zn - za) <= 4e-16 * (1.0 + np.abs(za))) | (F == 0)
                z[act], lo[act], hi[act] = zn, la, ha
                act = act[~done]
                if act.size == 0:
                    break
            out[inside] = self.w0(z.astype(complex))
        return out[0] if scalar else out


def characteristic_slope(w0, f, t: float, x, w):
    """``w_x`` of the characteristic solution at ``(x, t)`` with value ``w``.

    ``w_x = w0'(x0) / (1 + t f'(w) w0'(x0))`` with ``x0 = x - f(w) t``.
    """
    f = FSpec.coerce(f)
    w = np.asarray(w, dtype=complex)
    fw, dfw = _fvals(f, w)
    x0 = np.asarray(x, dtype=complex) - fw * t
    _, d0 = derivatives(w0, x0, 1)
    with np.errstate(all="ignore"):
        return d0 / (1.0 + t * dfw * d0)


def evolved_field(w0, f, t: float, window=(-20.0, 20.0), points: int = 8001):
    """Single-valued pre-shock field ``w(., t)`` as a callable.

    Real profiles use the push-forward curve; complex ones the branch that
    vanishes at both ends of a branch enumeration.
    """
    f = FSpec.coerce(f)
    if t == 0:
        return lambda x: w0(np.asarray(x, dtype=complex))
    if is_real_profile(w0, f, window):
        return EvolvedField(w0, f, t, window, points)
    bs = enumerate_branches(w0, f, GridSpec(window[0], window[1], min(points, 2001)), t)
    sel = select_physical_branch(bs)
    if sel.x_jump is not None:
        raise ValueError(f"t={t} is past the shock: the field has a jump at {sel.x_jump:.6g}")
    return BranchField.from_branchset(bs, sel.left_branch)


def write_branches_csv(path, bs: BranchSet):
    """Columns ``x, branch, re_w, im_w``, one row per root."""
    rows = ((x, b, complex(w).real, complex(w).imag) for x, b, w in bs.rows())
    return write_csv(path, ["x", "branch", "re_w", "im_w"], rows)
