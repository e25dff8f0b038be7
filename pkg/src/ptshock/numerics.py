"""Branch-tracked powers and adaptive cumulative quadrature."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "track_power",
    "max_phase_step",
    "cumulative_integral",
    "CumulativeResult",
    "QuadratureError",
    "gk15",
    "half_line_integral",
]

# Gauss-Kronrod 15/7 abscissae and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_gauss_full = np.zeros(15)
_gauss_full[[1, 3, 5]] = _WG[:3]
_gauss_full[[9, 11, 13]] = _WG[2::-1]
_gauss_full[7] = _WG[3]
GAUSS_W = _gauss_full


def gk15(fn, a: float, b: float):
    """Single-panel Gauss-Kronrod estimate and error for a vectorized ``fn``."""
    half = 0.5 * (b - a)
    v = fn(0.5 * (a + b) + half * NODES)
    k = half * np.dot(KRONROD_W, v)
    g = half * np.dot(GAUSS_W, v)
    return k, abs(k - g)


def _branch_factors(p: float):
    frac = Fraction(p).limit_denominator(64)
    if abs(float(frac) - p) < 1e-12:
        den = frac.denominator
        ks = range(-(den // 2 + 1), den // 2 + 2)
    else:
        ks = range(-3, 4)
    ks = sorted(ks, key=abs)
    return np.exp(2j * math.pi * np.array(ks) * p)


def track_power(z, p: float, start=None, x=None, rel_jump: float = 0.1):
    """``z**p`` along an ordered path, continued across branch cuts and zeros.

    The principal power is used at the first node (or the branch nearest to
    ``start``); afterwards each node takes the branch closest to the linear
    extrapolation (in the path coordinate ``x``, default uniform) of the two
    previous tracked values.  Passing through a
    double zero therefore flips the sign of a square root, as analytic
    continuation requires.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if float(p).is_integer():
        out = z ** int(p) if p >= 0 else np.where(z == 0, np.inf, z ** int(p))
        return out[0] if scalar else out
    with np.errstate(all="ignore"):
        r0 = np.where(z == 0, 0.0, np.exp(p * np.log(np.where(z == 0, 1.0, z))))
    n = len(r0)
    factors = _branch_factors(p)
    cur = 1.0 + 0j
    if start is not None and n:
        cand = r0[0] * factors
        cur = factors[int(np.argmin(np.abs(cand - start)))]
    if n < 2:
        out = r0 * cur
        return out[0] if scalar else out

    if x is None:
        ratio = np.ones(n)
    else:
        x = np.asarray(x, dtype=float)
        ratio = np.ones(n)
        with np.errstate(all="ignore"):
            ratio[2:] = (x[2:] - x[1:-1]) / (x[1:-1] - x[:-2])
        ratio = np.where(np.isfinite(ratio), ratio, 1.0)
    mag = np.abs(r0)
    flagged = np.zeros(n, dtype=bool)
    d1 = np.abs(r0[1] - r0[0])
    flagged[1] = d1 > rel_jump * max(mag[0], mag[1], 1e-300) or mag[1] < 1e-300
    if n > 2:
        pred = r0[1:-1] + ratio[2:] * (r0[1:-1] - r0[:-2])
        resid = np.abs(r0[2:] - pred)
        scale = np.maximum(np.maximum(mag[2:], mag[1:-1]), mag[:-2])
        flagged[2:] = resid > rel_jump * scale

    change_at = [0]
    change_f = [cur]

    def factor_at(i):
        return change_f[bisect.bisect_right(change_at, i) - 1]

    for j in np.flatnonzero(flagged):
        t1 = r0[j - 1] * factor_at(j - 1)
        if j >= 2:
            t2 = r0[j - 2] * factor_at(j - 2)
            target = t1 + ratio[j] * (t1 - t2)
        else:
            target = t1
        cur = change_f[-1]
        cand = r0[j] * cur * factors
        k = int(np.argmin(np.abs(cand - target)))
        if k != 0:
            change_at.append(int(j))
            change_f.append(cur * factors[k])

    fac = np.empty(n, dtype=complex)
    bounds = change_at + [n]
    for s, e, f in zip(bounds[:-1], bounds[1:], change_f):
        fac[s:e] = f
    out = r0 * fac
    return out[0] if scalar else out


def max_phase_step(values) -> float:
    """Largest phase change between adjacent nonzero samples."""
    v = np.asarray(values, dtype=complex)
    a, b = v[:-1], v[1:]
    ok = (np.abs(a) > 0) & (np.abs(b) > 0)
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(np.angle(b[ok] / a[ok]))))


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach its tolerance (typically a divergent integral)."""


@dataclass
class CumulativeResult:
    """Cumulative integral at the grid nodes plus diagnostics."""

    x: np.ndarray
    values: np.ndarray          # integral from the lower limit to x[j]
    integrand: np.ndarray       # integrand at x[j] (as seen on the path)
    tail: complex
    error: float
    evaluations: int
    converged: bool


def _tail_map(x0, tau):
    # tau in (-1, 0]  ->  x in (-inf, x0]; the endpoint tau = -1 is never used
    with np.errstate(divide="ignore", invalid="ignore"):
        return x0 + tau / (1.0 + tau), 1.0 / (1.0 + tau) ** 2


def cumulative_integral(integrand, x, tol: float = 1e-10, tail: bool = True,
                        max_rounds: int = 40, tail_cells: int = 16,
                        post=None, max_panels: int = 200_000) -> CumulativeResult:
    """Integral of ``integrand`` from ``-inf`` (or ``x[0]``) to every ``x[j]``.

    Without ``post``, ``integrand`` receives the full ordered path (ascending
    x) in a single call each round, so it can track branches along it.
    With ``post``, ``integrand`` is evaluated pointwise on new panels only
    and ``post(path, values)`` is applied to the whole ordered path, which
    is where branch tracking belongs.  Panels are Gauss-Kronrod 15/7 and are
    bisected until the embedded error of each panel is below its share of
    ``tol``.  The half-line ``(-inf, x[0]]`` is mapped onto ``(-1, 0]`` with
    ``x = x[0] + tau / (1 + tau)``.  Refinement stops unconverged once the
    panel count would exceed ``max_panels`` (a divergent integral).
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    x_start = x[0]
    tau_nodes = x - x_start
    a = list(tau_nodes[:-1])
    b = list(tau_nodes[1:])
    owner = list(range(len(x) - 1))
    if tail:
        edges = -1.0 + (np.linspace(0.0, 1.0, tail_cells + 1)) ** 1.5
        a = list(edges[:-1]) + a
        b = list(edges[1:]) + b
        owner = [-1] * tail_cells + owner
    a = np.array(a)
    b = np.array(b)
    owner = np.array(owner)
    total_len = float(np.sum(b - a))
    evaluations = 0
    converged = False

    def to_x(tau):
        neg = tau < 0
        tm = np.minimum(tau, 0)
        xs, jac = _tail_map(x_start, tm)
        return np.where(neg, xs, x_start + tau), np.where(neg, jac, 1.0)

    raw = np.zeros((len(a), 16), dtype=complex)
    fresh = np.ones(len(a), dtype=bool)
    raw_end = None
    for _ in range(max_rounds):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        gk_tau = mid[:, None] + half[:, None] * NODES[None, :]
        panel_tau = np.concatenate([a[:, None], gk_tau], axis=1)   # left end + 15 nodes
        px, pjac = to_x(panel_tau)
        end_x = to_x(np.array([b[-1]]))[0]
        if post is None:
            path_tau = np.append(panel_tau.ravel(), b[-1])
            keep = path_tau > -1.0
            xs = np.append(px.ravel(), end_x)[keep]
            vals = np.asarray(integrand(xs), dtype=complex)
            evaluations += len(xs)
            full = np.zeros(len(keep), dtype=complex)
            full[keep] = vals
        else:
            idx = np.flatnonzero(fresh)
            pts = px[idx].ravel()
            ok = panel_tau[idx].ravel() > -1.0
            newv = np.zeros(pts.shape, dtype=complex)
            newv[ok] = np.asarray(integrand(pts[ok]), dtype=complex)
            raw[idx] = newv.reshape(len(idx), 16)
            evaluations += int(np.sum(ok))
            if raw_end is None:
                raw_end = complex(np.asarray(integrand(end_x), dtype=complex)[0])
                evaluations += 1
            path_tau = np.append(panel_tau.ravel(), b[-1])
            keep = path_tau > -1.0
            xs = np.append(px.ravel(), end_x)[keep]
            rv = np.append(raw.ravel(), raw_end)[keep]
            full = np.zeros(len(keep), dtype=complex)
            full[keep] = np.asarray(post(xs, rv), dtype=complex)
        fulljac = np.append(pjac.ravel(), 1.0)
        with np.errstate(invalid="ignore"):
            body = (full * fulljac)[:-1].reshape(len(a), 16)[:, 1:]
        k = half * (body @ KRONROD_W)
        g = half * (body @ GAUSS_W)
        err = np.abs(k - g)
        allowed = tol * (b - a) / total_len
        bad = (err > allowed) & (half > 1e-13)
        if not np.any(bad):
            converged = True
            break
        if len(a) + int(np.sum(bad)) > max_panels:
            break
        reps = np.where(bad, 2, 1)
        na = np.repeat(a, reps)
        nb = np.repeat(b, reps)
        no = np.repeat(owner, reps)
        nraw = np.repeat(raw, reps, axis=0)
        nfresh = np.repeat(bad, reps)
        first = np.cumsum(reps) - reps
        m = 0.5 * (a + b)
        split = first[bad]
        nb[split] = m[bad]
        na[split + 1] = m[bad]
        a, b, owner, raw, fresh = na, nb, no, nraw, nfresh

    panel_sums = np.zeros(len(x) - 1, dtype=complex)
    np.add.at(panel_sums, owner[owner >= 0], k[owner >= 0])
    tail_val = complex(np.sum(k[owner < 0])) if tail else 0j
    values = np.concatenate([[tail_val], tail_val + np.cumsum(panel_sums)])

    # integrand at grid nodes: left endpoints of the first panel of each owner
    at_nodes = np.empty(len(x), dtype=complex)
    starts = full[:-1].reshape(len(a), 16)[:, 0]
    is_first = np.concatenate([[True], owner[1:] != owner[:-1]])
    sel = is_first & (owner >= 0)
    at_nodes[owner[sel]] = starts[sel]
    at_nodes[-1] = full[-1]
    return CumulativeResult(x, values, at_nodes, tail_val, float(np.sum(err)),
                            evaluations, converged)


def half_line_integral(integrand, x0: float, side: str = "right", p: float = None,
                       match=None, tol: float = 1e-10, post=None) -> complex:
    """Integral of ``integrand`` over ``[x0, inf)`` or ``(-inf, x0]``.

    ``integrand`` and ``post`` are used as in :func:`cumulative_integral`
    (on the right side the path coordinate is ``-x``).  When ``match``
    is given, the result is multiplied by the ``p``-th power branch factor
    that makes the integrand at ``x0`` equal to ``match``; this continues a
    tracked fractional power across the boundary of a finite window.
    """
    if side == "left":
        res = cumulative_integral(integrand, np.array([x0]), tol=tol, tail=True, post=post)
    elif side == "right":
        res = cumulative_integral(lambda ys: integrand(-ys), np.array([-x0]), tol=tol,
                                  tail=True, post=post)
    else:
        raise ValueError("side must be 'left' or 'right'")
    val = res.tail
    if match is not None and p is not None:
        end = res.integrand[-1]
        if end != 0 and match != 0:
            factors = _branch_factors(p)
            k = int(np.argmin(np.abs(end * factors - match)))
            val *= factors[k]
    return complex(val)
