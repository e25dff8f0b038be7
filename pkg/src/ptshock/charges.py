"""Conserved charges ``I_kappa = int f(w)^kappa dx`` and their drift in time."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .characteristics import evolved_field, is_real_profile
from .deformation_map import MappedProfile, fold_to_peak
from .io import write_csv
from .model import ChargeReport, ChargeSpec, DeformedSystem, FSpec, GridSpec
from .numerics import cumulative_integral, half_line_integral, track_power
from .shock_finder import find_shock_events

__all__ = ["WindowError", "charge", "drift_report", "evolved_field", "write_report_csv",
           "POST_SHOCK_FLAG"]

POST_SHOCK_FLAG = "post-shock: conservation not guaranteed"
TAIL_BOUND = 1e-8


class WindowError(ValueError):
    """The integrand does not decay, so the charge over the line is undefined."""

    def __init__(self, message, tail):
        super().__init__(message)
        self.tail = tail


def _integrand(w, f: FSpec, kappa: float):
    def fn(xs):
        xs = np.asarray(xs, dtype=float)
        vals = np.asarray(f(np.asarray(w(xs), dtype=complex)), dtype=complex)
        return track_power(vals, kappa, x=xs)
    return fn


def charge(field, f=None, kappa: float = 1.0, mode: str = "undeformed",
           system: Optional[DeformedSystem] = None, window=(-10.0, 10.0),
           tol: float = 1e-12, tails: bool = True, points: int = 65) -> complex:
    """``I_kappa`` of a field given as a callable of ``x``.

    ``mode="undeformed"``: ``field`` is ``w`` and the integrand is
    ``f(w)^kappa``.  ``mode="deformed"``: ``field`` is a dual-aware ``u``,
    mapped to ``w`` with ``system`` first.  Fractional powers are continued
    along ``x``.  With ``tails`` the two half-lines outside the window are
    included and a non-decaying integrand raises :class:`WindowError`;
    without, the integral covers the window only (so ``kappa = 0`` gives its
    length).
    """
    ChargeSpec(kappa)
    if mode == "deformed":
        if system is None:
            raise ValueError("deformed mode needs a DeformedSystem")
        field = MappedProfile(field, system)
        f = system.f
    elif mode != "undeformed":
        raise ValueError("mode must be 'undeformed' or 'deformed'")
    f = FSpec.coerce(f)
    fn = _integrand(field, f, kappa)
    x = np.linspace(window[0], window[1], points)
    if tails:
        # |x g(x)| must shrink outwards, otherwise the half-lines diverge
        far = max(abs(window[0]), abs(window[1]), 1.0) * 64.0
        near = np.abs(fn(np.array([-far, far]))) * far
        out = np.abs(fn(np.array([-8 * far, 8 * far]))) * 8 * far
        if np.any((out > 0.5 * near) & (near > TAIL_BOUND)):
            raise WindowError(
                f"integrand does not decay: |x f(w)^kappa| = {float(np.max(out)):.3g} "
                f"at |x| = {8 * far:g}", float(np.max(out)))
    res = cumulative_integral(fn, x, tol=tol, tail=tails)
    total = res.values[-1]
    if tails:
        total += half_line_integral(fn, x[-1], "right", kappa, res.integrand[-1], tol)
    return complex(total)


def drift_report(profile, kappas: Sequence[float], times: Sequence[float], *,
                 system: Optional[DeformedSystem] = None, f=None,
                 window=(-10.0, 10.0), shock_time: Optional[float] = None,
                 tol: float = 1e-12) -> ChargeReport:
    """``I_kappa(t)`` for each time, with drift relative to ``t = 0``.

    ``profile`` is ``w0``, or ``u0`` when ``system`` is given (it is mapped
    first).  Times past the first shock are flagged; for them the charge is
    taken over the loop-eliminated peaked profile (``f(w) = w`` only).
    The drift is ``max_t |I(t) - I(0)| / scale`` where ``scale = |I(0)|``,
    or the L1 norm of the initial integrand when ``|I(0)|`` is below
    ``1e-6`` of it (charges that vanish by symmetry).
    """
    if system is not None:
        w0 = MappedProfile(profile, system)
        f = system.f
        eps = system.epsilon
    else:
        w0 = profile
        eps = None
    f = FSpec.coerce(f)
    if shock_time is None:
        real = is_real_profile(w0, f, window)
        ev = find_shock_events(w0, f, GridSpec(window[0], window[1], 4001)) if real else []
        shock_time = ev[0].t_s if ev else np.inf
    times = sorted(set([0.0] + [float(t) for t in times]))
    entries = []
    values = {}
    for kappa in kappas:
        ChargeSpec(kappa)
        for t in times:
            if t > shock_time:
                if not f.is_identity:
                    raise ValueError("post-shock charges need f(w) = w")
                folded = fold_to_peak(w0, eps if eps is not None else 3.0, t, f,
                                      x0_window=window, kappas=(kappa,))
                val = folded.charges[float(kappa)][1]
                flag = POST_SHOCK_FLAG
            else:
                field = evolved_field(w0, f, t, (2 * window[0], 2 * window[1]))
                val = charge(field, f, kappa, window=window, tol=tol)
                flag = ""
            entries.append((t, float(kappa), val, flag))
            values[(float(kappa), t)] = val
    drift, scale = {}, {}
    for kappa in kappas:
        k = float(kappa)
        i0 = values[(k, 0.0)]
        l1 = abs(charge(_abs_field(w0, f, k), None, 1.0, window=window, tol=tol))
        sc = abs(i0) if abs(i0) >= 1e-6 * l1 else l1
        scale[k] = sc
        dev = max(abs(values[(k, t)] - i0) for t in times)
        drift[k] = dev / sc if sc > 0 else (0.0 if dev == 0 else np.inf)
    return ChargeReport(tuple(entries), drift, scale)


def _abs_field(w0, f, kappa):
    """``|f(w0)^kappa|`` as a callable, for the L1 normalisation."""
    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.abs(np.asarray(f(np.asarray(w0(x.astype(complex)), dtype=complex)),
                                 dtype=complex)) ** kappa + 0j
    return fn


def write_report_csv(path, report: ChargeReport):
    """Columns ``t, kappa, re_I, im_I, drift, flag``."""
    rows = [(t, k, complex(v).real, complex(v).imag, report.drift[k], flag)
            for t, k, v, flag in report.entries]
    return write_csv(path, ["t", "kappa", "re_I", "im_I", "drift", "flag"], rows)
