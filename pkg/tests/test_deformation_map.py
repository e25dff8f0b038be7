import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import CAUCHY, COMPLEX_W0, ODD
from ptshock.characteristics import BranchField, EvolvedField, enumerate_branches
from ptshock.deformation_map import (MappedProfile, deformed_solution, fold_to_peak,
                                     inverse_constant, map_u_from_w, map_w_from_u, match_jump,
                                     u_derivatives_from_w, verify_map_residual,
                                     write_field_csv, write_folded_csv)
from ptshock.model import DeformedSystem, GridSpec
from ptshock.profile_dsl import parse

X = np.linspace(-5, 5, 201)


def test_cauchy_maps_to_rational_profile():
    w = map_w_from_u(parse(CAUCHY), DeformedSystem(3), X)
    assert np.max(np.abs(w.w - (-12 * X**2 / (1 + X**2) ** 5))) < 1e-14
    assert np.max(np.abs(w.w.imag)) < 1e-12


def test_rotated_gaussian_maps_to_real_profile():
    w = map_w_from_u(parse("exp(-x^2-i*pi/4)"), DeformedSystem(2), X)
    assert np.max(np.abs(w.w - (-4 * X * np.exp(-2 * X**2)))) < 1e-14


def test_identity_map():
    u = parse("exp(i*x)/(1+x^2)")
    w = map_w_from_u(u, DeformedSystem(1), X)
    assert np.array_equal(w.w, u(X.astype(complex)))


def test_callable_and_sampled_forms_agree():
    u = parse(CAUCHY)
    s = DeformedSystem(3)
    sampled = map_w_from_u(u(X), s, X, u_x=-2 * X / (1 + X**2) ** 2)
    assert np.max(np.abs(sampled.w - MappedProfile(u, s)(X.astype(complex)))) < 1e-14


def test_ambiguous_root_flagged_at_zero_slope():
    w = map_w_from_u(parse(CAUCHY), DeformedSystem(1.5), np.array([-1.0, 0.0, 1.0]))
    assert list(w.ambiguous) == [False, True, False]


def test_odd_eps_real_profile_gives_real_w():
    for eps in (3, 5, 7):
        w = map_w_from_u(parse(ODD), DeformedSystem(eps), X)
        assert np.max(np.abs(w.w.imag)) < 1e-12


def test_boundary_constant_of_complex_case():
    # u0 = [4/3 int (1+y^2)^-2 dy]^(1/3); its limit is (2 pi / 3)^(1/3)
    uf = map_u_from_w(parse(COMPLEX_W0), 1.5, np.linspace(-6, 6, 121), align="real")
    k = (2 * math.pi / 3) ** (1 / 3)
    assert abs(k - 1.2794) < 1e-4
    assert abs(abs(uf.u_far) - k) < 1e-8
    y = 0.7
    ref = (4 / 3 * quad(lambda q: (1 + q * q) ** -2, -np.inf, y, epsabs=1e-14)[0]) ** (1 / 3)
    assert abs(abs(uf.u[np.argmin(np.abs(uf.x - y))]) - ref) < 1e-8


def test_inverse_constant_eps3():
    C = inverse_constant(3)
    assert abs(abs(C) - 2 ** (-2 / 3) * 3 ** (1 / 3)) < 1e-15


ROUND_TRIP = [(CAUCHY, 3), (CAUCHY, 2), (CAUCHY, 1.5), ("exp(-x^2-i*pi/4)", 2),
              ("exp(-x^2)", 3), (ODD, 3), ("1/(1+(x-1)^2)+1/(1+(x+1)^2)", 3)]


@pytest.mark.parametrize("src,eps", ROUND_TRIP)
def test_round_trip(src, eps):
    u0 = parse(src)
    uf = map_u_from_w(MappedProfile(u0, DeformedSystem(eps)), eps, X, align=u0(X.astype(complex)))
    assert np.max(np.abs(uf.u - u0(X.astype(complex)))) < 1e-6


@pytest.mark.parametrize("src,eps", ROUND_TRIP + [(COMPLEX_W0, 1.5)])
def test_round_trip_from_w(src, eps):
    # w -> u -> w; w is the sampled forward map, whose fractional powers
    # are continued along x like those of the inverse map
    s = DeformedSystem(eps)
    if src == COMPLEX_W0:
        w, ref = parse(src), parse(src)(X.astype(complex))
    else:
        w, ref = MappedProfile(parse(src), s), map_w_from_u(parse(src), s, X).w
    uf = map_u_from_w(w, eps, X)
    back = map_w_from_u(uf.u, s, X, u_x=uf.u_x)
    ok = ~uf.diverging
    assert np.max(np.abs(back.w[ok] - ref[ok])) < 1e-6


def test_zero_field_gives_boundary_value():
    uf = map_u_from_w(lambda x: np.zeros_like(x), 3, X, lower_bc=0.0)
    assert np.all(uf.u == 0)
    uf = map_u_from_w(lambda x: np.zeros_like(x), 3, X, lower_bc=0.5)
    assert np.max(np.abs(uf.u - 0.5)) < 1e-14


def test_unsorted_grid_rejected():
    with pytest.raises(ValueError):
        map_u_from_w(parse(COMPLEX_W0), 1.5, np.array([0.0, -1.0]))


def _pre_shock(t=0.15, x=np.linspace(-3, 3, 61)):
    u0 = parse(CAUCHY)
    s = DeformedSystem(3)
    w0 = MappedProfile(u0, s)
    field = EvolvedField(w0, None, t)
    return u0, s, w0, field, x


def test_u_x_matches_finite_difference():
    u0, s, w0, field, x = _pre_shock()
    h = 1e-4
    uf = map_u_from_w(field, 3, x, align="real")
    up = map_u_from_w(field, 3, x + h, align="real").u
    um = map_u_from_w(field, 3, x - h, align="real").u
    assert np.max(np.abs(uf.u_x - (up - um) / (2 * h))) < 1e-5


def test_u_xx_matches_finite_difference():
    from ptshock.characteristics import characteristic_slope
    u0, s, w0, field, x = _pre_shock()
    x = x[np.abs(x) > 0.05]             # w vanishes at the origin
    h = 1e-3
    uf = map_u_from_w(field, 3, x, align="real")
    ux, uxx = u_derivatives_from_w(uf, characteristic_slope(w0, None, 0.15, x, field(x)))
    up = map_u_from_w(field, 3, x + h, align="real").u_x
    um = map_u_from_w(field, 3, x - h, align="real").u_x
    fd = (up - um) / (2 * h)
    assert np.max(np.abs(uxx - fd) / (1 + np.abs(fd))) < 1e-4


def test_u_xx_finite_for_constant_w():
    uf = map_u_from_w(lambda x: np.full(x.shape, 2.0 + 0j), 3, np.linspace(0, 1, 11), tail=False)
    _, uxx = u_derivatives_from_w(uf, np.zeros(11))
    assert np.all(np.isfinite(uxx[1:]))


def test_u_x_diverges_where_integral_vanishes():
    # odd profile: the integral of w^(1/2) returns to zero at the centre
    u0 = parse(ODD)
    x = np.linspace(-3, 3, 601)
    uf = map_u_from_w(MappedProfile(u0, DeformedSystem(3)), 3, x)
    assert uf.diverging[300] and not uf.diverging[100]


def test_deformed_solution_at_time_zero():
    u0 = parse("exp(-x^2-i*pi/4)")
    x = np.linspace(-3, 3, 7)
    uf = deformed_solution(u0, DeformedSystem(2), 0.0, x)
    assert np.max(np.abs(uf.u - u0(x.astype(complex)))) < 1e-8


def test_fold_pre_shock_is_unchanged():
    u0, s, w0, field, x = _pre_shock()
    prof = fold_to_peak(w0, 3, 0.2, points=2001)
    assert not prof.folded and prof.keep.all() and prof.s_loop is None


def test_fold_post_shock_peak():
    # oracle: where the deformed fields of the left- and right-vanishing
    # branches meet, each mapped from its own end
    w0 = parse("-12*x^2/(1+x^2)^5")
    t = 0.4
    prof = fold_to_peak(w0, 3, t, points=4001)
    assert prof.folded
    xr, _ = prof.retained()
    assert np.all(np.diff(xr) > 0)
    bs = enumerate_branches(w0, None, GridSpec(-6, 6, 2401), t)
    sides = {}
    for b in bs.branch_ids:
        xb, _ = bs.branch(b)
        if xb[0] == -6:
            sides["left"] = (xb, map_u_from_w(BranchField.from_branchset(bs, b), 3, xb,
                                              align="real").u.real)
        if xb[-1] == 6:
            sides["right"] = (xb, map_u_from_w(BranchField.from_branchset(bs, b), 3, xb,
                                               anchor="right", align="real").u.real)
    (xl, ul), (xr, ur) = sides["left"], sides["right"]
    xo = np.linspace(xr[0], xl[-1], 2001)
    d = np.interp(xo, xl, ul) - np.interp(xo, xr, ur)
    cross = xo[np.flatnonzero(np.diff(np.sign(d)))]
    assert len(cross) == 1
    assert abs(cross[0] - prof.peak[0]) < 5e-3


def test_fold_charge_preservation():
    w0 = parse("-12*x^2/(1+x^2)^5")
    prof = fold_to_peak(w0, 3, 0.5, points=4001)
    before, after = prof.charges[0.5]
    # I_1/2 vanishes by symmetry; compare with the integral of |w0|^(1/2) = 2 sqrt(12) / 3
    assert abs(after - before) < 1e-6 * (2 * math.sqrt(12) / 3)
    b2, a2 = prof.charges[2.0]
    assert abs(a2 - b2) > 1e-2 * abs(b2)


def test_jump_in_complex_case():
    bs = enumerate_branches(parse(COMPLEX_W0), None, GridSpec(-4, 4, 401), 1.0)
    jm = match_jump(bs, 1.5, _k_complex())
    assert abs(jm.x_re_cross - 1.0663) < 1e-3
    assert abs(jm.x_im_cross - 0.1893) < 1e-3
    assert not jm.continuous
    j = int(np.argmin(np.abs(jm.x - jm.x_re_cross)))
    assert abs((jm.u_left - jm.u_right)[j].real) < 1e-2


def _k_complex():
    uf = map_u_from_w(parse(COMPLEX_W0), 1.5, np.linspace(-6, 6, 121))
    return uf.u_far


def test_jump_crossing_residual():
    bs = enumerate_branches(parse(COMPLEX_W0), None, GridSpec(-4, 4, 401), 1.0)
    k = _k_complex()
    jm = match_jump(bs, 1.5, k)
    xs = np.sort(np.append(bs.grid.x, jm.x_re_cross))
    j = int(np.searchsorted(xs, jm.x_re_cross))
    left = min(bs.samples[0], key=lambda bw: abs(bw[1]))[0]
    right = min(bs.samples[-1], key=lambda bw: abs(bw[1]))[0]
    ul = map_u_from_w(BranchField.from_branchset(bs, left), 1.5, xs, 0.0)
    ur = map_u_from_w(BranchField.from_branchset(bs, right), 1.5, xs, k, anchor="right")
    assert abs((ul.u[j] - ur.u[j]).real) < 1e-8


def test_jump_pre_shock_is_continuous():
    bs = enumerate_branches(parse(COMPLEX_W0), None, GridSpec(-4, 4, 201), 0.3)
    jm = match_jump(bs, 1.5, _k_complex())
    assert jm.continuous and jm.x_re_cross is None
    assert np.max(np.abs(jm.u_left - jm.u_right)) < 1e-6


def _residual(eps, n, t=0.1, dt=1e-4):
    u0 = parse(CAUCHY)
    s = DeformedSystem(eps)
    x = np.linspace(-4, 4, n)
    return verify_map_residual(lambda tt: deformed_solution(u0, s, tt, x).u, s, t, x, dt)


def test_map_residual_small():
    assert _residual(3, 801) < 1e-3


def test_map_residual_converges():
    r1 = _residual(3, 401, dt=2e-4)
    r2 = _residual(3, 801, dt=1e-4)
    assert r1 / r2 > 3.0


def test_map_residual_identity_system():
    # equals the centred-difference residual of the inviscid Burgers field
    x = np.linspace(-4, 4, 8001)
    u0 = parse(CAUCHY)
    r = _residual(1, 8001)
    w = [EvolvedField(u0, None, t)(x) for t in (0.1 - 1e-4, 0.1, 0.1 + 1e-4)]
    wt = (w[2] - w[0]) / 2e-4
    wx = (w[1][2:] - w[1][:-2]) / (2 * (x[1] - x[0]))
    burgers = float(np.max(np.abs(wt[1:-1] + w[1][1:-1] * wx)))
    assert abs(r - burgers) < 1e-12
    assert r < 1e-6


def test_map_residual_constant_field():
    x = np.linspace(0, 1, 11)
    assert verify_map_residual(lambda t: np.full(x.shape, 0.7 + 0j), DeformedSystem(3), 0.1, x) == 0


def test_csv_exports(tmp_path):
    x = np.array([0.0, 1.0])
    p = write_field_csv(tmp_path / "f.csv", x, np.array([1 + 2j, 0.1 + 0j]))
    lines = p.read_text().splitlines()
    assert lines[0] == "x,re_u,im_u,re_ux,im_ux"
    assert lines[2].split(",")[1] == "0.10000000000000001"
    prof = fold_to_peak(parse("-12*x^2/(1+x^2)^5"), 3, 0.4, points=401)
    p = write_folded_csv(tmp_path / "fold.csv", prof)
    assert p.read_text().splitlines()[0] == "s,x0,x,re_w,im_w,re_u,im_u,kept"


def test_divergent_integral_reported():
    # w ~ 1/x^2 so w^(1/2) ~ 1/|x|: the integral defining u diverges for eps = 3
    from ptshock.numerics import QuadratureError
    with pytest.raises(QuadratureError):
        map_u_from_w(parse(COMPLEX_W0), 3, np.linspace(-2, 2, 5))
