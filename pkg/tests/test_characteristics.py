import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from conftest import COMPLEX_W0
from ptshock.characteristics import (BranchSelectionError, EvolvedField, NoRootsError,
                                     enumerate_branches, push_forward, residual,
                                     select_physical_branch, solve_implicit,
                                     write_branches_csv)
from ptshock.model import GridSpec
from ptshock.profile_dsl import parse

CAUCHY_W = parse("-12*x^2/(1+x^2)^5")


def test_push_forward_at_time_zero_is_identity():
    x0 = np.linspace(-3, 3, 13)
    x, w = push_forward(CAUCHY_W, None, 0.0, x0)
    assert np.allclose(x, x0) and np.allclose(w, CAUCHY_W(x0))


def test_push_forward_linear_focusing():
    # w0 = -x: every characteristic reaches the origin at t = 1
    w0 = parse("-x")
    x, w = push_forward(w0, None, 1.0, np.linspace(-2, 2, 9))
    assert np.allclose(x, 0) and np.allclose(w, -np.linspace(-2, 2, 9))


def test_push_forward_becomes_multivalued_after_shock():
    x0 = np.linspace(-3, 3, 2001)
    x, _ = push_forward(CAUCHY_W, None, 0.4, x0)
    assert np.any(np.diff(x.real) < 0)
    x, _ = push_forward(CAUCHY_W, None, 0.2, x0)
    assert np.all(np.diff(x.real) > 0)


@pytest.mark.parametrize("x", [-1.0, 0.0, 0.3, 2.5])
def test_time_zero_root_is_initial_value(x):
    roots = solve_implicit(CAUCHY_W, None, x, 0.0)
    assert len(roots) == 1 and abs(roots[0] - CAUCHY_W(x)) < 1e-12


def test_complex_profile_has_several_roots_after_shock():
    w0 = parse(COMPLEX_W0)
    roots = solve_implicit(w0, None, 0.5, 0.55)
    assert len(roots) >= 2
    assert max(residual(w0, None, 0.5, 0.55, np.array(roots))) < 1e-10


def test_pushed_curve_points_are_roots():
    x0 = np.linspace(-1.5, 1.5, 7)
    x, w = push_forward(CAUCHY_W, None, 0.45, x0)
    for xi, wi in zip(x.real, w):
        roots = solve_implicit(CAUCHY_W, None, xi, 0.45, seeds=[wi + 0.01], real_only=True)
        assert min(abs(r - wi) for r in roots) < 1e-8


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        solve_implicit(CAUCHY_W, None, 0.0, -1.0)


def test_no_roots_reported_distinctly():
    # w = 1 + w^2 has only complex roots, and real_only drops them
    w0 = parse("1+x^2")
    assert len(solve_implicit(w0, None, 0.0, 1.0)) == 2
    with pytest.raises(NoRootsError):
        solve_implicit(w0, None, 0.0, 1.0, real_only=True)


def test_single_branch_before_shock():
    bs = enumerate_branches(CAUCHY_W, None, GridSpec(-4, 4, 161), 0.2)
    assert bs.branch_ids == [0]
    assert set(bs.counts()) == {1}
    x, w = bs.branch(0)
    assert np.max(np.abs(w - EvolvedField(CAUCHY_W, None, 0.2)(x))) < 1e-10


def test_fold_changes_count_by_two():
    bs = enumerate_branches(CAUCHY_W, None, GridSpec(-2, 2, 401), 0.4)
    assert max(bs.counts()) == 3
    for _, before, after in bs.folds:
        assert abs(before - after) == 2


def test_branch_continuity():
    g = GridSpec(-4, 4, 401)
    bs = enumerate_branches(parse(COMPLEX_W0), None, g, 0.55)
    for b in bs.branch_ids:
        x, w = bs.branch(b)
        if len(x) < 3:
            continue
        steps = np.abs(np.diff(w))
        slope = steps / np.diff(x)
        assert np.max(steps) < 10 * g.dx * np.max(slope) + 1e-12


def test_unique_branch_selected_before_shock():
    bs = enumerate_branches(CAUCHY_W, None, GridSpec(-4, 4, 161), 0.2)
    sel = select_physical_branch(bs)
    assert sel.x_jump is None and sel.rule == "unique"


def test_complex_case_needs_a_jump_only_after_shock():
    w0 = parse(COMPLEX_W0)
    g = GridSpec(-4, 4, 321)
    before = select_physical_branch(enumerate_branches(w0, None, g, 0.45))
    assert before.x_jump is None
    after = select_physical_branch(enumerate_branches(w0, None, g, 0.55))
    assert after.x_jump is not None and after.rule == "midpoint_convention"
    assert after.left_branch != after.right_branch


def test_equal_charge_rule_conserves_first_charge():
    # exact I_1 of the joined field: integrate w0 (1 + t w0') over the feet
    # of the characteristics kept on each side of the jump
    t = 0.5
    bs = enumerate_branches(CAUCHY_W, None, GridSpec(-6, 6, 2401), t)
    sel = select_physical_branch(bs)
    assert sel.rule == "equal_charge"

    def w(z):
        return -12 * z**2 / (1 + z**2) ** 5

    def dw(z):
        return (-24 * z * (1 + z**2) + 120 * z**3) / (1 + z**2) ** 6

    feet = np.linspace(-3, 3, 60001)
    xs = feet + w(feet) * t - sel.x_jump
    cross = np.flatnonzero(np.diff(np.sign(xs)))
    assert len(cross) == 3
    a = brentq(lambda z: z + w(z) * t - sel.x_jump, feet[cross[0]], feet[cross[0] + 1])
    b = brentq(lambda z: z + w(z) * t - sel.x_jump, feet[cross[-1]], feet[cross[-1] + 1])
    g = lambda z: w(z) * (1 + t * dw(z))  # noqa: E731
    joined = quad(g, -np.inf, a, epsabs=1e-14)[0] + quad(g, b, np.inf, epsabs=1e-14)[0]
    initial = quad(w, -np.inf, np.inf, epsabs=1e-14)[0]
    assert abs(joined - initial) < 1e-4 * abs(initial)


def test_missing_asymptotic_branch():
    bs = enumerate_branches(CAUCHY_W, None, GridSpec(-4, 4, 81), 0.2)
    with pytest.raises(BranchSelectionError):
        select_physical_branch(bs, bc=(1.0, 0.0))


def test_branches_csv(tmp_path):
    bs = enumerate_branches(CAUCHY_W, None, GridSpec(-1, 1, 5), 0.1)
    path = write_branches_csv(tmp_path / "b.csv", bs)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,branch,re_w,im_w"
    assert len(lines) == 6
