"""Threshold condition checks: alpha estimation, budgets, and the equivalence."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from klflow import (
    check_condition_A,
    check_condition_C,
    estimate_alpha,
    make_power_theta,
    matched_half_power,
    resolve_entry,
)

# entry id, anchor, reference radius used for the equivalence sweep
EQUIV_ANCHORS = (
    ("quadratic?lambda=1", 1.0, 2.0),
    ("double-well?lambda=1&a=1", 0.5, 0.5),
    ("truncated-parabola", 1.0, 1.0),
    ("power-potential?p=1", 1.0, 1.1),
    ("power-potential?p=4", 1.0, 1.5),
    ("staircase?m=1&eps=0.1", 1.5, 3.0),
    ("sharpness?c=1&gamma=0.5&M=4&eps=0.05", 1.0, 1.0),
)


def test_alpha_quadratic_is_two_lambda():
    e = resolve_entry("quadratic?lambda=1")
    est = estimate_alpha(e.functional, np.array([1.0]), 0.5)
    assert abs(est - 2.0) < 1e-9
    e25 = resolve_entry("quadratic?lambda=2.5")
    assert abs(estimate_alpha(e25.functional, np.array([1.0]), 0.5) - 5.0) < 1e-9


def test_alpha_truncated_parabola_regimes():
    e = resolve_entry("truncated-parabola")
    x0 = np.array([1.0])
    assert estimate_alpha(e.functional, x0, 0.5) == 4.0
    assert estimate_alpha(e.functional, x0, 1.5) == 0.0


def test_condition_A_matched_quadratic_holds():
    e = resolve_entry("quadratic?lambda=1")
    pf = matched_half_power(2.0)
    rep = check_condition_A(e.functional, pf, np.array([1.0]), 2.0)
    assert rep.holds and not rep.equilibrium
    # budget = r - theta(f(x0)) = 2 - 2 sqrt(0.5 / 2) = 1
    assert math.isclose(rep.theta_budget, 1.0, abs_tol=1e-12)
    strict = check_condition_A(e.functional, pf, np.array([1.0]), 2.0, strict=True)
    assert strict.holds


def test_condition_A_budget_boundary_strictness():
    """theta(f(x0)) == r exactly: the plain condition holds, the strict one fails."""
    e = resolve_entry("quadratic?lambda=1")
    pf = matched_half_power(2.0)
    rep = check_condition_A(e.functional, pf, np.array([1.0]), 1.0)
    strict = check_condition_A(e.functional, pf, np.array([1.0]), 1.0, strict=True)
    assert rep.holds
    assert not strict.holds
    assert abs(rep.theta_budget) <= 1e-12


def test_condition_C_boundary_strictness():
    e = resolve_entry("truncated-parabola")
    x0 = np.array([1.0])
    assert check_condition_C(e.functional, x0, 1.0).holds
    assert not check_condition_C(e.functional, x0, 1.0, strict=True).holds


def test_sharpness_budget_deficit_is_minus_eps():
    e = resolve_entry("sharpness?c=1&gamma=0.5&M=4&eps=0.05")
    pf = make_power_theta(1.0, 0.5)
    rep = check_condition_A(e.functional, pf, np.array([1.0]), 1.0)
    assert not rep.holds
    assert math.isclose(rep.theta_budget, -0.05, abs_tol=1e-12)
    # only the budget fails; the slope inequality is tight but satisfied
    assert rep.details["slope_ok"]
    assert not rep.details["budget_ok"]


def test_failing_check_reports_worst_witness():
    e = resolve_entry("sharpness?c=1&gamma=0.5&M=4&eps=0.05")
    pf = make_power_theta(1.0, 0.5)
    rep = check_condition_A(e.functional, pf, np.array([1.0]), 1.0)
    point, gap = rep.worst_witness
    assert abs(point[0] - 1.0) < 1.0
    assert math.isclose(gap, rep.details["min_product"] - 1.0, abs_tol=1e-15)


def test_trivial_equilibrium_at_minimiser():
    e = resolve_entry("quadratic?lambda=1")
    x0 = np.array([0.0])
    for rep in (
        check_condition_C(e.functional, x0, 1.0),
        check_condition_C(e.functional, x0, 1.0, strict=True),
        check_condition_A(e.functional, matched_half_power(2.0), x0, 1.0),
    ):
        assert rep.holds
        assert rep.equilibrium


def test_estimates_are_deterministic():
    e = resolve_entry("double-well?lambda=1&a=1")
    a = estimate_alpha(e.functional, np.array([0.5]), 0.4)
    b = estimate_alpha(e.functional, np.array([0.5]), 0.4)
    assert a == b
    r1 = check_condition_C(e.functional, np.array([0.5]), 0.4)
    r2 = check_condition_C(e.functional, np.array([0.5]), 0.4)
    assert r1.alpha_estimate == r2.alpha_estimate and r1.holds == r2.holds


@pytest.mark.parametrize("cid,anchor,r0", EQUIV_ANCHORS)
def test_equivalence_A_with_matched_theta_and_C(cid, anchor, r0):
    """Condition A under theta(u) = 2 sqrt(u/alpha) agrees with condition C."""
    e = resolve_entry(cid)
    x0 = np.array([anchor])
    for r in (0.5 * r0, r0, 1.5 * r0):
        est = estimate_alpha(e.functional, x0, r)
        repC = check_condition_C(e.functional, x0, r, alpha_override=est)
        repCs = check_condition_C(e.functional, x0, r, alpha_override=est, strict=True)
        if est <= 0.0:
            assert not repC.holds and not repCs.holds
            continue
        pf = matched_half_power(est)
        repA = check_condition_A(e.functional, pf, x0, r)
        repAs = check_condition_A(e.functional, pf, x0, r, strict=True)
        assert repA.holds == repC.holds, (cid, r)
        assert repAs.holds == repCs.holds, (cid, r)


@given(
    x0=st.floats(min_value=0.6, max_value=2.0),
    radii=st.tuples(
        st.floats(min_value=0.1, max_value=1.4),
        st.floats(min_value=0.1, max_value=1.4),
    ),
)
def test_alpha_estimate_decreases_with_radius(x0, radii):
    # the infimum over a larger ball can only be smaller
    e = resolve_entry("power-potential?p=4")
    r1, r2 = sorted(radii)
    a_small = estimate_alpha(e.functional, np.array([x0]), r1)
    a_large = estimate_alpha(e.functional, np.array([x0]), r2)
    assert a_large <= a_small + 1e-9
