"""Sampled descending slopes, the chain rule, and metric speeds."""

import math

import numpy as np
import pytest

from klflow import (
    EuclideanBackend,
    Functional,
    descending_slope,
    make_power_theta,
    metric_speed,
    resolve_entry,
    sampled_slope,
)
from klflow.core import INF
from klflow.slope import MonotoneMap, chain_rule_slope

CORPUS_IDS = (
    "quadratic?lambda=1",
    "double-well?lambda=1&a=1",
    "asymmetric-double-well",
    "truncated-parabola",
    "staircase?m=1&eps=0.1",
    "power-potential?p=1",
    "power-potential?p=4",
    "sharpness?c=1&gamma=0.5&M=4&eps=0.05",
)


def test_quadratic_slope_value():
    e = resolve_entry("quadratic?lambda=1")
    est = sampled_slope(e.functional, np.array([2.0]))
    assert abs(est.value - 2.0) < 1e-4
    assert est.radius_used > 0
    assert est.samples > 0


def test_double_well_ridge_slope_is_lambda_a():
    # descent from the ridge drops toward either well at unit rate
    e = resolve_entry("double-well?lambda=1&a=1")
    est = sampled_slope(e.functional, np.array([0.0]))
    assert abs(est.value - 1.0) < 1e-4


def test_cone_slope_at_kink_and_away():
    e = resolve_entry("power-potential?p=1")
    assert abs(sampled_slope(e.functional, np.array([1.0])).value - 1.0) < 1e-4
    # the vertex is the minimiser: nothing descends from it
    assert sampled_slope(e.functional, np.array([0.0])).value == 0.0


def test_plateau_slope_is_zero():
    e = resolve_entry("truncated-parabola")
    assert sampled_slope(e.functional, np.array([-0.5])).value == 0.0


def test_slope_outside_effective_domain_is_infinite():
    f = Functional(
        label="boxed",
        backend=EuclideanBackend(1),
        value=lambda x: float(0.5 * x[0] ** 2) if abs(x[0]) <= 1.0 else INF,
    )
    assert math.isinf(descending_slope(f, np.array([1.5])).value)
    assert abs(descending_slope(f, np.array([0.5])).value - 0.5) < 1e-4


def test_corpus_sampled_matches_analytic():
    """Estimator agrees with closed forms away from the nonsmooth points."""
    rng = np.random.default_rng(902)
    for cid in CORPUS_IDS:
        e = resolve_entry(cid)
        lo, hi = e.sample_box
        pts = [
            p
            for p in rng.uniform(lo, hi, size=200)
            if all(abs(p - q) > 1e-3 for q in e.nonsmooth_points)
        ][:100]
        assert len(pts) == 100
        for p in pts:
            x = np.array([p])
            a = e.functional.analytic_slope(x)
            s = sampled_slope(e.functional, x).value
            if not np.isfinite(a):
                assert not np.isfinite(s)
            else:
                assert abs(s - a) <= max(0.02 * abs(a), 1e-3), (cid, p, a, s)


def test_chain_rule_matches_product_and_composite():
    e = resolve_entry("quadratic?lambda=1")
    pf = make_power_theta(1.0 / math.sqrt(2.0), 0.5)
    g = MonotoneMap(value=pf.theta, left_deriv=pf.theta_deriv)
    for p in (0.3, 1.0, 1.7):
        x = np.array([p])
        slope_f = sampled_slope(e.functional, x)
        chained = chain_rule_slope(e.functional, g, x, slope_f)
        product = pf.theta_deriv(e.functional.value(x)) * e.functional.analytic_slope(x)
        assert math.isclose(chained, product, rel_tol=2e-4)
        composite = Functional(
            label="theta-of-f",
            backend=e.functional.backend,
            value=lambda y: pf.theta(e.functional.value(y)),
        )
        direct = sampled_slope(composite, x).value
        assert math.isclose(direct, product, rel_tol=0.02)


def test_chain_rule_accepts_plain_float():
    e = resolve_entry("quadratic?lambda=1")
    pf = make_power_theta(1.0, 0.5)
    g = MonotoneMap(value=pf.theta, left_deriv=pf.theta_deriv)
    out = chain_rule_slope(e.functional, g, np.array([1.0]), 1.0)
    assert math.isclose(out, pf.theta_deriv(0.5), rel_tol=1e-12)


def test_metric_speed_centred_quotients():
    ts = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    pts = [(t, np.array([math.exp(-t)])) for t in ts]
    for t in (0.25, 0.5, 0.75):
        sample = metric_speed(pts, t)
        assert not sample.one_sided
        assert math.isclose(sample.value, math.exp(-t), rel_tol=1e-5)
    first = metric_speed(pts, 0.0)
    last = metric_speed(pts, 1.0)
    assert first.one_sided and last.one_sided
    assert math.isclose(first.value, 1.0, rel_tol=1e-2)
