"""Checkers for the anchored slope conditions that drive the certificates.

Both conditions quantify over the admissible set

    B_r(x0) intersect { y : 0 < f(y) <= f(x0) },

with B_r(x0) the OPEN ball.  Condition A asks for a budget inequality
theta(f(x0)) <= r together with theta'(f(y)) * |df|(y) >= 1 on the admissible
set; its quantitative cousin asks alpha(x0, r) >= 4 f(x0) / r^2 where alpha
is the infimum of |df|^2 / f.  The strict variants sharpen the respective
inequality.  Verification is by deterministic low-discrepancy sampling plus
local descent refinement around the worst observed points, so a "holds"
verdict is a sampled certificate, not a proof.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .core import INF, Functional
from .sampling import SAMPLER_SEED, ball_sample
from .slope import descending_slope
from .theta import ParameterFunction, make_power_theta

#: absolute/relative guard band for the non-strict budget and threshold tests
EQUALITY_GUARD = 1e-9

#: sampled slope condition acceptance threshold (product >= 1 - this)
SLOPE_ACCEPT_TOL = 1e-6

#: f(x0) at or below this counts as "already at an equilibrium value"
EQUILIBRIUM_F_TOL = 1e-14

DEFAULT_SAMPLE_COUNT = 2048


@dataclass
class ConditionReport:
    condition: str  # "A" | "A_prime" | "C" | "C_prime"
    holds: bool
    alpha_estimate: float
    worst_witness: Optional[Tuple[np.ndarray, float]]
    r: float
    x0: np.ndarray
    theta_budget: float  # r - theta(f(x0)); NaN for the C variants
    equilibrium: bool = False
    details: dict = field(default_factory=dict)


def _ratio(f: Functional, y: np.ndarray, fy: float) -> float:
    s = descending_slope(f, y).value
    if s == INF:
        return INF
    return s * s / fy


def _admissible(f: Functional, x0: np.ndarray, r: float, f_x0: float, y: np.ndarray):
    """Return f(y) if y is admissible, else None."""
    if np.linalg.norm(y - x0) >= r:
        return None
    fy = f.value(y)
    if not (0.0 < fy <= f_x0):
        return None
    return fy


def _refine_minimum(objective, y0: np.ndarray, h: float) -> Tuple[np.ndarray, float]:
    """Local descent of a penalised objective around y0 within radius h."""
    if y0.size == 1:
        res = minimize_scalar(
            lambda t: objective(np.array([t])),
            bounds=(y0[0] - h, y0[0] + h),
            method="bounded",
            options={"xatol": 1e-10 * max(1.0, abs(y0[0]))},
        )
        return np.array([res.x]), float(res.fun)
    res = minimize(
        objective,
        y0,
        method="Nelder-Mead",
        options={"maxiter": 80 * y0.size, "xatol": 1e-9, "fatol": 1e-12},
    )
    return np.asarray(res.x, dtype=float), float(res.fun)


def _scan(
    f: Functional,
    x0: np.ndarray,
    r: float,
    f_x0: float,
    pf: Optional[ParameterFunction],
    sample_count: int,
    seed: int,
) -> dict:
    """One deterministic pass over the admissible set.

    Collects the infimum of the ratio |df|^2/f (alpha) and, when a parameter
    function is supplied, of the product theta'(f) * |df|; both are refined
    by local descent around the three smallest sampled values.
    """
    pts = ball_sample(x0, r, sample_count, seed)
    ratios: list = []
    products: list = []
    n_admissible = 0
    for y in pts:
        fy = _admissible(f, x0, r, f_x0, y)
        if fy is None:
            continue
        n_admissible += 1
        s = descending_slope(f, y).value
        ratios.append((INF if s == INF else s * s / fy, y))
        if pf is not None:
            products.append((INF if s == INF else pf.theta_deriv(fy) * s, y))

    out = {"n_admissible": n_admissible}
    h = 4.0 * r * (sample_count ** (-1.0 / x0.size))

    def refined_min(entries, key_fn):
        entries.sort(key=lambda e: e[0])
        best_val, best_pt = entries[0]
        for val, y0 in entries[:3]:
            if val == INF:
                continue

            def penalised(y):
                fy = _admissible(f, x0, r, f_x0, np.asarray(y, dtype=float))
                if fy is None:
                    return 1e18
                return key_fn(np.asarray(y, dtype=float), fy)

            y_ref, v_ref = _refine_minimum(penalised, y0, h)
            if v_ref < best_val and v_ref < 1e17:
                best_val, best_pt = v_ref, y_ref
        return best_val, best_pt

    if ratios:
        alpha, alpha_witness = refined_min(
            ratios, lambda y, fy: _ratio(f, y, fy)
        )
        out["alpha"] = max(float(alpha), 0.0)
        out["alpha_witness"] = alpha_witness
    else:
        out["alpha"] = INF
        out["alpha_witness"] = None

    if pf is not None:
        if products:
            prod, prod_witness = refined_min(
                products,
                lambda y, fy: pf.theta_deriv(fy) * descending_slope(f, y).value,
            )
            out["min_product"] = float(prod)
            out["product_witness"] = prod_witness
        else:
            out["min_product"] = INF
            out["product_witness"] = None
    return out


def estimate_alpha(
    f: Functional,
    x0,
    r: float,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    seed: int = SAMPLER_SEED,
) -> float:
    """Estimate alpha(x0, r) = inf |df|^2 / f over the admissible set.

    Returns +inf when the sampled admissible set is empty.  Requires
    0 < f(x0) < inf.
    """
    x0 = np.asarray(x0, dtype=float)
    if not (r > 0.0):
        raise ValueError("radius must be positive")
    f_x0 = f.value(x0)
    if not (0.0 < f_x0 < INF):
        raise ValueError("estimate_alpha requires 0 < f(x0) < inf")
    scan = _scan(f, x0, r, f_x0, None, sample_count, seed)
    return scan["alpha"]


def check_condition_C(
    f: Functional,
    x0,
    r: float,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    strict: bool = False,
    alpha_override: Optional[float] = None,
    seed: int = SAMPLER_SEED,
) -> ConditionReport:
    """Check alpha(x0, r) >= 4 f(x0) / r^2 (strict: >).

    ``alpha_override`` substitutes a known exact alpha for the sampled
    estimate.  f(x0) = 0 is reported as trivially holding (equilibrium).
    """
    x0 = np.asarray(x0, dtype=float)
    if not (r > 0.0):
        raise ValueError("radius must be positive")
    f_x0 = f.value(x0)
    if not np.isfinite(f_x0):
        raise ValueError("f(x0) must be finite")
    name = "C_prime" if strict else "C"
    if f_x0 <= EQUILIBRIUM_F_TOL:
        return ConditionReport(
            condition=name,
            holds=True,
            alpha_estimate=INF,
            worst_witness=None,
            r=r,
            x0=x0,
            theta_budget=math.nan,
            equilibrium=True,
            details={"threshold": 0.0, "f_x0": f_x0},
        )
    if alpha_override is not None:
        alpha = float(alpha_override)
        witness = None
        n_adm = -1
    else:
        scan = _scan(f, x0, r, f_x0, None, sample_count, seed)
        alpha = scan["alpha"]
        witness = scan["alpha_witness"]
        n_adm = scan["n_admissible"]
    threshold = 4.0 * f_x0 / (r * r)
    guard = EQUALITY_GUARD * max(threshold, 1.0)
    if strict:
        holds = alpha > threshold + guard
    else:
        holds = alpha >= threshold - guard
    return ConditionReport(
        condition=name,
        holds=bool(holds),
        alpha_estimate=alpha,
        worst_witness=None if witness is None else (witness, alpha - threshold),
        r=r,
        x0=x0,
        theta_budget=math.nan,
        details={
            "threshold": threshold,
            "f_x0": f_x0,
            "n_admissible": n_adm,
            "empty_admissible": n_adm == 0,
        },
    )


def check_condition_A(
    f: Functional,
    pf: ParameterFunction,
    x0,
    r: float,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
    strict: bool = False,
    seed: int = SAMPLER_SEED,
) -> ConditionReport:
    """Check theta(f(x0)) <= r (strict: <) and theta'(f) * |df| >= 1 on the
    admissible set.

    The slope inequality is accepted at min product >= 1 - 1e-6 to absorb
    estimator bias; the worst witness (point, product - 1) is reported either
    way.  f(x0) = 0 is reported as trivially holding (equilibrium).
    """
    x0 = np.asarray(x0, dtype=float)
    if not (r > 0.0):
        raise ValueError("radius must be positive")
    f_x0 = f.value(x0)
    if not np.isfinite(f_x0):
        raise ValueError("f(x0) must be finite")
    name = "A_prime" if strict else "A"
    if f_x0 <= EQUILIBRIUM_F_TOL:
        return ConditionReport(
            condition=name,
            holds=True,
            alpha_estimate=INF,
            worst_witness=None,
            r=r,
            x0=x0,
            theta_budget=r,
            equilibrium=True,
            details={"f_x0": f_x0},
        )
    budget = r - pf.theta(f_x0)
    guard = EQUALITY_GUARD * max(1.0, r)
    budget_ok = budget > guard if strict else budget >= -guard
    scan = _scan(f, x0, r, f_x0, pf, sample_count, seed)
    min_product = scan["min_product"]
    slope_ok = min_product >= 1.0 - SLOPE_ACCEPT_TOL
    witness = scan["product_witness"]
    return ConditionReport(
        condition=name,
        holds=bool(budget_ok and slope_ok),
        alpha_estimate=scan["alpha"],
        worst_witness=None if witness is None else (witness, min_product - 1.0),
        r=r,
        x0=x0,
        theta_budget=budget,
        details={
            "f_x0": f_x0,
            "budget_ok": bool(budget_ok),
            "slope_ok": bool(slope_ok),
            "min_product": min_product,
            "n_admissible": scan["n_admissible"],
            "empty_admissible": scan["n_admissible"] == 0,
        },
    )


def matched_half_power(alpha: float) -> ParameterFunction:
    """theta(u) = 2 sqrt(u / alpha): the parameter function whose budget
    inequality is exactly the alpha >= 4 f(x0) / r^2 threshold test."""
    if not (0.0 < alpha < INF):
        raise ValueError("alpha must be positive and finite")
    return make_power_theta(c=1.0 / math.sqrt(alpha), gamma=0.5)
