"""Steepest-descent trajectories and their decay-rate certificates.

The integrator follows the negative gradient with adaptive explicit steps
(step ~ safety * f / |grad f|^2, capped), which resolves the natural decay
time scale and shrinks automatically near kink minima so the iterates absorb
there instead of oscillating.  Steps are accepted only if the objective
decreases and the observed dissipation matches the trapezoidal prediction;
a rejected step triggers a halving Euler walk that pins the obstruction
(value jump or gradient break) to a point, where a new segment is glued on.
Multi-segment outputs are concatenations of descent arcs sharing endpoints,
not single maximal-slope curves; they are flagged as glued and the
certificates stated for them are the confinement/limit/telescoped bounds.

Certificates compare sampled trajectory data against the closed-form decay
bounds induced by a parameter function theta and its derived maps eta and
Gamma; each certificate reports the minimum margin (bound - observed) and a
verdict at a stated tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .conditions import ConditionReport
from .core import INF, EuclideanBackend, Functional, as_point
from .sampling import unit_directions
from .theta import AuxiliaryFunctions, ParameterFunction

DEFAULT_CERT_TOL = 1e-7


@dataclass
class FlowControls:
    budget: float = 40.0  # time horizon used when t_end is None/inf
    dt_max: float = 0.01
    safety: float = 0.1
    fixed_dt: Optional[float] = None  # fixed-step mode (convergence studies)
    f_tol: float = 1e-12  # absorption threshold for "f reached zero"
    equilibrium_slope_tol: float = 1e-9
    jump_factor: float = 10.0  # gradient-norm ratio that flags a break
    reversal_cos: float = -0.25  # gradient direction reversal flag
    dissipation_rel: float = 0.25  # relative tolerance on predicted decrease
    event_dt_floor: float = 1e-9
    kink_kick: float = 1e-9  # displacement used to leave a descent kink
    probe_delta: float = 1e-7
    policy: str = "positive-branch"  # positive-branch | negative-branch | lexicographic
    max_steps: int = 2_000_000


@dataclass
class Trajectory:
    ts: np.ndarray  # (N,)
    xs: np.ndarray  # (N, dim)
    fs: np.ndarray  # (N,)
    slopes: np.ndarray  # (N,)
    speeds: np.ndarray  # (N,)
    segments: np.ndarray  # (N,) int segment ids
    x0: np.ndarray
    t_end: float
    segment_boundaries: List[float]
    limit_point: Optional[np.ndarray]
    t_star: Optional[float]  # first time f <= f_tol, None if never reached
    absorbed: bool
    equilibrium: bool
    glued: bool
    budget_mode: bool
    f_tol: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.ts.size

    def state_at(self, t: float) -> Tuple[np.ndarray, float]:
        """Linear interpolation of (position, value) at time t."""
        ts = self.ts
        if t <= ts[0]:
            return self.xs[0].copy(), float(self.fs[0])
        if t >= ts[-1]:
            return self.xs[-1].copy(), float(self.fs[-1])
        j = int(np.searchsorted(ts, t))
        w = (t - ts[j - 1]) / (ts[j] - ts[j - 1])
        x = (1 - w) * self.xs[j - 1] + w * self.xs[j]
        fv = (1 - w) * self.fs[j - 1] + w * self.fs[j]
        return x, float(fv)


@dataclass
class EdeReport:
    residuals: np.ndarray  # (m, 2): t, |  -df/dt - sp^2/2 - sl^2/2 |
    max_residual: float
    equality_residuals: np.ndarray  # (m, 2): t, spread of {-df/dt, sp^2, sl^2}
    max_equality_residual: float
    n_interior: int


@dataclass
class RateCertificate:
    kind: str
    ts: np.ndarray
    predicted: np.ndarray
    observed: np.ndarray
    margin: float
    verdict: bool
    t_star: float
    tol: float
    skipped: bool = False
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# integration


def _gradient_fn(f: Functional, probe_h: float = 1e-6) -> Callable:
    if f.smooth_gradient is not None:
        return f.gradient

    def fd_gradient(x: np.ndarray) -> np.ndarray:
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = probe_h
            g[i] = (f.value(x + e) - f.value(x - e)) / (2.0 * probe_h)
        return g

    return fd_gradient


def _probe_direction(
    f: Functional, x: np.ndarray, fx: float, c: FlowControls
) -> Tuple[float, np.ndarray]:
    """One-sided descent probes around a nonsmooth point.

    Returns the best descent rate and its direction, ties broken by the
    branch policy.
    """
    delta = c.probe_delta * max(1.0, float(np.linalg.norm(x)))
    dirs = unit_directions(x.size, 16)
    rates = []
    for d in dirs:
        rate = (fx - f.value(x + delta * d)) / delta
        rates.append((rate, tuple(d)))
    best = max(r for r, _ in rates)
    tied = [d for r, d in rates if r >= best - 1e-9 * (1.0 + abs(best))]
    if c.policy == "positive-branch":
        pick = max(tied)
    else:  # negative-branch and lexicographic both take the canonical smallest
        pick = min(tied)
    return best, np.array(pick)


def _step_checks(
    fx: float,
    g: np.ndarray,
    fx_new: float,
    g_new: Optional[np.ndarray],
    dt: float,
    c: FlowControls,
) -> bool:
    if g_new is None:
        return False
    if fx_new > fx + 1e-12 * (1.0 + abs(fx)):
        return False
    gn = float(np.linalg.norm(g))
    gn_new = float(np.linalg.norm(g_new))
    ratio = (gn_new + 1e-15) / (gn + 1e-15)
    if max(ratio, 1.0 / ratio) > c.jump_factor:
        return False
    if gn > 0 and gn_new > 0:
        cosang = float(g @ g_new) / (gn * gn_new)
        if cosang < c.reversal_cos:
            return False
    drop = fx - fx_new
    predicted = 0.5 * dt * (gn * gn + gn_new * gn_new)
    if abs(drop - predicted) > c.dissipation_rel * max(drop, predicted) + 1e-12:
        return False
    return True


def _rk4_step(grad: Callable, x: np.ndarray, dt: float, g: np.ndarray):
    k1 = g
    g2 = grad(x - 0.5 * dt * k1)
    if g2 is None:
        return None
    g3 = grad(x - 0.5 * dt * g2)
    if g3 is None:
        return None
    g4 = grad(x - dt * g3)
    if g4 is None:
        return None
    return x - dt / 6.0 * (k1 + 2.0 * g2 + 2.0 * g3 + g4)


def _event_walk(
    f: Functional,
    grad: Callable,
    x: np.ndarray,
    fx: float,
    t: float,
    dt0: float,
    c: FlowControls,
    t_end: float,
):
    """Advance with halving Euler steps after a rejected step.

    Either escapes (no obstruction inside the window: returns glue=None) or
    pins the obstruction between two points a gradient-flow step of size
    ``event_dt_floor`` apart and returns the far side as the glue point.
    """
    dt_w = dt0
    advanced = 0.0
    g = grad(x)
    while True:
        if g is None or float(g @ g) <= 1e-26:
            return t, x, fx, None
        if t >= t_end - 1e-14 or advanced >= dt0:
            return t, x, fx, None
        dt_w = min(dt_w, t_end - t)
        x_try = x - dt_w * g
        fx_try = f.value(x_try)
        g_try = grad(x_try)
        if _step_checks(fx, g, fx_try, g_try, dt_w, c):
            t += dt_w
            advanced += dt_w
            x, fx, g = x_try, fx_try, g_try
            continue
        if dt_w <= c.event_dt_floor:
            return t, x, fx, (x_try, fx_try, t + dt_w)
        dt_w *= 0.5


def integrate_maximal_slope(
    f: Functional,
    x0,
    t_end: Optional[float] = None,
    controls: Optional[FlowControls] = None,
) -> Trajectory:
    """Integrate the steepest-descent flow of f from x0.

    ``t_end=None`` (or inf) means run on the time budget with early stop once
    f falls below the absorption threshold; after absorption or at an
    equilibrium the trajectory is extended as an exactly constant tail.
    Value jumps and gradient breaks are located by bisection and glued as new
    segments.
    """
    c = controls or FlowControls()
    x = as_point(x0)
    budget_mode = t_end is None or t_end == INF
    horizon = c.budget if budget_mode else float(t_end)
    if not (horizon > 0):
        raise ValueError("time horizon must be positive")
    grad = _gradient_fn(f)

    ts: List[float] = []
    xs: List[np.ndarray] = []
    fs: List[float] = []
    slopes: List[float] = []
    segs: List[int] = []
    boundaries: List[float] = []

    def slope_at(pt: np.ndarray) -> float:
        if f.analytic_slope is not None:
            return float(f.analytic_slope(pt))
        g = grad(pt)
        if g is not None:
            return float(np.linalg.norm(g))
        return 0.0

    def record(tv: float, pt: np.ndarray, fv: float, sg: int) -> None:
        ts.append(tv)
        xs.append(pt.copy())
        fs.append(fv)
        slopes.append(slope_at(pt))
        segs.append(sg)

    t = 0.0
    fx = f.value(x)
    if not np.isfinite(fx):
        raise ValueError("f(x0) must be finite")
    seg = 0
    record(t, x, fx, seg)
    absorbed = fx <= c.f_tol
    t_star: Optional[float] = 0.0 if absorbed else None
    equilibrium = False
    steps = 0

    while not absorbed and not equilibrium and t < horizon - 1e-14:
        steps += 1
        if steps > c.max_steps:
            break
        g = grad(x)
        if g is None or float(g @ g) <= 1e-26:
            rate, direction = _probe_direction(f, x, fx, c)
            if rate <= c.equilibrium_slope_tol:
                equilibrium = True
                break
            kick = c.kink_kick * max(1.0, float(np.linalg.norm(x)))
            x = x + kick * direction
            fx = f.value(x)
            t += kick / rate
            record(t, x, fx, seg)
            continue
        gn2 = float(g @ g)
        if c.fixed_dt is not None:
            dt = c.fixed_dt
        else:
            dt = min(c.dt_max, c.safety * max(fx, c.f_tol) / gn2)
        remaining = horizon - t
        # stretch the final step rather than leave a sliver of rounding size
        dt = remaining if remaining - dt < 0.5 * dt else min(dt, remaining)
        x_new = _rk4_step(grad, x, dt, g)
        accepted = False
        if x_new is not None:
            fx_new = f.value(x_new)
            g_new = grad(x_new)
            if _step_checks(fx, g, fx_new, g_new, dt, c):
                t += dt
                x, fx = x_new, fx_new
                record(t, x, fx, seg)
                accepted = True
        if not accepted:
            t, x, fx, glue = _event_walk(f, grad, x, fx, t, dt, c, horizon)
            record(t, x, fx, seg)
            if glue is not None:
                x_glue, fx_glue, t_glue = glue
                seg += 1
                boundaries.append(t_glue)
                t, x, fx = t_glue, x_glue, fx_glue
                record(t, x, fx, seg)
        if fx <= c.f_tol:
            absorbed = True
            t_star = t

    # constant tail after absorption / equilibrium
    if (absorbed or equilibrium) and t < horizon - 1e-14:
        record(0.5 * (t + horizon), x, fx, seg)
        record(horizon, x, fx, seg)
        t = horizon

    ts_arr = np.array(ts)
    xs_arr = np.vstack(xs)
    segs_arr = np.array(segs, dtype=int)
    speeds = _sample_speeds(ts_arr, xs_arr, segs_arr)
    return Trajectory(
        ts=ts_arr,
        xs=xs_arr,
        fs=np.array(fs),
        slopes=np.array(slopes),
        speeds=speeds,
        segments=segs_arr,
        x0=as_point(x0),
        t_end=horizon,
        segment_boundaries=boundaries,
        limit_point=xs_arr[-1].copy(),
        t_star=t_star,
        absorbed=absorbed,
        equilibrium=equilibrium,
        glued=len(boundaries) > 0,
        budget_mode=budget_mode,
        f_tol=c.f_tol,
        diagnostics={"steps": steps, "policy": c.policy},
    )


def _sample_speeds(ts: np.ndarray, xs: np.ndarray, segs: np.ndarray) -> np.ndarray:
    n = ts.size
    speeds = np.zeros(n)
    for i in range(n):
        lo = i - 1 if i > 0 and segs[i - 1] == segs[i] else i
        hi = i + 1 if i < n - 1 and segs[i + 1] == segs[i] else i
        if lo == hi:
            continue
        dt = ts[hi] - ts[lo]
        if dt > 0:
            speeds[i] = float(np.linalg.norm(xs[hi] - xs[lo])) / dt
    return speeds


# ---------------------------------------------------------------------------
# energy dissipation check


def verify_ede(traj: Trajectory, f: Optional[Functional] = None) -> EdeReport:
    """Residuals of the dissipation equality -d(f o y)/dt = |y'|^2 = |df|^2.

    Uses centred difference quotients on interior samples of each segment.
    In absorbed runs only triples at or before t* enter: past the absorption
    threshold the tail is frozen by construction and carries no information
    about the arc.  Both the inequality-form residual (against the mean of
    speed^2 and slope^2) and the spread of the three quantities are reported.
    """
    ts, fsv, segs = traj.ts, traj.fs, traj.segments
    slopes = traj.slopes
    if f is not None and f.analytic_slope is not None:
        slopes = np.array([float(f.analytic_slope(x)) for x in traj.xs])
    rows = []
    eq_rows = []
    n = ts.size
    for i in range(1, n - 1):
        if segs[i - 1] != segs[i] or segs[i + 1] != segs[i]:
            continue
        if traj.absorbed and traj.t_star is not None and ts[i + 1] > traj.t_star + 1e-14:
            continue
        dt = ts[i + 1] - ts[i - 1]
        if dt <= 0:
            continue
        dfdt = (fsv[i + 1] - fsv[i - 1]) / dt
        sp = float(np.linalg.norm(traj.xs[i + 1] - traj.xs[i - 1])) / dt
        sl = slopes[i]
        resid = abs(-dfdt - 0.5 * sp * sp - 0.5 * sl * sl)
        triple = (-dfdt, sp * sp, sl * sl)
        rows.append((ts[i], resid))
        eq_rows.append((ts[i], max(triple) - min(triple)))
    res = np.array(rows) if rows else np.zeros((0, 2))
    eq = np.array(eq_rows) if eq_rows else np.zeros((0, 2))
    return EdeReport(
        residuals=res,
        max_residual=float(res[:, 1].max()) if rows else 0.0,
        equality_residuals=eq,
        max_equality_residual=float(eq[:, 1].max()) if eq_rows else 0.0,
        n_interior=len(rows),
    )


# ---------------------------------------------------------------------------
# certificates


def _margin(pred: np.ndarray, obs: np.ndarray) -> float:
    diff = pred - obs
    diff = diff[~np.isnan(diff)]
    return float(diff.min()) if diff.size else INF


def _certificate(
    kind: str,
    ts: np.ndarray,
    predicted: np.ndarray,
    observed: np.ndarray,
    t_star: float,
    tol: float,
    details: Optional[dict] = None,
) -> RateCertificate:
    margin = _margin(predicted, observed)
    return RateCertificate(
        kind=kind,
        ts=ts,
        predicted=predicted,
        observed=observed,
        margin=margin,
        verdict=bool(margin >= -tol),
        t_star=t_star,
        tol=tol,
        details=details or {},
    )


def _skipped(kind: str, t_star: float, tol: float, reason: str) -> RateCertificate:
    return RateCertificate(
        kind=kind,
        ts=np.zeros(0),
        predicted=np.zeros(0),
        observed=np.zeros(0),
        margin=INF,
        verdict=True,
        t_star=t_star,
        tol=tol,
        skipped=True,
        details={"reason": reason},
    )


def certify_rates_continuous(
    traj: Trajectory,
    pf: ParameterFunction,
    aux: AuxiliaryFunctions,
    x0,
    r: float,
    tol: float = DEFAULT_CERT_TOL,
    condition: Optional[ConditionReport] = None,
    pair_count: int = 40,
) -> List[RateCertificate]:
    """Certificates for a trajectory under an anchored slope condition.

    Emits: pairwise theta-distance bound, Gamma bound on the distance to the
    limit, eta bound on the energy, confinement in the anchor ball, the
    explicit exponential forms when theta is the gamma = 1/2 power member,
    and (budget runs with enough horizon) extinction of f at the limit.
    Decreasing-in-time energy bounds are compared on samples with t <= t*.
    """
    x0 = as_point(x0)
    backend = EuclideanBackend(x0.size)
    ts, fsv, xs = traj.ts, traj.fs, traj.xs
    t_star = traj.t_star if traj.t_star is not None else float(ts[-1])
    theta_f = np.array([pf.theta(max(v, 0.0)) for v in fsv])
    certified = condition is None or condition.holds
    certs: List[RateCertificate] = []

    # pairwise theta-distance: d(y_s, y_t) <= theta(f(y_s)) - theta(f(y_t))
    idx = np.unique(np.linspace(0, ts.size - 1, pair_count).astype(int))
    pair_margin = INF
    for ii, i in enumerate(idx):
        for j in idx[ii + 1 :]:
            bound = theta_f[i] - theta_f[j]
            obs = backend.distance(xs[i], xs[j])
            pair_margin = min(pair_margin, bound - obs)
    cert_pairs = _certificate(
        "theta-distance",
        ts[idx],
        theta_f[0] - theta_f[idx],
        np.array([backend.distance(xs[0], xs[j]) for j in idx]),
        t_star,
        tol,
        {"pairs": int(len(idx) * (len(idx) - 1) / 2), "condition_certified": certified},
    )
    cert_pairs.margin = float(pair_margin)
    cert_pairs.verdict = bool(pair_margin >= -tol)
    certs.append(cert_pairs)

    pre_mask = ts <= t_star + 1e-14

    # Gamma bound on distance to the limit
    if traj.limit_point is None:
        certs.append(_skipped("gamma-distance", t_star, tol, "missing limit point"))
    else:
        try:
            gamma_r = aux.gamma(r)
        except ValueError:
            gamma_r = None
        if gamma_r is None or not np.isfinite(gamma_r):
            certs.append(
                _skipped("gamma-distance", t_star, tol, "r outside the range of theta")
            )
        else:
            dlim = np.array(
                [backend.distance(x, traj.limit_point) for x in xs[pre_mask]]
            )
            obs = np.array([aux.gamma(min(d, r)) for d in dlim])
            pred = gamma_r - ts[pre_mask]
            certs.append(
                _certificate(
                    "gamma-distance", ts[pre_mask], pred, obs, t_star, tol,
                    {"gamma_r": gamma_r, "condition_certified": certified},
                )
            )

    # eta bound on the energy
    eta_f0 = aux.eta(float(fsv[0]))
    obs_eta = np.array([aux.eta(max(v, 0.0)) for v in fsv[pre_mask]])
    pred_eta = eta_f0 - ts[pre_mask]
    certs.append(
        _certificate(
            "eta-energy", ts[pre_mask], pred_eta, obs_eta, t_star, tol,
            {"eta_f0": eta_f0, "condition_certified": certified},
        )
    )

    # confinement in the closed ball, strictly inside while f > f_tol
    d_anchor = np.array([backend.distance(x, x0) for x in xs])
    inside_ok = bool(np.all(d_anchor <= r + 1e-9 * max(1.0, r)))
    live = fsv > traj.f_tol
    strict_margin = float((r - d_anchor[live]).min()) if live.any() else INF
    cert_conf = _certificate(
        "confinement", ts, np.full(ts.size, r), d_anchor, t_star, tol,
        {"strict_margin": strict_margin, "condition_certified": certified},
    )
    cert_conf.verdict = bool(inside_ok and strict_margin > 0.0)
    certs.append(cert_conf)

    # explicit exponential forms for the gamma = 1/2 power member
    if pf.family == "power" and pf.gamma == 0.5:
        c2 = pf.c * pf.c
        pred_f = fsv[0] * np.exp(-ts[pre_mask] / c2)
        certs.append(
            _certificate(
                "exponential", ts[pre_mask], pred_f, fsv[pre_mask], t_star, tol,
                {"rate": 1.0 / c2, "condition_certified": certified},
            )
        )
        if traj.limit_point is not None:
            dlim_all = np.array(
                [backend.distance(x, traj.limit_point) for x in xs]
            )
            pred_d = r * np.exp(-ts / (2.0 * c2))
            certs.append(
                _certificate(
                    "exponential-distance", ts, pred_d, dlim_all, t_star, tol,
                    {"rate": 0.5 / c2, "condition_certified": certified},
                )
            )

    # extinction of f at the limit, when the eta rate promises it in budget
    if traj.budget_mode:
        eta_needed = eta_f0 - aux.eta(traj.f_tol)
        if np.isfinite(eta_needed) and eta_needed <= traj.t_end:
            f_final = float(fsv[-1])
            cert_ext = _certificate(
                "extinction",
                np.array([ts[-1]]),
                np.array([2.0 * traj.f_tol]),
                np.array([f_final]),
                t_star,
                tol,
                {"eta_time_needed": eta_needed, "condition_certified": certified},
            )
            certs.append(cert_ext)
        else:
            certs.append(
                _skipped(
                    "extinction", t_star, tol,
                    "eta rate does not force extinction within the budget",
                )
            )
    return certs


def certify_power_family(
    traj: Trajectory,
    c: float,
    gamma: float,
    r: Optional[float] = None,
    tol: float = DEFAULT_CERT_TOL,
) -> RateCertificate:
    """Closed-form power-family decay bounds evaluated against a trajectory.

    Energy: gamma != 1/2 gives (f0^(2g-1) - (2g-1) t / c^2)^(1/(2g-1)),
    gamma = 1/2 the exponential; the distance analogue needs the anchor
    radius r and is skipped (flagged) without it.  For gamma in (1/2, 1] the
    extinction-time bound t* <= c^2 f0^(2g-1) / (2g-1) is also checked.
    """
    c = float(c)
    gamma = float(gamma)
    if not (0.0 < gamma <= 1.0) or c <= 0:
        raise ValueError("need c > 0 and gamma in (0, 1]")
    ts, fsv = traj.ts, traj.fs
    f0 = float(fsv[0])
    t_star = traj.t_star if traj.t_star is not None else float(ts[-1])
    mask = ts <= t_star + 1e-14
    tm = ts[mask]
    c2 = c * c
    if gamma == 0.5:
        pred_f = f0 * np.exp(-tm / c2)
    else:
        p = 2.0 * gamma - 1.0
        base = np.maximum(f0**p - p * tm / c2, 0.0)
        with np.errstate(divide="ignore"):
            pred_f = base ** (1.0 / p) if p > 0 else np.where(
                base > 0, base ** (1.0 / p), INF
            )
    margin_f = _margin(pred_f, fsv[mask])
    details: dict = {"f_bound_margin": margin_f}
    margins = [margin_f]

    if r is not None and traj.limit_point is not None:
        backend = EuclideanBackend(traj.x0.size)
        dlim = np.array(
            [backend.distance(x, traj.limit_point) for x in traj.xs[mask]]
        )
        if gamma == 0.5:
            pred_d = r * np.exp(-tm / (2.0 * c2))
        else:
            p = 2.0 * gamma - 1.0
            base_d = (gamma * r / c) ** (p / gamma) - p * tm / c2
            base_d = np.maximum(base_d, 0.0)
            with np.errstate(divide="ignore"):
                pred_d = (c / gamma) * np.where(
                    base_d > 0, base_d ** (gamma / p), 0.0 if p > 0 else INF
                )
        margin_d = _margin(pred_d, dlim)
        details["distance_bound_margin"] = margin_d
        details["distance_predicted"] = pred_d
        details["distance_observed"] = dlim
        margins.append(margin_d)
    elif r is None:
        details["distance_bound"] = "skipped (no radius supplied)"

    if gamma > 0.5:
        t_star_bound = c2 / (2.0 * gamma - 1.0) * f0 ** (2.0 * gamma - 1.0)
        details["t_star_bound"] = t_star_bound
        if traj.absorbed and traj.t_star is not None:
            details["t_star_observed"] = traj.t_star
            margins.append(t_star_bound - traj.t_star)
        elif traj.t_end >= 1.1 * t_star_bound:
            # had enough time and still no extinction: genuine failure
            margins.append(-INF)
            details["t_star_observed"] = None

    margin = min(margins)
    return RateCertificate(
        kind="power-family",
        ts=tm,
        predicted=pred_f,
        observed=fsv[mask],
        margin=float(margin),
        verdict=bool(margin >= -tol),
        t_star=t_star,
        tol=tol,
        details=details,
    )


def improved_sqrt_distance_bound(
    traj: Trajectory,
    c: float,
    s: float,
    t: float,
    tol: float = DEFAULT_CERT_TOL,
) -> RateCertificate:
    """Two-point distance bound specific to theta(u) = 2c sqrt(u):

        d(y_s, y_t)^2 <= 4c^2 (e^{-s/2c^2} - e^{-t/2c^2}) sqrt(f0)
                          (sqrt(f(y_s)) - sqrt(f(y_t)))
                      <= 4c^2 e^{-s/2c^2} (e^{-s/2c^2} - e^{-t/2c^2}) f0.

    Both bounds are checked; t is clamped to t* if f hits zero inside [s, t].
    """
    if not (0.0 <= s <= t):
        raise ValueError("need 0 <= s <= t")
    c = float(c)
    c2 = c * c
    t_star = traj.t_star if traj.t_star is not None else float(traj.ts[-1])
    t_eff = min(t, t_star)
    clamped = t_eff < t
    x_s, f_s = traj.state_at(s)
    x_t, f_t = traj.state_at(t_eff)
    f0 = float(traj.fs[0])
    backend = EuclideanBackend(traj.x0.size)
    obs = backend.distance(x_s, x_t) ** 2
    es = math.exp(-s / (2.0 * c2))
    et = math.exp(-t_eff / (2.0 * c2))
    bound_fine = 4.0 * c2 * (es - et) * math.sqrt(f0) * (
        math.sqrt(max(f_s, 0.0)) - math.sqrt(max(f_t, 0.0))
    )
    bound_coarse = 4.0 * c2 * es * (es - et) * f0
    margin = min(bound_fine - obs, bound_coarse - obs)
    return RateCertificate(
        kind="improved-sqrt",
        ts=np.array([s, t_eff]),
        predicted=np.array([bound_fine, bound_coarse]),
        observed=np.array([obs, obs]),
        margin=float(margin),
        verdict=bool(margin >= -tol),
        t_star=t_star,
        tol=tol,
        details={
            "clamped_to_t_star": clamped,
            "fine_bound": bound_fine,
            "coarse_bound": bound_coarse,
        },
    )


def glue_trajectories(
    pieces: Sequence[Trajectory],
    pf: ParameterFunction,
    aux: AuxiliaryFunctions,
    x0,
    r: float,
    tol: float = DEFAULT_CERT_TOL,
    endpoint_tol: float = 1e-6,
) -> Tuple[Trajectory, List[RateCertificate]]:
    """Concatenate descent arcs end-to-start and certify the glued object.

    Consecutive pieces must share endpoints within ``endpoint_tol``.  The
    result is flagged as glued (it is a concatenation, not a single
    maximal-slope arc); the certificates produced are the ones that survive
    gluing: telescoped theta-distance, Gamma/eta decay, confinement.
    """
    if not pieces:
        raise ValueError("need at least one trajectory piece")
    backend = EuclideanBackend(pieces[0].xs.shape[1])
    for a, b in zip(pieces, pieces[1:]):
        gap = backend.distance(a.xs[-1], b.xs[0])
        if gap > endpoint_tol:
            raise ValueError(
                f"segment endpoints do not meet: gap {gap:.3e} > {endpoint_tol:.1e}"
            )
    ts_parts = []
    seg_parts = []
    offset = 0.0
    seg_offset = 0
    boundaries: List[float] = []
    for k, piece in enumerate(pieces):
        local = piece.ts - piece.ts[0]
        ts_parts.append(local + offset)
        seg_parts.append(piece.segments + seg_offset)
        boundaries.extend((b - piece.ts[0]) + offset for b in piece.segment_boundaries)
        offset += float(local[-1])
        seg_offset = int(seg_parts[-1].max()) + 1
        if k < len(pieces) - 1:
            boundaries.append(offset)
    ts = np.concatenate(ts_parts)
    xs = np.vstack([p.xs for p in pieces])
    fsv = np.concatenate([p.fs for p in pieces])
    slopes = np.concatenate([p.slopes for p in pieces])
    segs = np.concatenate(seg_parts)
    # drop duplicated glue samples (zero-length time steps confuse quotients)
    keep = np.ones(ts.size, dtype=bool)
    keep[1:] = np.diff(ts) > 0
    ts, xs, fsv, slopes, segs = ts[keep], xs[keep], fsv[keep], slopes[keep], segs[keep]
    f_tol = min(p.f_tol for p in pieces)
    below = np.nonzero(fsv <= f_tol)[0]
    traj = Trajectory(
        ts=ts,
        xs=xs,
        fs=fsv,
        slopes=slopes,
        speeds=_sample_speeds(ts, xs, segs),
        segments=segs,
        x0=as_point(x0),
        t_end=float(ts[-1]),
        segment_boundaries=boundaries,
        limit_point=xs[-1].copy(),
        t_star=float(ts[below[0]]) if below.size else None,
        absorbed=bool(below.size),
        equilibrium=any(p.equilibrium for p in pieces),
        glued=True,
        budget_mode=pieces[-1].budget_mode,
        f_tol=f_tol,
        diagnostics={"pieces": len(pieces)},
    )
    certs = certify_rates_continuous(traj, pf, aux, x0, r, tol=tol)
    return traj, certs


# ---------------------------------------------------------------------------
# CSV export


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write samples as ``t,x_1..x_n,f,slope,speed,segment`` at full precision."""
    dim = traj.xs.shape[1]
    header = ",".join(
        ["t"] + [f"x_{i + 1}" for i in range(dim)] + ["f", "slope", "speed", "segment"]
    )
    lines = [header]
    for i in range(traj.ts.size):
        cells = [repr(float(traj.ts[i]))]
        cells += [repr(float(v)) for v in traj.xs[i]]
        cells += [
            repr(float(traj.fs[i])),
            repr(float(traj.slopes[i])),
            repr(float(traj.speeds[i])),
            str(int(traj.segments[i])),
        ]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def trajectory_from_csv(path) -> Trajectory:
    """Rebuild a trajectory from its CSV export (bitwise round trip).

    Flow metadata that is not serialized (absorption flags, budget mode) is
    reconstructed conservatively from the samples.
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    dim = sum(1 for name in header if name.startswith("x_"))
    data = np.array([[float(v) for v in row] for row in rows])
    ts = data[:, 0]
    xs = data[:, 1 : 1 + dim]
    fsv = data[:, 1 + dim]
    slopes = data[:, 2 + dim]
    speeds = data[:, 3 + dim]
    segs = data[:, 4 + dim].astype(int)
    f_tol = 1e-12
    below = np.nonzero(fsv <= f_tol)[0]
    seg_changes = np.nonzero(np.diff(segs) != 0)[0]
    return Trajectory(
        ts=ts,
        xs=xs,
        fs=fsv,
        slopes=slopes,
        speeds=speeds,
        segments=segs,
        x0=xs[0].copy(),
        t_end=float(ts[-1]),
        segment_boundaries=[float(ts[i + 1]) for i in seg_changes],
        limit_point=xs[-1].copy(),
        t_star=float(ts[below[0]]) if below.size else None,
        absorbed=bool(below.size),
        equilibrium=False,
        glued=bool(seg_changes.size),
        budget_mode=False,
        f_tol=f_tol,
        diagnostics={"source": "csv"},
    )
