"""Proximal point iteration with variational certificates.

The resolvent of f at x with step tau minimises phi(z) = f(z) + d(x,z)^2 /
(2 tau).  Since f >= 0 on the benchmark corpus, any minimiser lies in the
ball of radius sqrt(2 tau f(x)) around x, so in one dimension a dense scan
of that interval followed by bracketed refinement is an exhaustive, certified
solve; several dimensions fall back to multistart local optimisation.

The module also evaluates the De Giorgi variational-interpolation identity
for a single step, per-step monotonicity/stationarity inequalities, the
pairwise theta-distance bounds along an iterate sequence, closed-form decay
bounds (geometric, finite-termination, doubly-exponential, polynomial)
driven by a power parameter function, and the one-variable recursion
u_{k+1} + alpha u_{k+1}^delta <= u_k behind those bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .core import INF, EuclideanBackend, Functional, as_point
from .flow import DEFAULT_CERT_TOL, RateCertificate, _certificate, _skipped
from .sampling import ball_sample
from .slope import descending_slope
from .theta import AuxiliaryFunctions, ParameterFunction


@dataclass
class ProxControls:
    n_grid: int = 1025
    newton_iters: int = 3
    objective_tie_tol: float = 1e-10
    point_tie_tol: float = 1e-9
    policy: str = "smallest-distance"
    stop_f_tol: float = 1e-14
    stall_tol: float = 1e-14
    max_steps: int = 10_000
    compute_de_giorgi: bool = False
    de_giorgi_panels: int = 20
    de_giorgi_grid: int = 257
    box_slack: float = 1e-6
    n_starts: int = 32  # multistart count for dimension > 1


@dataclass
class ResolventResult:
    points: List[np.ndarray]  # objective-tied minimisers, sorted
    objective: float
    f_values: List[float]
    certified: bool  # True when found by exhaustive 1-d scan
    n_evals: int


@dataclass
class ProxStep:
    k: int
    tau: float
    from_point: np.ndarray
    to_point: np.ndarray
    f_from: float
    f_to: float
    dist: float
    slope_to: float
    n_candidates: int
    de_giorgi: float = math.nan


@dataclass
class ProxSequence:
    steps: List[ProxStep]
    points: np.ndarray  # (N+1, dim) iterates, row 0 = x0
    fs: np.ndarray
    dists: np.ndarray  # dists[k] = step into iterate k, dists[0] = 0
    slopes: np.ndarray
    dg_residuals: np.ndarray  # nan where not computed
    taus: np.ndarray
    stop_reason: str
    terminated_at: Optional[int]  # first k with f_k <= stop_f_tol
    policy: str
    x0: np.ndarray

    @property
    def n_iterates(self) -> int:
        return self.fs.size


# ---------------------------------------------------------------------------
# resolvent


def _phi(f: Functional, x: np.ndarray, tau: float):
    def phi(z: np.ndarray) -> float:
        diff = z - x
        return f.value(z) + float(diff @ diff) / (2.0 * tau)

    return phi


def _golden_polish(phi, z: float, lo: float, hi: float) -> float:
    """Shrink a bracket around z to machine width by golden section.

    Bracketed solvers stop at a relative width near sqrt(eps), which leaves
    minimisers sitting at kinks (where no stationary point exists for Newton
    to finish the job) about 1e-13 off.  Another seventy golden steps cost
    little and pin such points to full precision.
    """
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - ratio * (b - a)
    c2 = a + ratio * (b - a)
    f1, f2 = phi(np.array([c1])), phi(np.array([c2]))
    tol = 1e-16 * max(1.0, abs(z))
    iters = 0
    while b - a > tol and iters < 130:
        iters += 1
        if f1 > f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + ratio * (b - a)
            f2 = phi(np.array([c2]))
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - ratio * (b - a)
            f1 = phi(np.array([c1]))
    zm = c1 if f1 <= f2 else c2
    return zm if phi(np.array([zm])) <= phi(np.array([z])) else z


def _newton_polish(
    f: Functional, x: np.ndarray, tau: float, z: float, lo: float, hi: float, iters: int
) -> Tuple[float, bool]:
    """Guarded Newton on phi'(z) = f'(z) + (z - x)/tau, 1-d only.

    Returns the polished point and whether stationarity was certified; at a
    kink minimiser there is no stationary point and the caller must fall
    back to direct bracket shrinking.
    """
    psi_tol = 1e-9 * (1.0 + 1.0 / tau) * max(1.0, abs(z))
    if f.smooth_gradient is None:
        return z, False
    xval = float(x[0])
    phi = _phi(f, x, tau)
    h = 1e-7 * max(1.0, abs(z))
    psi = math.inf
    for _ in range(iters):
        g = f.gradient(np.array([z]))
        if g is None:
            return z, False
        psi = float(g[0]) + (z - xval) / tau
        gp = f.gradient(np.array([z + h]))
        gm = f.gradient(np.array([z - h]))
        if gp is None or gm is None:
            return z, False
        dpsi = (float(gp[0]) - float(gm[0])) / (2.0 * h) + 1.0 / tau
        if not np.isfinite(dpsi) or dpsi <= 0:
            return z, abs(psi) <= psi_tol
        z_new = min(max(z - psi / dpsi, lo), hi)
        # allow one rounding ulp uphill: near the minimum phi is flat to
        # machine precision while the stationarity residual still improves
        if phi(np.array([z_new])) <= phi(np.array([z])) + 4e-16 * (
            1.0 + abs(phi(np.array([z])))
        ):
            z = z_new
        else:
            break
    g = f.gradient(np.array([z]))
    if g is not None:
        psi = float(g[0]) + (z - xval) / tau
    return z, abs(psi) <= psi_tol


def resolvent(
    f: Functional, x, tau: float, controls: Optional[ProxControls] = None
) -> ResolventResult:
    """All minimisers of z -> f(z) + |z - x|^2 / (2 tau), up to value ties."""
    c = controls or ProxControls()
    x = as_point(x)
    if tau <= 0:
        raise ValueError("tau must be positive")
    fx = f.value(x)
    if not np.isfinite(fx) or fx < 0:
        raise ValueError("resolvent needs a finite nonnegative f(x)")
    phi = _phi(f, x, tau)
    if fx == 0.0:
        return ResolventResult([x.copy()], 0.0, [0.0], True, 1)
    radius = math.sqrt(2.0 * tau * fx) * (1.0 + c.box_slack)

    if x.size == 1:
        xval = float(x[0])
        grid = np.linspace(xval - radius, xval + radius, c.n_grid)
        vals = np.array([phi(np.array([z])) for z in grid])
        n_evals = c.n_grid
        # basin representatives: grid points not above either neighbour
        cand = [
            i
            for i in range(c.n_grid)
            if (i == 0 or vals[i] <= vals[i - 1])
            and (i == c.n_grid - 1 or vals[i] <= vals[i + 1])
        ]
        best_grid = vals.min()
        cand = [i for i in cand if vals[i] <= best_grid + 1e-6 * (1.0 + abs(best_grid))]
        refined: List[Tuple[float, float]] = []
        for i in cand:
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, c.n_grid - 1)]
            if hi - lo <= 0:
                refined.append((vals[i], grid[i]))
                continue
            res = minimize_scalar(
                lambda z: phi(np.array([z])),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-13},
            )
            n_evals += res.nfev
            z, stationary = _newton_polish(
                f, x, tau, float(res.x), lo, hi, c.newton_iters
            )
            if not stationary:
                z = _golden_polish(phi, z, lo, hi)
                n_evals += 140
            refined.append((phi(np.array([z])), z))
        refined.sort()
        best = refined[0][0]
        keep: List[float] = []
        for val, z in refined:
            if val > best + c.objective_tie_tol * (1.0 + abs(best)):
                continue
            if all(abs(z - w) > c.point_tie_tol * (1.0 + abs(z)) for w in keep):
                keep.append(z)
        keep.sort()
        points = [np.array([z]) for z in keep]
        return ResolventResult(
            points, float(best), [f.value(p) for p in points], True, n_evals
        )

    # dimension > 1: multistart local minimisation inside the box
    starts = [x.copy()] + list(ball_sample(x, radius, c.n_starts))
    found: List[Tuple[float, np.ndarray]] = []
    n_evals = 0
    for s in starts:
        if f.smooth_gradient is not None and f.gradient(s) is not None:
            res = minimize(phi, s, method="L-BFGS-B")
        else:
            res = minimize(phi, s, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
        n_evals += res.nfev
        found.append((float(res.fun), np.asarray(res.x, dtype=float)))
    found.sort(key=lambda p: p[0])
    best = found[0][0]
    points = []
    for val, z in found:
        if val > best + c.objective_tie_tol * (1.0 + abs(best)):
            continue
        if all(
            np.linalg.norm(z - w) > c.point_tie_tol * (1.0 + np.linalg.norm(z))
            for w in points
        ):
            points.append(z)
    points.sort(key=lambda p: tuple(p))
    return ResolventResult(
        points, best, [f.value(p) for p in points], False, n_evals
    )


def _pick(points: List[np.ndarray], x: np.ndarray, policy: str) -> np.ndarray:
    if len(points) == 1:
        return points[0]
    if policy == "smallest-distance":
        keyed = sorted(
            points, key=lambda z: (float(np.linalg.norm(z - x)), tuple(z))
        )
        return keyed[0]
    if policy == "positive-branch":
        return max(points, key=lambda z: tuple(z))
    # negative-branch and lexicographic both take the canonical smallest
    return min(points, key=lambda z: tuple(z))


# ---------------------------------------------------------------------------
# sequence


def run_prox_sequence(
    f: Functional,
    x0,
    tau: Union[float, Sequence[float]],
    n_steps: Optional[int] = None,
    controls: Optional[ProxControls] = None,
) -> ProxSequence:
    """Iterate the resolvent from x0 with constant or per-step tau."""
    c = controls or ProxControls()
    x = as_point(x0)
    if np.isscalar(tau) or isinstance(tau, float):
        if n_steps is None:
            raise ValueError("n_steps required with scalar tau")
        taus = [float(tau)] * int(n_steps)
    else:
        taus = [float(t) for t in tau]
        if n_steps is not None and n_steps != len(taus):
            raise ValueError("n_steps disagrees with the tau schedule length")
    points = [x.copy()]
    fs = [f.value(x)]
    dists = [0.0]
    slopes = [descending_slope(f, x).value]
    dgs = [math.nan]
    steps: List[ProxStep] = []
    used_taus: List[float] = []
    stop_reason = "step-budget"
    terminated_at: Optional[int] = 0 if fs[0] <= c.stop_f_tol else None
    if terminated_at is not None:
        stop_reason = "f-tolerance"
    else:
        for k, t in enumerate(taus):
            res = resolvent(f, x, t, c)
            z = _pick(res.points, x, c.policy)
            fz = f.value(z)
            d = float(np.linalg.norm(z - x))
            sl = descending_slope(f, z).value
            dg = math.nan
            if c.compute_de_giorgi:
                dg = de_giorgi_residual(f, x, t, controls=c).residual
            steps.append(
                ProxStep(
                    k=k + 1,
                    tau=t,
                    from_point=x.copy(),
                    to_point=z.copy(),
                    f_from=fs[-1],
                    f_to=fz,
                    dist=d,
                    slope_to=sl,
                    n_candidates=len(res.points),
                    de_giorgi=dg,
                )
            )
            used_taus.append(t)
            points.append(z.copy())
            fs.append(fz)
            dists.append(d)
            slopes.append(sl)
            dgs.append(dg)
            x = z
            if fz <= c.stop_f_tol:
                terminated_at = k + 1
                stop_reason = "f-tolerance"
                break
            if d <= c.stall_tol:
                stop_reason = "stall"
                break
    return ProxSequence(
        steps=steps,
        points=np.vstack(points),
        fs=np.array(fs),
        dists=np.array(dists),
        slopes=np.array(slopes),
        dg_residuals=np.array(dgs),
        taus=np.array(used_taus),
        stop_reason=stop_reason,
        terminated_at=terminated_at,
        policy=c.policy,
        x0=as_point(x0),
    )


def check_step_monotonicity(step: ProxStep, tol: float = 1e-9) -> dict:
    """Per-step inequalities every exact resolvent step satisfies.

    value drop: f(z) <= f(x); variational drop: f(z) + d^2/(2 tau) <= f(x);
    stationarity: tau |df|(z) <= d whenever the slope at z is finite.
    """
    out = {
        "value_decrease": step.f_to <= step.f_from + tol,
        "variational_decrease": step.f_to + step.dist**2 / (2.0 * step.tau)
        <= step.f_from + tol,
        "variational_margin": step.f_from
        - step.f_to
        - step.dist**2 / (2.0 * step.tau),
    }
    if np.isfinite(step.slope_to):
        out["stationarity"] = step.tau * step.slope_to <= step.dist + tol
        out["stationarity_margin"] = step.dist - step.tau * step.slope_to
        if not out["stationarity"] and step.f_to <= 1e-12 * (1.0 + abs(step.f_from)):
            # the step reached the bottom of the value range; a point this
            # close to a minimiser can carry a discontinuous sampled slope
            # while the exact landing point has slope zero
            out["stationarity"] = True
    else:
        out["stationarity"] = False
        out["stationarity_margin"] = -INF
    return out


# ---------------------------------------------------------------------------
# De Giorgi variational interpolation


@dataclass
class DeGiorgiReport:
    residual: float  # f(z) + d^2/(2 tau) + integral - f(x), signed
    value_term: float
    distance_term: float
    integral_term: float
    z: np.ndarray
    tau: float
    n_evals: int


def de_giorgi_residual(
    f: Functional,
    x,
    tau: float,
    controls: Optional[ProxControls] = None,
) -> DeGiorgiReport:
    """Residual of the interpolation identity for one resolvent step:

        f(z_tau) + d(x, z_tau)^2/(2 tau)
            + int_0^tau d(x, z_s)^2 / (2 s^2) ds  =  f(x).

    The integral is split into dyadic panels [tau 2^-(j+1), tau 2^-j] with
    8-point Gauss-Legendre on each; the remaining head below the innermost
    panel has the same length and an integrand converging to a constant
    (half the squared slope at x), so it is estimated by repeating the
    innermost panel's value.
    """
    c = controls or ProxControls()
    inner = ProxControls(
        n_grid=c.de_giorgi_grid,
        policy=c.policy,
        newton_iters=c.newton_iters,
        box_slack=c.box_slack,
    )
    x = as_point(x)
    fx = f.value(x)
    if fx == 0.0:
        return DeGiorgiReport(0.0, 0.0, 0.0, 0.0, x.copy(), tau, 1)
    n_evals = 0

    def z_at(s: float) -> np.ndarray:
        nonlocal n_evals
        res = resolvent(f, x, s, inner)
        n_evals += res.n_evals
        return _pick(res.points, x, c.policy)

    z_tau = z_at(tau)
    d_tau = float(np.linalg.norm(z_tau - x))
    nodes, weights = np.polynomial.legendre.leggauss(8)
    integral = 0.0
    panel_val = 0.0
    for j in range(c.de_giorgi_panels):
        lo = tau * 2.0 ** (-(j + 1))
        hi = tau * 2.0 ** (-j)
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        panel_val = 0.0
        for t, w in zip(nodes, weights):
            s = mid + half * t
            ds = float(np.linalg.norm(z_at(s) - x))
            panel_val += w * ds * ds / (2.0 * s * s)
        panel_val *= half
        integral += panel_val
    integral += panel_val  # head estimate, see docstring
    value_term = f.value(z_tau)
    distance_term = d_tau * d_tau / (2.0 * tau)
    residual = value_term + distance_term + integral - fx
    return DeGiorgiReport(
        residual=float(residual),
        value_term=float(value_term),
        distance_term=float(distance_term),
        integral_term=float(integral),
        z=z_tau,
        tau=tau,
        n_evals=n_evals,
    )


def one_step_decay_check(
    f: Functional,
    x,
    tau: float,
    pf: ParameterFunction,
    controls: Optional[ProxControls] = None,
) -> dict:
    """Margin of the conditioned one-step decay f(x) - f(z) >= tau/theta'(f(z))^2."""
    c = controls or ProxControls()
    x = as_point(x)
    res = resolvent(f, x, tau, c)
    z = _pick(res.points, x, c.policy)
    fx, fz = f.value(x), f.value(z)
    if fz > 0:
        rhs = tau / pf.theta_deriv(fz) ** 2
    else:
        rhs = tau / pf.theta_deriv(1e-300) ** 2 if pf.gamma == 1.0 else 0.0
    lhs = fx - fz
    return {
        "lhs": float(lhs),
        "rhs": float(rhs),
        "margin": float(lhs - rhs),
        "holds": bool(lhs >= rhs - 1e-9),
        "z": z,
    }


# ---------------------------------------------------------------------------
# error-bound (distance to sublevel set) check


def ioffe_distance_check(
    f: Functional,
    x,
    delta: float,
    v: float,
    box: Optional[Tuple[float, float]] = None,
    grid_points: int = 4097,
    tol: float = 1e-9,
) -> dict:
    """Check d(x, {f <= delta}) <= (f(x) - delta)/v by exhaustive 1-d scan.

    v must lower-bound the slope on the strip {delta < f <= f(x)} near x for
    the bound to be a theorem; the empirical strip minimum of the sampled
    slope is reported alongside so callers can audit that premise.
    """
    x = as_point(x)
    if x.size != 1:
        raise ValueError("the scan-based check is one dimensional")
    fx = f.value(x)
    if not (fx > delta):
        return {"distance": 0.0, "bound": 0.0, "margin": 0.0, "holds": True}
    if v <= 0:
        raise ValueError("v must be positive")
    xval = float(x[0])
    bound = (fx - delta) / v
    lo, hi = box if box is not None else (xval - 4.0 * bound, xval + 4.0 * bound)
    grid = np.linspace(lo, hi, grid_points)
    vals = np.array([f.value(np.array([g])) for g in grid])
    below = vals <= delta
    dist = INF
    strip_slope = INF
    for i, g in enumerate(grid):
        if below[i]:
            cand = abs(g - xval)
            # sharpen across the crossing cell when a neighbour is above level
            for jn in (i - 1, i + 1):
                if 0 <= jn < grid_points and not below[jn]:
                    try:
                        root = brentq(
                            lambda z: f.value(np.array([z])) - delta, min(g, grid[jn]),
                            max(g, grid[jn]), xtol=1e-13,
                        )
                        cand = min(cand, abs(root - xval))
                    except ValueError:
                        pass
            dist = min(dist, cand)
        elif delta < vals[i] <= fx and abs(g - xval) <= bound + tol:
            strip_slope = min(strip_slope, descending_slope(f, np.array([g])).value)
    return {
        "distance": float(dist),
        "bound": float(bound),
        "margin": float(bound - dist),
        "holds": bool(dist <= bound + tol),
        "strip_slope_min": float(strip_slope),
    }


# ---------------------------------------------------------------------------
# the decay recursion u_{k+1} + alpha u_{k+1}^delta <= u_k


def _golden_max(fun, lo: float, hi: float, tol: float = 1e-10) -> Tuple[float, float]:
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - ratio * (b - a)
    c2 = a + ratio * (b - a)
    f1, f2 = fun(c1), fun(c2)
    while b - a > tol:
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + ratio * (b - a)
            f2 = fun(c2)
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - ratio * (b - a)
            f1 = fun(c1)
    xm = 0.5 * (a + b)
    return xm, fun(xm)


@dataclass(frozen=True)
class RecursiveBoundParams:
    alpha: float
    delta: float
    f0: float
    poly_c: Optional[float] = None  # delta > 1 polynomial constant
    alpha_tilde: Optional[float] = None  # delta < 1 geometric rate
    u_star: Optional[float] = None  # delta < 1 fixed scale alpha^(1/(1-delta))
    k0: Optional[int] = None  # delta < 1 doubly-exponential entry index


def recursive_bound_params(
    alpha: float, delta: float, f0: float, r_max: float = 1e6
) -> RecursiveBoundParams:
    """Derive the bound constants for u_{k+1} + alpha u_{k+1}^delta <= u_k.

    delta > 1: polynomial constant C = sup over R in (1, r_max] of
    min(alpha (delta - 1)/R, (R^((delta-1)/delta) - 1) f0^(1-delta)), found
    by golden-section (the first branch falls, the second rises, so their
    minimum is unimodal).  delta < 1: uniform geometric rate alpha_tilde =
    alpha f0^(delta-1), scale u* = alpha^(1/(1-delta)), and the entry index
    k0 after which the normalised sequence stays below 1/2 and squares away.
    """
    if alpha <= 0 or delta <= 0 or f0 <= 0:
        raise ValueError("alpha, delta, f0 must be positive")
    if delta == 1.0:
        return RecursiveBoundParams(alpha, delta, f0)
    if delta > 1.0:

        def branch(r: float) -> float:
            return min(
                alpha * (delta - 1.0) / r,
                (r ** ((delta - 1.0) / delta) - 1.0) * f0 ** (1.0 - delta),
            )

        _, c_val = _golden_max(branch, 1.0 + 1e-12, r_max)
        return RecursiveBoundParams(alpha, delta, f0, poly_c=c_val)
    u_star = alpha ** (1.0 / (1.0 - delta))
    alpha_tilde = alpha * f0 ** (delta - 1.0)
    if f0 <= 0.5 * u_star:
        k0 = 0
    else:
        k0 = int(math.ceil(math.log(2.0 * f0 / u_star) / math.log1p(alpha_tilde)))
    return RecursiveBoundParams(
        alpha, delta, f0, alpha_tilde=alpha_tilde, u_star=u_star, k0=k0
    )


def recursive_bound(params: RecursiveBoundParams, k: int) -> float:
    """Closed-form upper bound for the k-th term of the recursion."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    a, d, f0 = params.alpha, params.delta, params.f0
    if d == 1.0:
        return f0 * (1.0 + a) ** (-k)
    if d > 1.0:
        beta = d - 1.0
        return (f0 ** (-beta) + params.poly_c * k) ** (-1.0 / beta)
    geo = f0 * (1.0 + params.alpha_tilde) ** (-k)
    if k < params.k0:
        return geo
    m = k - params.k0
    # the inner power of two grows without bound; once it exceeds the float
    # range 2**-inner underflows to the correct limit 0.0
    log_inner = -m * math.log(d)
    inner = math.inf if log_inner > 709.0 else math.exp(log_inner)
    dexp = params.u_star * math.pow(2.0, -inner)
    return min(geo, dexp)


def recursion_equality_sequence(params: RecursiveBoundParams, n: int) -> np.ndarray:
    """Extremal sequence solving u_{k+1} + alpha u_{k+1}^delta = u_k exactly.

    Closed stable forms for delta in {1/2, 1, 2}, bracketed root otherwise.
    """
    a, d = params.alpha, params.delta
    out = np.empty(n + 1)
    out[0] = params.f0
    for k in range(n):
        prev = out[k]
        if prev <= 0.0:
            out[k + 1] = 0.0
            continue
        if d == 1.0:
            out[k + 1] = prev / (1.0 + a)
        elif d == 0.5:
            s = 2.0 * prev / (a + math.sqrt(a * a + 4.0 * prev))
            out[k + 1] = s * s
        elif d == 2.0:
            out[k + 1] = 2.0 * prev / (1.0 + math.sqrt(1.0 + 4.0 * a * prev))
        else:
            out[k + 1] = brentq(
                lambda u: u + a * u**d - prev, 0.0, prev, xtol=1e-300, rtol=8.9e-16
            )
    return out


# ---------------------------------------------------------------------------
# certificates along a prox sequence


def certify_rates_discrete(
    seq: ProxSequence,
    pf: ParameterFunction,
    aux: AuxiliaryFunctions,
    x0=None,
    r: Optional[float] = None,
    alpha: Optional[float] = None,
    tol: float = DEFAULT_CERT_TOL,
) -> List[RateCertificate]:
    """Distance and decay certificates for a conditioned prox sequence.

    Emits the pairwise theta-distance bound d(y_i, y_j) <= theta(f_i) -
    theta(f_j), the tail bound d(y_k, y_last) <= theta(f_k), confinement in
    the anchor ball when (x0, r) are given, and with a ratio constant alpha
    the geometric bounds f_k <= prod (1 + alpha tau_i)^-1 f_0 and
    d(y_k, y_last) <= r prod (1 + alpha tau_i)^-1/2.
    """
    fs = seq.fs
    pts = seq.points
    n = fs.size
    ks = np.arange(n, dtype=float)
    t_star = float(seq.terminated_at) if seq.terminated_at is not None else float(n - 1)
    theta_f = np.array([pf.theta(max(v, 0.0)) for v in fs])
    diffs = pts[:, None, :] - pts[None, :, :]
    dmat = np.sqrt((diffs * diffs).sum(axis=2))
    iu, ju = np.triu_indices(n, k=1)
    pair_margin = float((theta_f[iu] - theta_f[ju] - dmat[iu, ju]).min()) if iu.size else INF
    certs: List[RateCertificate] = []
    cert = _certificate(
        "discrete-theta-distance",
        ks,
        theta_f[0] - theta_f,
        dmat[0, :],
        t_star,
        tol,
        {"pairs": int(iu.size)},
    )
    cert.margin = pair_margin
    cert.verdict = bool(pair_margin >= -tol)
    certs.append(cert)

    certs.append(
        _certificate(
            "discrete-theta-tail", ks[:-1], theta_f[:-1], dmat[:-1, n - 1], t_star, tol
        )
    )

    if x0 is not None and r is not None:
        x0a = as_point(x0)
        d0 = np.array([float(np.linalg.norm(p - x0a)) for p in pts])
        certs.append(
            _certificate(
                "discrete-confinement", ks, np.full(n, float(r)), d0, t_star, tol,
                {"theta_budget": float(theta_f[0])},
            )
        )

    if alpha is not None:
        factors = np.ones(n)
        for k, t in enumerate(seq.taus):
            if k + 1 < n:
                factors[k + 1] = factors[k] / (1.0 + alpha * t)
        certs.append(
            _certificate(
                "discrete-geometric", ks, fs[0] * factors, fs, t_star, tol,
                {"alpha": float(alpha)},
            )
        )
        if r is not None:
            certs.append(
                _certificate(
                    "discrete-geometric-distance",
                    ks,
                    float(r) * np.sqrt(factors),
                    dmat[:, n - 1],
                    t_star,
                    tol,
                    {"alpha": float(alpha), "limit_proxy": "last iterate"},
                )
            )
    return certs


def certify_power_rates_discrete(
    seq: ProxSequence,
    c: float,
    gamma: float,
    r: Optional[float] = None,
    tol: float = DEFAULT_CERT_TOL,
) -> List[RateCertificate]:
    """Regime-split decay certificates for theta(u) = (c/gamma) u^gamma.

    gamma = 1: finite termination within ceil(c r / tau) steps plus the
    linear bound f_k <= max(f_0 - k tau/c^2, 0).  gamma in (1/2, 1):
    geometric with rate (tau/c^2) f_0^(1-2 gamma), then doubly exponential.
    gamma = 1/2: plain geometric.  gamma < 1/2: polynomial.  All regimes
    also get the distance tail d(y_k, y_last) <= theta(bound_k).
    """
    c = float(c)
    gamma = float(gamma)
    if not (0.0 < gamma <= 1.0) or c <= 0:
        raise ValueError("need c > 0 and gamma in (0, 1]")
    fs = seq.fs
    n = fs.size
    ks = np.arange(n, dtype=float)
    t_star = float(seq.terminated_at) if seq.terminated_at is not None else float(n - 1)
    certs: List[RateCertificate] = []
    if seq.taus.size == 0:
        return [_skipped("discrete-power", t_star, tol, "empty sequence")]
    tau = float(seq.taus[0])
    if not np.allclose(seq.taus, tau):
        return [
            _skipped(
                "discrete-power", t_star, tol,
                "regime bounds assume a constant step size",
            )
        ]
    alpha_rec = tau / (c * c)
    dlast = np.array([float(np.linalg.norm(p - seq.points[-1])) for p in seq.points])

    if gamma == 1.0:
        pred_lin = np.maximum(fs[0] - ks * alpha_rec, 0.0)
        if r is None:
            certs.append(
                _skipped("finite-termination", t_star, tol, "needs the anchor radius")
            )
        else:
            k_bound = int(math.ceil(c * float(r) / tau - 1e-12))
            if seq.terminated_at is not None:
                margin = float(k_bound - seq.terminated_at)
                obs = float(seq.terminated_at)
            elif n - 1 >= k_bound:
                margin = -INF  # ran past the bound without terminating
                obs = INF
            else:
                certs.append(
                    _skipped(
                        "finite-termination", t_star, tol,
                        "sequence stopped before the termination bound",
                    )
                )
                obs = None
                margin = None
            if margin is not None:
                cert = _certificate(
                    "finite-termination",
                    np.array([0.0]),
                    np.array([float(k_bound)]),
                    np.array([obs]),
                    t_star,
                    tol,
                    {"k_bound": k_bound, "linear_margin": float((pred_lin - fs).min())},
                )
                cert.margin = margin
                cert.verdict = bool(margin >= -tol)
                certs.append(cert)
        bounds = pred_lin
    else:
        params = recursive_bound_params(alpha_rec, 2.0 - 2.0 * gamma, float(fs[0]))
        bounds = np.array([recursive_bound(params, int(k)) for k in range(n)])
        if gamma == 0.5:
            certs.append(
                _certificate(
                    "discrete-geometric", ks, bounds, fs, t_star, tol,
                    {"rate": 1.0 + alpha_rec},
                )
            )
        elif gamma > 0.5:
            geo = np.array(
                [params.f0 * (1.0 + params.alpha_tilde) ** (-k) for k in range(n)]
            )
            certs.append(
                _certificate(
                    "discrete-geometric", ks, geo, fs, t_star, tol,
                    {"rate": 1.0 + params.alpha_tilde},
                )
            )
            if n - 1 >= params.k0:
                kk = np.arange(params.k0, n)
                certs.append(
                    _certificate(
                        "discrete-doubly-exponential",
                        kk.astype(float),
                        np.array([recursive_bound(params, int(k)) for k in kk]),
                        fs[kk],
                        t_star,
                        tol,
                        {"k0": params.k0, "u_star": params.u_star},
                    )
                )
            else:
                certs.append(
                    _skipped(
                        "discrete-doubly-exponential", t_star, tol,
                        f"sequence ends before the entry index k0={params.k0}",
                    )
                )
        else:
            certs.append(
                _certificate(
                    "discrete-polynomial", ks, bounds, fs, t_star, tol,
                    {"poly_c": params.poly_c, "exponent": 1.0 / (params.delta - 1.0)},
                )
            )
    theta_bounds = np.array([(c / gamma) * b**gamma for b in bounds])
    certs.append(
        _certificate(
            "discrete-distance-power", ks, theta_bounds, dlast, t_star, tol,
            {"limit_proxy": "last iterate"},
        )
    )
    return certs


def limit_diagnostics(seq: ProxSequence) -> dict:
    """Summary of where the iterate sequence settled."""
    path_length = float(seq.dists.sum())
    return {
        "limit_point": seq.points[-1].copy(),
        "f_limit": float(seq.fs[-1]),
        "path_length": path_length,
        "direct_distance": float(np.linalg.norm(seq.points[-1] - seq.points[0])),
        "stop_reason": seq.stop_reason,
        "terminated_at": seq.terminated_at,
        "n_iterates": seq.n_iterates,
    }


def sequence_to_csv(seq: ProxSequence, path) -> None:
    """Write iterates as ``k,x_1..x_n,f,dist_step,slope,de_giorgi_residual``."""
    dim = seq.points.shape[1]
    header = ",".join(
        ["k"]
        + [f"x_{i + 1}" for i in range(dim)]
        + ["f", "dist_step", "slope", "de_giorgi_residual"]
    )
    lines = [header]
    for k in range(seq.n_iterates):
        cells = [str(k)]
        cells += [repr(float(v)) for v in seq.points[k]]
        cells += [
            repr(float(seq.fs[k])),
            repr(float(seq.dists[k])),
            repr(float(seq.slopes[k])),
            repr(float(seq.dg_residuals[k])),
        ]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
