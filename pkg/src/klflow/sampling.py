"""Deterministic low-discrepancy point sets shared by the estimators.

Everything here is a pure function of (dimension, count, seed), so repeated
runs with the same configuration sample exactly the same points.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

#: default seed for all deterministic sampling
SAMPLER_SEED = 20240601


@lru_cache(maxsize=128)
def unit_directions(dim: int, count: int, seed: int = SAMPLER_SEED) -> np.ndarray:
    """Deterministic unit direction vectors, shape (m, dim).

    In one dimension the only directions are +1 and -1.  In higher dimensions
    a Halton sequence is pushed through the normal quantile map and
    normalised, which spreads directions evenly over the sphere.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    halton = qmc.Halton(d=dim, scramble=True, seed=seed)
    raw = halton.random(count + 8)
    z = ndtri(np.clip(raw, 1e-12, 1.0 - 1e-12))
    norms = np.linalg.norm(z, axis=1)
    keep = norms > 1e-12
    dirs = z[keep] / norms[keep, None]
    return dirs[:count]


@lru_cache(maxsize=128)
def unit_ball_points(dim: int, count: int, seed: int = SAMPLER_SEED) -> np.ndarray:
    """Deterministic points filling the open unit ball, shape (count, dim).

    One dimension uses midpoints of a uniform grid on (-1, 1); higher
    dimensions combine Halton directions with a Halton radius coordinate via
    the usual r**(1/dim) volume correction.
    """
    if dim == 1:
        mids = (np.arange(count) + 0.5) / count
        return (2.0 * mids - 1.0).reshape(-1, 1)
    halton = qmc.Halton(d=dim + 1, scramble=True, seed=seed)
    raw = halton.random(count + 8)
    z = ndtri(np.clip(raw[:, :dim], 1e-12, 1.0 - 1e-12))
    norms = np.linalg.norm(z, axis=1)
    keep = norms > 1e-12
    dirs = z[keep] / norms[keep, None]
    radii = raw[keep, dim] ** (1.0 / dim)
    pts = dirs * radii[:, None]
    return pts[:count]


def ball_sample(center: np.ndarray, r: float, count: int, seed: int = SAMPLER_SEED) -> np.ndarray:
    """Deterministic sample of the open ball B_r(center)."""
    center = np.asarray(center, dtype=float)
    pts = unit_ball_points(center.size, count, seed)
    return center[None, :] + r * pts
