"""Euclidean metric backend and extended-value objective oracles.

Points are plain 1-D float arrays.  Objectives take values in [0, +inf];
``math.inf`` marks points outside the effective domain and compares greater
than every finite value, which is all the extended arithmetic we need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

INF = math.inf


def as_point(x) -> np.ndarray:
    """Validate coordinates and return them as a 1-D float array.

    NaN and infinite coordinates are rejected; scalars become length-1 arrays.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("a point must be a non-empty 1-D coordinate array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


@dataclass(frozen=True)
class EuclideanBackend:
    """Reference metric backend: R^n with the Euclidean distance."""

    dimension: int

    def __post_init__(self) -> None:
        if int(self.dimension) < 1 or self.dimension != int(self.dimension):
            raise ValueError("dimension must be a positive integer")

    def distance(self, x, y) -> float:
        return float(
            np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        )


@dataclass
class Functional:
    """Nonnegative extended-value objective over a metric backend.

    ``value`` may return ``math.inf`` outside the effective domain.
    ``analytic_slope`` (exact descending slope) and ``smooth_gradient`` are
    optional oracles; ``smooth_gradient`` returns ``None`` at points where the
    objective is not differentiable.
    """

    label: str
    value: Callable[[np.ndarray], float]
    backend: EuclideanBackend
    analytic_slope: Optional[Callable[[np.ndarray], float]] = None
    smooth_gradient: Optional[Callable[[np.ndarray], Optional[np.ndarray]]] = None

    def __call__(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def gradient(self, x) -> Optional[np.ndarray]:
        if self.smooth_gradient is None:
            return None
        g = self.smooth_gradient(np.asarray(x, dtype=float))
        return None if g is None else np.asarray(g, dtype=float)
