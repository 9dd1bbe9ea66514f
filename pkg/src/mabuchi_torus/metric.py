"""L^p Finsler distances between invariant potentials.

Distances are read off the initial tangent of the joining geodesic,
``d_p(u0, u1)^p = int |du/dt(0)|^p (1 + u0'') dx``.  Because the dual picture
is flat, the same numbers can be computed from the conjugates alone,
``d_p^p = int |psi_0 - psi_1|^p dq``; :func:`dual_distance` does that and
serves as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geodesic import GeodesicPath, connect, initial_tangent
from .legendre import dual_potential
from .potential import Potential1D, ma_density, require_kahler

__all__ = [
    "P_SWEEP",
    "DistanceReport",
    "d_p",
    "d_infinity",
    "dual_distance",
    "distance_table",
    "segment_speed",
    "chordal_length",
    "Cat0Result",
    "cat0_check",
]

P_SWEEP = (1.0, 1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


@dataclass(frozen=True, eq=False)
class DistanceReport:
    p: float
    value: float
    path: GeodesicPath

    def __float__(self):
        return self.value


def _lp(v: np.ndarray, weight: np.ndarray, h: float, p: float) -> float:
    a = np.abs(v)
    top = a.max()
    if top == 0.0:
        return 0.0
    # scale first so large p does not underflow
    return float(top * (h * np.sum((a / top) ** p * weight)) ** (1.0 / p))


def d_p(u0: Potential1D, u1: Potential1D, p: float = 2.0,
        path: Optional[GeodesicPath] = None) -> DistanceReport:
    """L^p distance from the initial tangent of the geodesic ``u0 -> u1``.

    Pass ``path`` to reuse an existing geodesic; only its tangent is used.
    """
    if not p >= 1:
        raise ValueError(f"d_p needs p >= 1, got {p}")
    if path is None:
        path = connect(u0, u1, K=2)
    v = initial_tangent(path)
    return DistanceReport(float(p), _lp(v, ma_density(path.u0), path.grid.h, p), path)


def d_infinity(u0: Potential1D, u1: Potential1D,
               path: Optional[GeodesicPath] = None) -> float:
    if path is None:
        path = connect(u0, u1, K=2)
    return float(np.abs(initial_tangent(path)).max())


def dual_distance(u0: Potential1D, u1: Potential1D, p: float = 2.0,
                  count: Optional[int] = None) -> float:
    """``(int |psi_0 - psi_1|^p dq)^(1/p)`` on a uniform momentum grid."""
    require_kahler(u0)
    require_kahler(u1)
    count = count or 2 * u0.n
    q = np.arange(count) / count
    gap = dual_potential(u0)(q) - dual_potential(u1)(q)
    if math.isinf(p):
        return float(np.abs(gap).max())
    return _lp(gap, np.ones(count), 1.0 / count, p)


def distance_table(u0: Potential1D, u1: Potential1D,
                   ps=P_SWEEP) -> list[tuple[float, float]]:
    """``(p, d_p)`` for a sweep of exponents, sharing one geodesic."""
    path = connect(u0, u1, K=2)
    return [(float(p), d_p(u0, u1, p, path).value) for p in ps]


def segment_speed(path: GeodesicPath, a: float, b: float, p: float = 2.0) -> float:
    """``d_p(u_a, u_b) / (b - a)`` along a path."""
    if not b > a:
        raise ValueError("segment needs a < b")
    lo, hi = path.times[0], path.times[-1]
    if a < lo - 1e-12 or b > hi + 1e-12:
        raise ValueError(f"segment [{a}, {b}] leaves the path range [{lo}, {hi}]")
    return d_p(path.at(a), path.at(b), p).value / (b - a)


def chordal_length(path: GeodesicPath, p: float = 2.0) -> float:
    """Sum of distances between consecutive slices."""
    pots = [path.potential(k) for k in range(len(path))]
    return float(sum(d_p(x, y, p).value for x, y in zip(pots[:-1], pots[1:])))


@dataclass(frozen=True)
class Cat0Result:
    """Semiparallelogram comparison ``d(m,w)^2 <= (d(u,w)^2 + d(v,w)^2)/2 - d(u,v)^2/4``."""

    lhs: float
    rhs: float
    tol: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol

    def __bool__(self):
        return self.passed


def cat0_check(u: Potential1D, v: Potential1D, w: Potential1D,
               rel_tol: float = 1e-3) -> Cat0Result:
    mid = connect(u, v, K=2).potential(1)
    d = lambda x, y: d_p(x, y, 2.0).value  # noqa: E731
    lhs = d(mid, w) ** 2
    rhs = 0.5 * d(u, w) ** 2 + 0.5 * d(v, w) ** 2 - 0.25 * d(u, v) ** 2
    return Cat0Result(lhs, rhs, rel_tol * max(rhs, 1.0))
