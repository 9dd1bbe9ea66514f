"""Equivariant Legendre-Fenchel transforms of convex lifts.

A Kähler potential ``u`` on the circle lifts to the convex function
``phi(x) = x^2/2 + u(x)`` on the line, equivariant under
``phi(x + 1) = phi(x) + x + 1/2``.  Its conjugate has the same shape,
``phi*(p) = p^2/2 + psi(p)`` with ``psi`` periodic.

Two routes to the conjugate live here:

* :func:`transform` is the exact conjugate of the piecewise-linear
  interpolant of the sampled lift (monotone-slope merge).
* :class:`DualPotential` carries ``psi`` as a C^2 quintic Hermite
  interpolant built from spectral derivatives of ``u``.  Its values at
  arbitrary momenta are accurate far beyond the grid spacing, which is what
  keeps second differences of geodesic slices free of quantization noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .potential import (CircleGrid, Potential1D, require_kahler,
                        spectral_derivatives)

__all__ = [
    "ConvexLift",
    "LegendreProfile",
    "RangeError",
    "lift",
    "transform",
    "conjugate_pl",
    "lower_hull",
    "biconjugate",
    "PeriodicHermite",
    "DualPotential",
    "dual_potential",
    "primal_from_dual",
]

DEFAULT_WINDOW = 3.0
DEFAULT_MOMENTA = (-1.0, 2.0)


class RangeError(ValueError):
    """Requested momenta are not attained as slopes on the lift window."""


@dataclass(frozen=True, eq=False)
class ConvexLift:
    base: Potential1D
    half_width: float
    x: np.ndarray
    values: np.ndarray

    @property
    def h(self) -> float:
        return self.base.grid.h

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.x)

    def equivariance_defect(self) -> float:
        n = self.base.n
        lhs = self.values[n:] - self.values[:-n]
        return float(np.abs(lhs - self.x[:-n] - 0.5).max())


@dataclass(frozen=True, eq=False)
class LegendreProfile:
    """Conjugate ``phi*`` sampled on a momentum grid.

    When built by :func:`transform` the profile also keeps the breakpoints of
    the exact piecewise-linear conjugate, so :meth:`evaluate` is exact at any
    momentum inside the slope range, not only at the grid.
    """

    p: np.ndarray
    values: np.ndarray
    provenance: str
    knots_x: Optional[np.ndarray] = None
    knots_f: Optional[np.ndarray] = None

    def evaluate(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.knots_x is None:
            return np.interp(p, self.p, self.values)
        return conjugate_pl(self.knots_x, self.knots_f, p)

    def convexity_defect(self) -> float:
        """Most negative second difference (0 when convex)."""
        d2 = self.values[2:] - 2 * self.values[1:-1] + self.values[:-2]
        return float(min(d2.min(), 0.0))

    def equivariance_defect(self) -> float:
        """Max of ``|phi*(p+1) - phi*(p) - p - 1/2|`` over grid pairs."""
        dp = self.p[1] - self.p[0]
        shift = int(round(1.0 / dp))
        if abs(shift * dp - 1.0) > 1e-9 or shift >= self.p.size:
            raise ValueError("momentum grid does not contain unit shifts")
        p = self.p[:-shift]
        gap = self.values[shift:] - self.values[:-shift] - p - 0.5
        return float(np.abs(gap).max())


def lift(u: Potential1D, half_width: float = DEFAULT_WINDOW) -> ConvexLift:
    """Unroll ``u`` periodically and add ``x^2/2`` on ``[-W, W]``."""
    if half_width < 2:
        raise ValueError("lift window half-width must be >= 2")
    require_kahler(u, "lift base")
    n = u.n
    m = int(round(half_width * n))
    k = np.arange(-m, m + 1)
    x = k / n
    vals = 0.5 * x * x + u.values[k % n]
    return ConvexLift(u, half_width, x, vals)


def conjugate_pl(x: np.ndarray, f: np.ndarray, p) -> np.ndarray:
    """Exact conjugate of the PL interpolant of convex samples ``(x, f)``.

    Each momentum is matched to the node where the segment slopes cross it
    (smallest maximizing node on ties), which is a single merge of the sorted
    queries against the sorted slopes.  Momenta outside the slope range raise
    :class:`RangeError`, since the sup would sit on the window boundary.
    """
    p = np.asarray(p, dtype=float)
    s = np.diff(f) / np.diff(x)
    if np.any(np.diff(s) < -1e-9 * (1 + np.abs(s[1:]))):
        raise ValueError("conjugate_pl needs convex samples; use biconjugate first")
    if p.size and (p.min() < s[0] or p.max() > s[-1]):
        raise RangeError(
            f"momenta [{p.min():.4g}, {p.max():.4g}] exceed slope range "
            f"[{s[0]:.4g}, {s[-1]:.4g}] of the window")
    idx = np.searchsorted(s, p, side="left")
    return p * x[idx] - f[idx]


def transform(phi: ConvexLift, momenta: tuple[float, float] = DEFAULT_MOMENTA,
              spacing: Optional[float] = None) -> LegendreProfile:
    """Conjugate of a convex lift on a uniform momentum grid."""
    dp = phi.h if spacing is None else spacing
    lo, hi = momenta
    count = int(round((hi - lo) / dp))
    p = lo + dp * np.arange(count + 1)
    vals = conjugate_pl(phi.x, phi.values, p)
    return LegendreProfile(p, vals, f"pl-conjugate(n={phi.base.n}, W={phi.half_width:g})",
                           knots_x=phi.x, knots_f=phi.values)


def lower_hull(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points with increasing ``x``."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord a -> i
            cross = (x[b] - x[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def biconjugate(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Convex envelope of samples, evaluated back at the same nodes.

    This is the double conjugate of the PL interpolant, i.e. the lower convex
    hull of the points interpolated linearly.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    idx = lower_hull(x, f)
    return np.interp(x, x[idx], f[idx])


# Quintic Hermite basis on [0, 1]: rows are (f0, f0', f0'', f1, f1', f1''),
# columns are monomial coefficients s^0..s^5.
def _hermite_matrix() -> np.ndarray:
    rows = []
    for s in (0.0, 1.0):
        pw = np.array([s**k for k in range(6)])
        d1 = np.array([k * s ** (k - 1) if k >= 1 else 0.0 for k in range(6)])
        d2 = np.array([k * (k - 1) * s ** (k - 2) if k >= 2 else 0.0 for k in range(6)])
        rows += [pw, d1, d2]
    return np.linalg.inv(np.array(rows)).T


_HERMITE = _hermite_matrix()


class PeriodicHermite:
    """C^2 quintic Hermite interpolant of periodic data.

    ``nodes`` must be strictly increasing and span less than one period; the
    data repeat with the given period.
    """

    def __init__(self, nodes, values, d1, d2, period: float = 1.0):
        nodes = np.asarray(nodes, dtype=float)
        if np.any(np.diff(nodes) <= 0) or nodes[-1] - nodes[0] >= period:
            raise ValueError("Hermite nodes must increase within one period")
        self.period = period
        self.start = nodes[0]
        self.nodes = np.append(nodes, nodes[0] + period)
        self.f = np.append(values, values[0])
        self.d1 = np.append(d1, d1[0])
        self.d2 = np.append(d2, d2[0])

    def __call__(self, q, nu: int = 0) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        r = self.start + np.mod(q - self.start, self.period)
        i = np.clip(np.searchsorted(self.nodes, r, side="right") - 1, 0, self.nodes.size - 2)
        a = self.nodes[i]
        H = self.nodes[i + 1] - a
        s = (r - a) / H
        data = np.stack([self.f[i], H * self.d1[i], H * H * self.d2[i],
                         self.f[i + 1], H * self.d1[i + 1], H * H * self.d2[i + 1]])
        coef = _HERMITE.T @ data  # monomial coefficients per query
        k = np.arange(6)
        if nu == 0:
            out = np.zeros_like(s)
            for c in coef[::-1]:
                out = out * s + c
            return out
        # derivative in s, then chain rule 1/H per order
        dcoef = coef.copy()
        for _ in range(nu):
            dcoef = (dcoef[1:].T * k[1:dcoef.shape[0]]).T
        out = np.zeros_like(s)
        for c in dcoef[::-1]:
            out = out * s + c
        return out / H**nu


class DualPotential:
    """Periodic part ``psi`` of the conjugate ``phi* = p^2/2 + psi``.

    Built from the gradient map ``P(x) = x + u'(x)``: at ``p = P(x)`` the
    conjugate satisfies ``psi = -u - u'^2/2``, ``psi' = -u'`` and
    ``psi'' = 1/(1 + u'') - 1``, which give exact Hermite data at the images
    of the grid nodes.
    """

    def __init__(self, grid: CircleGrid, momenta, psi, dpsi, d2psi, source: str = ""):
        self.grid = grid
        self.momenta = np.asarray(momenta)
        self.source = source
        self._interp = PeriodicHermite(momenta, psi, dpsi, d2psi)

    def __call__(self, p, nu: int = 0) -> np.ndarray:
        return self._interp(p, nu)

    def conjugate(self, p) -> np.ndarray:
        """``phi*(p)`` including the quadratic part."""
        p = np.asarray(p, dtype=float)
        return 0.5 * p * p + self(p)

    def sample(self, count: int) -> np.ndarray:
        """``psi`` on the uniform momentum grid ``k/count``."""
        return self(np.arange(count) / count)

    def profile(self, momenta: tuple[float, float] = DEFAULT_MOMENTA,
                spacing: Optional[float] = None) -> LegendreProfile:
        dp = self.grid.h if spacing is None else spacing
        count = int(round((momenta[1] - momenta[0]) / dp))
        p = momenta[0] + dp * np.arange(count + 1)
        return LegendreProfile(p, self.conjugate(p), f"hermite-dual({self.source})")


def dual_potential(u: Potential1D) -> DualPotential:
    """Smooth equivariant conjugate of the lift of a Kähler potential."""
    require_kahler(u, "dual_potential input")
    du, d2u = spectral_derivatives(u.values)
    if np.any(1.0 + d2u <= 0):
        raise ValueError("spectral density is not positive; refine the grid")
    x = u.grid.nodes
    p = x + du
    psi = -u.values - 0.5 * du * du
    return DualPotential(u.grid, p, psi, -du, 1.0 / (1.0 + d2u) - 1.0,
                         source=f"n={u.n}")


def primal_from_dual(grid: CircleGrid, psi, dpsi, d2psi, momenta) -> Potential1D:
    """Conjugate back: potential whose lift is the conjugate of ``p^2/2 + psi``.

    ``psi`` and its derivatives are given on the increasing momenta covering
    one period.  The gradient map ``X(p) = p + psi'(p)`` carries them to
    Hermite data for ``u`` which is then resampled at the grid nodes.
    """
    dens = 1.0 + np.asarray(d2psi)
    if np.any(dens <= 0):
        raise ValueError("dual function is not strictly convex")
    X = np.asarray(momenta) + dpsi
    vals = -np.asarray(psi) - 0.5 * np.asarray(dpsi) ** 2
    interp = PeriodicHermite(X, vals, -np.asarray(dpsi), 1.0 / dens - 1.0)
    return Potential1D(grid, interp(grid.nodes))
