"""Weak geodesics of invariant potentials via dual linear interpolation.

For invariant data the geodesic joining ``u0`` and ``u1`` is obtained by
interpolating the periodic parts of the conjugates linearly,
``psi_t = (1 - t) psi_0 + t psi_1``, and conjugating back.  The same
formula for ``t < 0`` is a backward extension exactly as long as
``p^2/2 + psi_t`` stays convex.

:func:`envelope_oracle` recomputes slices directly as a supremum of affine
minorants of the boundary data, by brute force, and shares no code with the
dual route.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .legendre import DualPotential, biconjugate, conjugate_pl, dual_potential, primal_from_dual
from .potential import (CircleGrid, Potential1D, bump, centered_difference, is_kahler,
                        require_kahler, second_difference, spectral_derivatives)

__all__ = [
    "GeodesicPath",
    "SubgeodesicCertificate",
    "ExtensionCandidate",
    "ExtensionError",
    "connect",
    "envelope_oracle",
    "initial_tangent",
    "check_subgeodesic",
    "bump_family",
    "subgeodesic_delta",
    "max_extension",
    "extension_candidate",
    "verify_extension_obstruction",
    "extension_lower_bound",
    "mirror_concat",
    "write_geodesic_csv",
]

EPS_H = 1e-6
TOL_CONV = 1e-8
DEFAULT_K = 64
EXT_CAP = 1e3
EXT_RTOL = 1e-4


class ExtensionError(ValueError):
    """The requested backward extension of a geodesic does not exist."""


class _DualPair:
    """Both endpoint duals sampled with two derivatives on one momentum grid."""

    def __init__(self, dual0: DualPotential, dual1: DualPotential, count: int):
        self.q = np.arange(count) / count
        self.a = np.stack([dual0(self.q, nu) for nu in range(3)])
        self.b = np.stack([dual1(self.q, nu) for nu in range(3)])

    def combine(self, t: float) -> np.ndarray:
        return (1.0 - t) * self.a + t * self.b

    def convex(self, t: float) -> bool:
        return bool(np.all(1.0 + self.combine(t)[2] > 0))


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Time-sampled geodesic, parametrized so that ``t=0, 1`` are the anchors.

    ``times`` may extend below 0 for concatenated paths; ``slices[k]`` is the
    potential at ``times[k]``.
    """

    u0: Potential1D
    u1: Potential1D
    dual0: DualPotential
    dual1: DualPotential
    times: np.ndarray
    slices: np.ndarray
    tangent: np.ndarray
    _pair: _DualPair = field(repr=False)

    @property
    def grid(self) -> CircleGrid:
        return self.u0.grid

    def __len__(self):
        return self.times.size

    def potential(self, k: int) -> Potential1D:
        return Potential1D(self.grid, self.slices[k])

    def at(self, t: float) -> Potential1D:
        """Slice at an arbitrary time on the dual line."""
        return _slice(self._pair, self.grid, t)

    def dual_at(self, t: float) -> np.ndarray:
        """``psi_t`` on the uniform momentum grid."""
        return self._pair.combine(t)[0]


def _slice(pair: _DualPair, grid: CircleGrid, t: float) -> Potential1D:
    psi, dpsi, d2psi = pair.combine(t)
    return primal_from_dual(grid, psi, dpsi, d2psi, pair.q)


def _path(u0, u1, dual0, dual1, times) -> GeodesicPath:
    pair = _DualPair(dual0, dual1, 2 * u0.n)
    slices = np.stack([_slice(pair, u0.grid, t).values for t in times])
    v0 = _closed_form_tangent(u0, dual0, dual1)
    return GeodesicPath(u0, u1, dual0, dual1, np.asarray(times, dtype=float),
                        slices, v0, pair)


def _closed_form_tangent(u0: Potential1D, dual0: DualPotential,
                         dual1: DualPotential) -> np.ndarray:
    # envelope theorem: d/dt phi_t(x) = (phi_0* - phi_1*)(x + u0'(x));
    # both duals go through the same interpolant so equal endpoints give exactly 0
    du, _ = spectral_derivatives(u0.values)
    p = u0.grid.nodes + du
    return dual0(p) - dual1(p)


def connect(u0: Potential1D, u1: Potential1D, K: int = DEFAULT_K) -> GeodesicPath:
    """Geodesic between two Kähler potentials on ``K + 1`` uniform times."""
    if K < 2:
        raise ValueError("need at least K = 2 time steps")
    if u0.grid != u1.grid:
        raise ValueError("endpoints live on different grids")
    require_kahler(u0, "geodesic start")
    require_kahler(u1, "geodesic end")
    return _path(u0, u1, dual_potential(u0), dual_potential(u1), np.linspace(0.0, 1.0, K + 1))


def initial_tangent(path: GeodesicPath) -> np.ndarray:
    """Right derivative at ``t = 0`` of the geodesic, on the grid."""
    return path.tangent.copy()


def envelope_oracle(u0: Potential1D, u1: Potential1D, t: float,
                    slope_refine: int = 2, chunk: int = 256) -> Potential1D:
    """Geodesic slice as the sup of affine minorants ``a + alpha t + p x``.

    For a fixed slope ``p`` the best affine function below the lifted data
    at both ends has value ``p x - (1-t) phi0*(p) - t phi1*(p)``, where each
    ``phi_i*(p)`` is found by scanning every lift node.  The outer sup runs
    over a slope grid of spacing ``h/slope_refine`` offset by half a step
    from the lattice ``k h``.  Both scans are quadratic in ``n`` on purpose.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("oracle time must lie in (0, 1)")
    require_kahler(u0, "oracle start")
    require_kahler(u1, "oracle end")
    grid = u0.grid
    n, h = grid.n, grid.h
    bound = max(np.abs(centered_difference(u.values, h)).max() for u in (u0, u1)) + 0.05
    dp = h / slope_refine
    p = np.arange(math.floor((-bound - 0.05) / dp), math.ceil((1 + bound + 0.05) / dp)) * dp + dp / 2
    k = np.arange(math.floor((-2 * bound - 0.1) * n), math.ceil((1 + 2 * bound + 0.1) * n) + 1)
    xw = k / n

    def scan_conjugate(u):
        phi = 0.5 * xw * xw + u.values[k % n]
        out = np.empty_like(p)
        for s in range(0, p.size, chunk):
            block = np.outer(p[s:s + chunk], xw) - phi
            j = block.argmax(axis=1)
            if np.any((j == 0) | (j == xw.size - 1)):
                raise RuntimeError("oracle window too small for slope range")
            out[s:s + chunk] = block[np.arange(j.size), j]
        return out

    dual = (1.0 - t) * scan_conjugate(u0) + t * scan_conjugate(u1)
    x = grid.nodes
    W = np.empty(n)
    for s in range(0, n, chunk):
        block = np.outer(x[s:s + chunk], p) - dual
        j = block.argmax(axis=1)
        if np.any((j == 0) | (j == p.size - 1)):
            raise RuntimeError("oracle slope grid too small")
        W[s:s + chunk] = block[np.arange(j.size), j]
    return Potential1D(grid, W - 0.5 * x * x)


@dataclass(frozen=True, eq=False)
class SubgeodesicCertificate:
    """Joint convexity of ``W(t, x) = u_t(x) + x^2/2`` on the interior nodes.

    ``slack`` is the Hessian determinant ``W_tt W_xx - W_tx^2``, which for
    invariant data equals ``u_tt (1 + u'') - (u_t')^2``.
    """

    slack: np.ndarray
    min_slack: float
    min_wtt: float
    min_wxx: float
    eps: float

    @property
    def passed(self) -> bool:
        return min(self.min_slack, self.min_wtt, self.min_wxx) >= -self.eps

    def __bool__(self):
        return self.passed


def _fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0."""
    m = offsets.size
    V = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _time_derivatives(U: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order first and second time derivatives on rows ``1..K-1``.

    Centered five-point stencils in the interior and six-point one-sided
    stencils next to the ends, so no data outside the time interval is used.
    """
    K = U.shape[0] - 1
    if K < 5:
        # too few samples for the wide stencils
        return (U[2:] - U[:-2]) / (2 * dt), (U[2:] - 2 * U[1:-1] + U[:-2]) / dt**2
    d1 = np.empty((K - 1, U.shape[1]))
    d2 = np.empty_like(d1)
    for k in range(1, K):
        if k < 2:
            idx = np.arange(0, 6)
        elif k > K - 2:
            idx = np.arange(K - 5, K + 1)
        else:
            idx = np.arange(k - 2, k + 3)
        off = (idx - k).astype(float)
        d1[k - 1] = _fd_weights(off, 1) @ U[idx] / dt
        d2[k - 1] = _fd_weights(off, 2) @ U[idx] / dt**2
    return d1, d2


def check_subgeodesic(slices, times: Sequence[float],
                      eps: float = EPS_H) -> SubgeodesicCertificate:
    """Certify a sampled path as a subgeodesic by discrete Hessian minors."""
    U = np.asarray([s.values if isinstance(s, Potential1D) else s for s in slices], dtype=float)
    times = np.asarray(times, dtype=float)
    if U.ndim != 2 or U.shape[0] != times.size or times.size < 3:
        raise ValueError("need at least three time slices matching the times")
    dt = np.diff(times)
    if np.ptp(dt) > 1e-9 * dt.mean():
        raise ValueError("time samples must be uniform")
    dt = dt.mean()
    h = 1.0 / U.shape[1]
    if not np.all(np.isfinite(U)):
        return SubgeodesicCertificate(np.full((1, 1), -np.inf), -np.inf, -np.inf, -np.inf, eps)
    wt, wtt = _time_derivatives(U, dt)
    wxx = 1.0 + np.stack([second_difference(row, h) for row in U[1:-1]])
    wtx = np.stack([centered_difference(row, h) for row in wt])
    slack = wtt * wxx - wtx**2
    return SubgeodesicCertificate(slack, float(slack.min()), float(wtt.min()),
                                  float(wxx.min()), eps)


def bump_family(u: Potential1D, x0: float, delta: float, K: int = DEFAULT_K):
    """``u + delta (t + t^2/2) rho_{x0}`` on ``K + 1`` uniform times."""
    rho = bump(u.grid, x0).values
    times = np.linspace(0.0, 1.0, K + 1)
    slices = np.stack([u.values + delta * (t + 0.5 * t * t) * rho for t in times])
    return times, slices


def subgeodesic_delta(u: Potential1D, x0: float, K: int = DEFAULT_K,
                      eps: float = EPS_H, floor: float = 1e-8) -> float:
    """Largest ``delta = 2**-j <= 1`` for which the bump family is a subgeodesic.

    Every slice must also stay Kähler.  Failure below ``floor`` signals a bug
    for Kähler input and raises ``RuntimeError``.
    """
    require_kahler(u, "subgeodesic base")
    delta = 1.0
    while delta >= floor:
        times, slices = bump_family(u, x0, delta, K)
        if (all(is_kahler(Potential1D(u.grid, s)) for s in slices)
                and check_subgeodesic(slices, times, eps).passed):
            return delta
        delta /= 2
    raise RuntimeError(f"no subgeodesic delta >= {floor:g} found at x0={x0}")


def _extension_ok(pair: _DualPair, eps: float) -> bool:
    chi = (1.0 + eps) * pair.a[0] - eps * pair.b[0]
    h = pair.q[1] - pair.q[0]
    return bool(np.all(1.0 + second_difference(chi, h) >= 0.0))


def max_extension(u0: Potential1D, u1: Potential1D, rtol: float = EXT_RTOL,
                  cap: float = EXT_CAP) -> float:
    """Largest ``eps`` such that the geodesic extends to ``[-eps, 1]``.

    The backward dual ``(1+eps) phi0* - eps phi1*`` must keep non-negative
    second differences on the momentum grid.  Bisection on ``[0, cap]`` to
    relative tolerance ``rtol``; returns ``inf`` when ``cap`` still passes.
    """
    require_kahler(u0, "extension start")
    require_kahler(u1, "extension end")
    pair = _DualPair(dual_potential(u0), dual_potential(u1), 2 * u0.n)
    if _extension_ok(pair, cap):
        return math.inf
    lo, hi = 0.0, cap
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _extension_ok(pair, mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True, eq=False)
class ExtensionCandidate:
    """Backward slice ``u_{-eps}`` built from the dual line.

    When the dual combination is not convex it is replaced by its convex
    envelope; ``dual_gap`` is then the sup distance between the two and the
    slice cannot continue the geodesic.
    """

    eps: float
    potential: Potential1D
    dual_gap: float
    tol: float

    @property
    def is_extension(self) -> bool:
        return self.dual_gap <= self.tol


def extension_candidate(u0: Potential1D, u1: Potential1D, eps: float) -> ExtensionCandidate:
    require_kahler(u0, "extension start")
    require_kahler(u1, "extension end")
    grid = u0.grid
    pair = _DualPair(dual_potential(u0), dual_potential(u1), 2 * grid.n)
    chi, dchi, d2chi = pair.combine(-eps)
    tol = grid.h**2
    q = pair.q
    # convex envelope of the lifted dual over three periods, middle period kept
    qq = np.concatenate([q - 1, q, q + 1, [2.0]])
    cc = np.concatenate([chi, chi, chi, chi[:1]])
    lifted = 0.5 * qq * qq + cc
    env = biconjugate(qq, lifted)
    mid = slice(q.size, 2 * q.size)
    gap = float(np.max(lifted[mid] - env[mid]))
    if gap <= tol and np.all(1.0 + d2chi > 0):
        u = primal_from_dual(grid, chi, dchi, d2chi, q)
    else:
        x = grid.nodes
        u = Potential1D(grid, conjugate_pl(qq, env, x) - 0.5 * x * x)
    return ExtensionCandidate(eps, u, gap, tol)


def _is_zero(u: Potential1D) -> bool:
    return bool(np.abs(u.values).max() <= 1e-12)


def verify_extension_obstruction(u0: Potential1D, u1: Potential1D,
                                 candidate: Potential1D, C: float = 1.0) -> bool:
    """Check the sign constraint any backward extension from ``u0 = 0`` obeys.

    With ``u0 = 0`` and ``u1 <= 0``, convexity in ``t`` forces the slice at
    ``t = -eps`` to be non-negative; this returns whether ``candidate``
    satisfies that up to ``C*h``.
    """
    if not _is_zero(u0):
        raise ValueError("obstruction check needs u0 = 0")
    if u1.values.max() > 1e-12:
        raise ValueError("obstruction check needs u1 <= 0")
    return bool(candidate.values.min() >= -C * u0.grid.h)


def extension_lower_bound(u1: Potential1D, candidate: Potential1D, eps: float) -> tuple[float, float]:
    """``(sup u_{-eps}, eps/(1+eps) * sup(-u1))``; the first dominates the second.

    From ``u_t >= u_{-eps} - ((t+eps)/eps) sup u_{-eps}`` at ``t = 1``.  A
    steeper ``u1`` forces the backward slice up, which is what an unbounded
    endpoint cannot accommodate.
    """
    return float(candidate.values.max()), float(eps / (1 + eps) * (-u1.values).max())


def mirror_concat(u0: Potential1D, u1: Potential1D, K: int = DEFAULT_K) -> GeodesicPath:
    """Geodesic on ``[-1, 1]`` whose left half mirrors the right one at ``u0``.

    The left endpoint has dual ``2 phi0* - phi1*``, which must be convex, i.e.
    the segment must extend backward by at least its own length.
    """
    eps = max_extension(u0, u1)
    if eps < 1.0:
        raise ExtensionError(
            f"geodesic extends backward only to eps*={eps:.4g} < 1; "
            "its mirror image is not a geodesic continuation")
    return _path(u0, u1, dual_potential(u0), dual_potential(u1),
                 np.linspace(-1.0, 1.0, 2 * K + 1))


def write_geodesic_csv(path: GeodesicPath, target: Union[str, Path]) -> None:
    x = path.grid.nodes
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        for t, row in zip(path.times, path.slices):
            for xj, uj in zip(x, row):
                w.writerow([repr(float(t)), repr(float(xj)), repr(float(uj))])
