"""Invariant Kähler potentials on the flat torus.

Potentials depend on the real coordinate ``x`` only and are sampled on a
uniform periodic grid of ``[0, 1)``.  The reference form is ``dx ^ dy`` with
unit volume, so the Monge-Ampère measure of ``u`` has density ``1 + u''``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "CircleGrid",
    "Potential1D",
    "BumpProfile",
    "NotKahlerError",
    "ma_density",
    "is_kahler",
    "ma_energy",
    "bump",
    "smooth_max",
    "spectral_derivatives",
    "random_kahler",
    "harmonic",
    "read_potential_csv",
    "write_potential_csv",
]

TOL_POS = 1e-10
BUMP_INNER = 0.25
BUMP_OUTER = 0.375


class NotKahlerError(ValueError):
    """Raised when an operation requires a strictly positive density."""


@dataclass(frozen=True)
class CircleGrid:
    """Uniform periodic grid ``x_j = j/n`` on the unit circle."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"grid needs an integer n >= 16, got {self.n!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def distance(self, x0: float) -> np.ndarray:
        """Periodic distance from every node to ``x0``."""
        d = np.abs(self.nodes - (x0 % 1.0))
        return np.minimum(d, 1.0 - d)


@dataclass(frozen=True, eq=False)
class Potential1D:
    """Samples of an invariant potential on a :class:`CircleGrid`."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: CircleGrid, fn) -> "Potential1D":
        return cls(grid, fn(grid.nodes))

    @classmethod
    def zero(cls, grid: CircleGrid) -> "Potential1D":
        return cls(grid, np.zeros(grid.n))

    @property
    def n(self) -> int:
        return self.grid.n

    def with_values(self, values) -> "Potential1D":
        return Potential1D(self.grid, values)

    def _other(self, other):
        if isinstance(other, Potential1D):
            if other.grid != self.grid:
                raise ValueError("potentials live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, c):
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        return (f"Potential1D(n={self.n}, min={self.values.min():.4g}, "
                f"max={self.values.max():.4g})")


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """Radial bump ``rho`` vanishing to infinite order at ``center``."""

    grid: CircleGrid
    center: float
    values: np.ndarray
    floor: float
    inner_radius: float = field(default=BUMP_INNER)

    def as_potential(self) -> Potential1D:
        return Potential1D(self.grid, self.values)


def second_difference(values: np.ndarray, h: float) -> np.ndarray:
    """Compact periodic second difference, written as a difference of differences.

    The telescoping form keeps ``sum(D2 u)`` at round-off relative to the
    size of the differences rather than the size of ``u``.
    """
    d = np.roll(values, -1) - values
    return (d - np.roll(d, 1)) / h**2


def forward_difference(values: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(values, -1) - values) / h


def centered_difference(values: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(values, -1) - np.roll(values, 1)) / (2 * h)


def ma_density(u: Potential1D) -> np.ndarray:
    """Monge-Ampère density ``1 + D2 u`` at the grid nodes."""
    return 1.0 + second_difference(u.values, u.grid.h)


def is_kahler(u: Potential1D, tol_pos: float = TOL_POS) -> bool:
    return bool(ma_density(u).min() > tol_pos)


def require_kahler(u: Potential1D, what: str = "potential") -> None:
    if not is_kahler(u):
        raise NotKahlerError(
            f"{what} is not Kähler: min density {ma_density(u).min():.3e}")


def ma_energy(u: Potential1D) -> float:
    """Monge-Ampère energy ``int u - 1/2 int (u')^2``.

    The gradient term uses forward differences, so that the discrete
    derivative of the energy in direction ``xi`` is exactly
    ``sum(xi * ma_density(u)) * h``.
    """
    h = u.grid.h
    du = forward_difference(u.values, h)
    return float(h * np.sum(u.values) - 0.5 * h * np.sum(du * du))


def spectral_derivatives(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of the trigonometric interpolant."""
    n = values.size
    coef = np.fft.rfft(values)
    k = 2j * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    d1 = k * coef
    if n % 2 == 0:
        d1[-1] = 0.0
    d2 = k * k * coef
    return np.fft.irfft(d1, n), np.fft.irfft(d2, n)


def _smootherstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def bump(grid: CircleGrid, x0: float) -> BumpProfile:
    """Bump ``exp(-1/d^2)`` around ``x0``, blended to a constant plateau.

    Inside periodic distance 1/4 the profile is literally ``exp(-1/d^2)``.
    A C^2 smootherstep on ``[1/4, 3/8]`` blends to the constant
    ``exp(-1/(3/8)^2)``, the largest value of the inner formula on the blend
    interval, so the profile is radially non-decreasing and its maximum is
    the plateau.  ``x0`` is snapped to the nearest node.
    """
    x0 = (round(x0 * grid.n) % grid.n) / grid.n
    d = grid.distance(x0)
    with np.errstate(divide="ignore", over="ignore"):
        inner = np.where(d > 0, np.exp(-1.0 / np.where(d > 0, d, 1.0) ** 2), 0.0)
    plateau = np.exp(-1.0 / BUMP_OUTER**2)
    s = _smootherstep((d - BUMP_INNER) / (BUMP_OUTER - BUMP_INNER))
    rho = (1.0 - s) * np.minimum(inner, plateau) + s * plateau
    rho[d < BUMP_INNER] = inner[d < BUMP_INNER]
    floor = float(np.exp(-1.0 / BUMP_INNER**2))
    return BumpProfile(grid, x0, rho, floor)


def smooth_max(u: Potential1D, v: Potential1D, eta: float) -> Potential1D:
    """Log-sum-exp surrogate for a regularized maximum.

    Returns ``w`` with ``max(u, v) <= w <= max(u, v) + eta*log 2``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    a, b = u.values, u._other(v)
    m = np.maximum(a, b)
    w = m + eta * np.log(np.exp((a - m) / eta) + np.exp((b - m) / eta))
    return u.with_values(w)


def harmonic(grid: CircleGrid, amplitude: float, k: int = 1,
             phase: float = 0.0) -> Potential1D:
    """``amplitude * cos(2 pi k x + phase)``."""
    return Potential1D(grid, amplitude * np.cos(2 * np.pi * k * grid.nodes + phase))


def random_kahler(grid: CircleGrid, rng: np.random.Generator, modes: int = 4,
                  curvature: Union[float, tuple[float, float]] = (0.2, 0.6),
                  offset: float = 0.0) -> Potential1D:
    """Random band-limited Kähler potential.

    The potential is a random trigonometric polynomial with ``1/k^2`` decay,
    rescaled so that ``max |u''|`` equals ``curvature`` (or a uniform draw
    from that interval); the density then stays above ``1 - curvature``.
    """
    x = grid.nodes
    k = np.arange(1, modes + 1)
    a = rng.normal(size=modes) / k**2
    b = rng.normal(size=modes) / k**2
    arg = 2 * np.pi * np.outer(k, x)
    u = a @ np.cos(arg) + b @ np.sin(arg)
    upp = -((2 * np.pi * k) ** 2 * a) @ np.cos(arg) - ((2 * np.pi * k) ** 2 * b) @ np.sin(arg)
    if isinstance(curvature, tuple):
        curvature = rng.uniform(*curvature)
    u = u * (curvature / np.abs(upp).max())
    shift = rng.uniform(-offset, offset) if offset else 0.0
    return Potential1D(grid, u + shift)


def write_potential_csv(u: Potential1D, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, val in zip(u.grid.nodes, u.values):
            w.writerow([repr(float(x)), repr(float(val))])


def read_potential_csv(path: Union[str, Path], rtol: float = 1e-9) -> Potential1D:
    """Read a ``x,u`` CSV file, validating a uniform grid on ``[0, 1)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "u"]:
        raise ValueError(f"{path}: expected header 'x,u'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed row ({exc})") from None
    if data.ndim != 2 or data.shape[0] < 16:
        raise ValueError(f"{path}: need at least 16 data rows")
    x, u = data[:, 0], data[:, 1]
    n = x.size
    spacing = np.diff(x)
    if (abs(x[0]) > rtol / n or x[-1] >= 1.0
            or np.any(np.abs(spacing * n - 1.0) > rtol)):
        raise ValueError(f"{path}: nodes are not the uniform grid j/{n}")
    return Potential1D(CircleGrid(n), u)
