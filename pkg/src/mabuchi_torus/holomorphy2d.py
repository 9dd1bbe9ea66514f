"""Holomorphy of torus maps from commutation with ``i ddbar``.

On the square torus ``C/Z[i]`` with coordinates ``z = x + i y`` the form
``i ddbar u`` is ``(Delta u / 2) dx ^ dy``.  A map ``g`` is holomorphic when
``i ddbar (u o g) = g^*(i ddbar u)`` for every ``u`` and anti-holomorphic
when the two differ by a sign.  The pullback of a 2-form picks up
``det(Dg)``, so conjugation, which preserves the Laplacian but reverses
orientation, lands on the minus side.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Potential2D",
    "TorusMap2D",
    "DdbarField",
    "ddbar",
    "harmonic_probes",
    "HolomorphyResult",
    "holomorphy_check",
    "NAMED_MAPS",
]

HOLO_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class Potential2D:
    """Samples ``values[i, j] = u(i/m, j/m)`` on the periodic square grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("Potential2D needs a square array")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_function(cls, m: int, fn: Callable) -> "Potential2D":
        x = np.arange(m) / m
        X, Y = np.meshgrid(x, x, indexing="ij")
        return cls(fn(X, Y))


@dataclass(frozen=True, eq=False)
class TorusMap2D:
    """Affine torus map ``g(p) = A p + shift`` with ``A`` integral, ``det A = +-1``."""

    A: np.ndarray
    shift: tuple[float, float] = (0.0, 0.0)
    name: str = "affine"

    def __post_init__(self):
        A = np.asarray(self.A)
        if A.shape != (2, 2) or not np.all(A == np.round(A)):
            raise ValueError("A must be an integer 2x2 matrix")
        A = A.astype(int)
        if abs(round(np.linalg.det(A))) != 1:
            raise ValueError("A must have determinant +-1 to descend to the torus")
        object.__setattr__(self, "A", A)

    @property
    def det(self) -> int:
        return int(round(np.linalg.det(self.A)))

    def __call__(self, x, y):
        (a, b), (c, d) = self.A
        return a * x + b * y + self.shift[0], c * x + d * y + self.shift[1]

    def __matmul__(self, inner: "TorusMap2D") -> "TorusMap2D":
        A = self.A @ inner.A
        s = self.A @ np.asarray(inner.shift) + np.asarray(self.shift)
        return TorusMap2D(A, (float(s[0]), float(s[1])), f"{self.name}*{inner.name}")

    @classmethod
    def translation(cls, a1: float, a2: float) -> "TorusMap2D":
        return cls(np.eye(2, dtype=int), (a1, a2), "translation")

    @classmethod
    def rotation(cls) -> "TorusMap2D":
        """``z -> -z``."""
        return cls(-np.eye(2, dtype=int), name="rotation")

    @classmethod
    def quarter_turn(cls) -> "TorusMap2D":
        """``z -> i z``."""
        return cls(np.array([[0, -1], [1, 0]]), name="quarter_turn")

    @classmethod
    def conjugation(cls) -> "TorusMap2D":
        """``z -> conj(z)``."""
        return cls(np.array([[1, 0], [0, -1]]), name="conjugation")

    @classmethod
    def shear(cls) -> "TorusMap2D":
        return cls(np.array([[1, 1], [0, 1]]), name="shear")


NAMED_MAPS = {
    "translation": lambda: TorusMap2D.translation(0.25, 0.125),
    "rotation": TorusMap2D.rotation,
    "quarter_turn": TorusMap2D.quarter_turn,
    "conjugation": TorusMap2D.conjugation,
    "shear": TorusMap2D.shear,
}


@dataclass(frozen=True)
class DdbarField:
    """``Delta u / 2`` and the Wirtinger second derivatives ``u_zz``, ``u_zbzb``."""

    laplacian_half: np.ndarray
    dzz: np.ndarray
    dzbzb: np.ndarray


def ddbar(u: Potential2D) -> DdbarField:
    """Second-order centered differences of a periodic 2D potential."""
    v = u.values
    h = 1.0 / u.m
    uxx = (np.roll(v, -1, 0) - 2 * v + np.roll(v, 1, 0)) / h**2
    uyy = (np.roll(v, -1, 1) - 2 * v + np.roll(v, 1, 1)) / h**2
    uxy = (np.roll(np.roll(v, -1, 0), -1, 1) - np.roll(np.roll(v, -1, 0), 1, 1)
           - np.roll(np.roll(v, 1, 0), -1, 1) + np.roll(np.roll(v, 1, 0), 1, 1)) / (4 * h**2)
    dzz = 0.25 * (uxx - uyy - 2j * uxy)
    return DdbarField(0.5 * (uxx + uyy), dzz, np.conj(dzz))


def harmonic_probes(max_freq: int = 2) -> list[tuple[str, Callable]]:
    """Real and imaginary parts of ``exp(2 pi i (k x + l y))``, ``|k|, |l| <= max_freq``.

    Only one of each ``+-(k, l)`` pair is kept, since they give the same real
    probes up to sign.
    """
    probes = []
    for k in range(0, max_freq + 1):
        for l in range(-max_freq, max_freq + 1):
            if k == 0 and l <= 0:
                continue
            probes.append((f"cos({k},{l})", lambda x, y, k=k, l=l: np.cos(2 * np.pi * (k * x + l * y))))
            probes.append((f"sin({k},{l})", lambda x, y, k=k, l=l: np.sin(2 * np.pi * (k * x + l * y))))
    return probes


def _stencil_at(fn: Callable, x: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    """Five-point ``Delta/2`` of ``fn`` centered at arbitrary points."""
    c = fn(x, y)
    lap = fn(x + h, y) + fn(x - h, y) + fn(x, y + h) + fn(x, y - h) - 4 * c
    return 0.5 * lap / h**2


@dataclass(frozen=True)
class HolomorphyResult:
    name: str
    sign: Optional[int]
    r_plus: float
    r_minus: float
    tol: float
    table: tuple[tuple[str, float, float], ...]

    @property
    def label(self) -> str:
        return {1: "+1", -1: "-1", None: "none"}[self.sign]


def holomorphy_check(g: TorusMap2D, m: int = 128, tol: float = HOLO_TOL,
                     max_freq: int = 2) -> HolomorphyResult:
    """Classify ``g`` as holomorphic (+1), anti-holomorphic (-1) or neither.

    For each probe the left side is the grid ``Delta/2`` of ``u o g``; the
    right side is ``det(Dg)`` times the same stencil of ``u`` centered at the
    image nodes.  ``R+`` and ``R-`` are the sup-norm gaps for the two sign
    choices, relative to ``sup |Delta u / 2|``, maximized over probes.
    """
    h = 1.0 / m
    x = np.arange(m) / m
    X, Y = np.meshgrid(x, x, indexing="ij")
    GX, GY = g(X, Y)
    table = []
    for name, fn in harmonic_probes(max_freq):
        lhs = ddbar(Potential2D(fn(GX, GY))).laplacian_half
        img = g.det * _stencil_at(fn, GX, GY, h)
        scale = np.abs(ddbar(Potential2D(fn(X, Y))).laplacian_half).max()
        rp = float(np.abs(lhs - img).max() / scale)
        rm = float(np.abs(lhs + img).max() / scale)
        table.append((name, rp, rm))
    r_plus = max(t[1] for t in table)
    r_minus = max(t[2] for t in table)
    if r_plus <= tol < r_minus:
        sign = 1
    elif r_minus <= tol < r_plus:
        sign = -1
    else:
        sign = None
    return HolomorphyResult(g.name, sign, r_plus, r_minus, tol, tuple(table))
