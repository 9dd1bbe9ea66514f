"""How far back can a geodesic be continued?

Starting from the zero potential we aim at ``s (cos 2 pi x - 1)`` for
increasing steepness ``s``.  The backward extension length eps* shrinks as
``s`` grows; once it drops below 1 the geodesic cannot be reflected through
its starting point, which is what rules out a geodesic reversal symmetry.
"""
import math

import numpy as np

from mabuchi_torus import (CircleGrid, Potential1D, extension_candidate, harmonic, max_extension,
                           mirror_concat, random_kahler, d_p)

grid = CircleGrid(1024)
u0 = Potential1D.zero(grid)
v = harmonic(grid, 1.0).values
v = v - v.max()

print("    s       eps*")
for s in np.linspace(0.003, 0.9 / (2 * np.pi) ** 2, 8):
    eps = max_extension(u0, u0 + s * v)
    print(f"{s:.4f}  {eps:9.4f}{'   <- not reflectable' if eps < 1 else ''}")

print(f"\nconstant shift: eps* = {max_extension(u0, u0 + 0.3)}")

s = 0.02
eps = max_extension(u0, u0 + s * v)
for frac in (0.5, 1.5):
    cand = extension_candidate(u0, u0 + s * v, frac * eps)
    print(f"candidate at {frac:.1f} eps*: dual gap {cand.dual_gap:.2e}, "
          f"valid extension: {cand.is_extension}")

rng = np.random.default_rng(3)
while True:
    a = random_kahler(grid, rng, curvature=(0.05, 0.2))
    b = random_kahler(grid, rng, curvature=(0.05, 0.2))
    if max_extension(a, b) >= 1:
        break
path = mirror_concat(a, b, 32)
left = path.at(-1.0)
print(f"\nmirrored geodesic: d(u_-1, u_0) = {d_p(left, a).value:.6f}, "
      f"d(u_0, u_1) = {d_p(a, b).value:.6f}, d(u_-1, u_1) = {d_p(left, b).value:.6f}")
assert math.isfinite(d_p(left, b).value)
