"""Recover the structure of an isometry from its action on potentials.

Every differential we meet has the form ``xi -> a xi o G - b int xi``.  The
classifier sees the map only as a black box: constants reveal ``a - b``,
narrow bumps reveal ``a`` and where ``G`` sends each point.
"""
import numpy as np

from mabuchi_torus import (Potential1D, black_box, classify, compose, flip, flip_map, pullback_map,
                           verify_isometry)

n = 1024


def mystery(u):
    # reflect and rotate the samples, then flip; the classifier is not told this
    return flip(_reflect_rotate(u))


def _reflect_rotate(u):
    return Potential1D(u.grid, np.roll(u.values[::-1], 384))


maps = [
    flip_map(),
    pullback_map(-1, 0.25, n),
    compose(flip_map(), pullback_map(1, 0.125, n)),
    black_box("mystery", mystery),
]

for F in maps:
    check = verify_isometry(F, trials=20, n=n)
    rep = classify(F, n=n)
    print(f"{F.name:28s} isometry residual {check.max_residual:.1e}   "
          f"a_hat = {rep.a_hat:+.4f}  b_hat = {rep.b_hat:+.4f}  -> (a, b) = ({rep.a}, {rep.b})")

print("\nfull report for the black box:\n")
print(rep.summary())
print("\nwhere G sends a few bump centers (preimage -> center):")
for y, c in rep.g_samples[:4]:
    print(f"  {y:.4f} -> {c:.4f}")
