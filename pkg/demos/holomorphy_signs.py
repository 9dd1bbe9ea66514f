"""Which affine torus maps commute with i ddbar, and with which sign?

Holomorphic maps pull ``i ddbar u`` back to ``i ddbar (u o g)``;
anti-holomorphic maps do so up to a sign; anything else does neither.
"""
from mabuchi_torus import TorusMap2D, holomorphy_check
from mabuchi_torus.holomorphy2d import NAMED_MAPS

maps = {k: f() for k, f in NAMED_MAPS.items()}
maps["conjugation*quarter_turn"] = maps["conjugation"] @ maps["quarter_turn"]
maps["swap"] = TorusMap2D([[0, 1], [1, 0]], name="swap")

print(f"{'map':26s} {'sign':>5s} {'R+':>10s} {'R-':>10s}")
for name, g in maps.items():
    res = holomorphy_check(g, m=128)
    print(f"{name:26s} {res.label:>5s} {res.r_plus:10.2e} {res.r_minus:10.2e}")
