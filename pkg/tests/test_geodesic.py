import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mabuchi_torus import (CircleGrid, ExtensionError, NotKahlerError, Potential1D, bump_family,
                           check_subgeodesic, connect, d_p, dual_potential, envelope_oracle,
                           extension_candidate, extension_lower_bound, harmonic, initial_tangent,
                           ma_density, max_extension, mirror_concat, random_kahler,
                           subgeodesic_delta, verify_extension_obstruction, write_geodesic_csv)

seeds = st.integers(0, 2**32 - 1)


def _pair(seed, n=1024, **kw):
    g = CircleGrid(n)
    rng = np.random.default_rng(seed)
    return random_kahler(g, rng, **kw), random_kahler(g, rng, **kw)


def test_constant_path(grid, rng):
    u = random_kahler(grid, rng)
    path = connect(u, u, K=8)
    assert np.abs(path.slices - u.values).max() <= 1e-12
    np.testing.assert_allclose(initial_tangent(path), 0.0, atol=1e-12)


@pytest.mark.parametrize("c", [-0.5, 0.3])
def test_shift_path_is_linear(grid, rng, c):
    u = random_kahler(grid, rng)
    path = connect(u, u + c, K=8)
    expected = u.values[None, :] + path.times[:, None] * c
    assert np.abs(path.slices - expected).max() <= 1e-12
    np.testing.assert_allclose(initial_tangent(path), c, atol=1e-12)


def test_connect_rejections(grid):
    z = Potential1D.zero(grid)
    with pytest.raises(NotKahlerError):
        connect(z, harmonic(grid, 0.1))
    with pytest.raises(ValueError):
        connect(z, z, K=1)
    with pytest.raises(ValueError):
        connect(z, Potential1D.zero(CircleGrid(512)))


@given(seeds)
def test_path_invariants(seed):
    u0, u1 = _pair(seed)
    path = connect(u0, u1, K=64)
    h = u0.grid.h
    assert np.abs(path.slices[0] - u0.values).max() <= h
    assert np.abs(path.slices[-1] - u1.values).max() <= h
    d2t = path.slices[2:] - 2 * path.slices[1:-1] + path.slices[:-2]
    assert d2t.min() >= -1e-8
    assert min(ma_density(path.potential(k)).min() for k in range(len(path))) >= 0
    cert = check_subgeodesic(path.slices, path.times)
    assert cert.passed, cert.min_slack


def test_oracle_trivial_cases(grid, rng):
    u = random_kahler(grid, rng)
    assert np.abs(envelope_oracle(u, u, 0.4).values - u.values).max() <= 1e-12
    w = envelope_oracle(u, u + 0.2, 0.5)
    assert np.abs(w.values - u.values - 0.1).max() <= 1e-8
    with pytest.raises(ValueError):
        envelope_oracle(u, u, 1.0)


def test_oracle_matches_connect_on_cosine(grid):
    u0, u1 = Potential1D.zero(grid), harmonic(grid, 0.02)
    gap = np.abs(envelope_oracle(u0, u1, 0.5).values - connect(u0, u1, K=2).slices[1]).max()
    assert gap <= 1e-6


def test_oracle_matches_connect_generic(grid, rng):
    u0, u1 = random_kahler(grid, rng), random_kahler(grid, rng)
    path = connect(u0, u1, K=10)
    gap = np.abs(envelope_oracle(u0, u1, 0.3).values - path.slices[3]).max()
    # frozen envelope tolerance at n = 1024
    assert gap <= 1e-6


def test_oracle_gap_shrinks_with_n():
    gaps = []
    for n in (256, 512, 1024):
        g = CircleGrid(n)
        u0, u1 = harmonic(g, 0.015, phase=0.3), harmonic(g, -0.01, k=1, phase=2.0)
        gaps.append(np.abs(envelope_oracle(u0, u1, 0.5).values - connect(u0, u1, 2).slices[1]).max())
    assert gaps[0] / gaps[1] >= 1.8 and gaps[1] / gaps[2] >= 1.8


@given(seeds)
def test_tangent_inf_sup_identities(seed):
    u0, u1 = _pair(seed)
    v = initial_tangent(connect(u0, u1, K=2))
    diff = (u1 - u0).values
    assert abs(v.min() - diff.min()) <= 5 * u0.grid.h
    assert abs(v.max() - diff.max()) <= 5 * u0.grid.h


def test_tangent_matches_forward_difference(grid, rng):
    u0, u1 = random_kahler(grid, rng), random_kahler(grid, rng)
    path = connect(u0, u1, K=64)
    fd = (path.slices[1] - path.slices[0]) / path.times[1]
    assert np.abs(fd - initial_tangent(path)).max() <= path.times[1] + grid.h


@given(seeds)
def test_comparison_principle(seed):
    u0, u1 = _pair(seed, n=512)
    g = u0.grid
    w = random_kahler(g, np.random.default_rng(seed + 1))
    u1_hi = w + float((u1 - w).values.max()) + 0.01
    a, b = connect(u0, u1, 8), connect(u0, u1_hi, 8)
    assert np.all(a.slices <= b.slices + g.h)


def test_subgeodesic_certificate_examples(grid):
    times = np.linspace(0, 1, 33)
    u = harmonic(grid, 0.02).values
    cert = check_subgeodesic([u] * 33, times)
    assert cert.passed and abs(cert.min_slack) <= 1e-12
    bad = [t * t * 0.1 * np.cos(2 * np.pi * grid.nodes) for t in times]
    cert = check_subgeodesic(bad, times)
    assert not cert.passed
    # violation sits at late times where the gradient term dominates
    k, _ = np.unravel_index(np.argmin(cert.slack), cert.slack.shape)
    assert times[k + 1] > 0.5


def test_subgeodesic_rejects_bad_time_grid(grid):
    u = np.zeros(grid.n)
    with pytest.raises(ValueError):
        check_subgeodesic([u, u, u], [0.0, 0.1, 1.0])


@pytest.mark.parametrize("base", ["zero", "cos"])
@pytest.mark.parametrize("x0", [0.0, 0.5])
def test_subgeodesic_delta(grid, base, x0):
    u = Potential1D.zero(grid) if base == "zero" else harmonic(grid, 0.02)
    delta = subgeodesic_delta(u, x0)
    assert 0 < delta <= 1
    times, slices = bump_family(u, x0, delta)
    assert check_subgeodesic(slices, times).passed
    if delta < 1:
        times, slices = bump_family(u, x0, 2 * delta)
        kahler = all(ma_density(Potential1D(grid, s)).min() > 1e-10 for s in slices)
        assert not (kahler and check_subgeodesic(slices, times).passed)


def test_subgeodesic_center_has_zero_slack(grid):
    u = Potential1D.zero(grid)
    times, slices = bump_family(u, 0.5, 0.5)
    cert = check_subgeodesic(slices, times)
    assert np.all(np.abs(cert.slack[:, grid.n // 2]) <= 1e-12)


def test_max_extension_shift_family(grid, rng):
    u = random_kahler(grid, rng)
    assert math.isinf(max_extension(u, u + 0.3))
    assert math.isinf(max_extension(u, u - 2.0))


def _closed_form_threshold(u0, u1):
    q = np.arange(2 * u0.n) / (2 * u0.n)
    dq = q[1]
    a, b = dual_potential(u0)(q), dual_potential(u1)(q)
    d2 = lambda f: (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / dq**2  # noqa: E731
    diff = d2(a - b)
    neg = diff < 0
    return float(np.min((1 + d2(a))[neg] / -diff[neg])) if neg.any() else math.inf


@pytest.mark.parametrize("s", [0.005, 0.015, 0.022])
def test_max_extension_matches_closed_form(grid, s):
    u0 = Potential1D.zero(grid)
    u1 = s * harmonic(grid, 1.0)
    eps = max_extension(u0, u1)
    assert math.isfinite(eps)
    assert eps == pytest.approx(_closed_form_threshold(u0, u1), rel=2e-4)


def test_max_extension_monotone_in_steepness(grid):
    u0 = Potential1D.zero(grid)
    v = harmonic(grid, 1.0)
    eps = [max_extension(u0, s * v) for s in np.linspace(0.002, 0.024, 8)]
    assert all(b <= a * (1 + 1e-4) for a, b in zip(eps[:-1], eps[1:]))
    assert eps[-1] < 1


def test_extension_consistent_under_restriction(grid, rng):
    u0 = random_kahler(grid, rng, curvature=0.3)
    u1 = random_kahler(grid, rng, curvature=0.3)
    e = max_extension(u0, u1)
    for frac in (0.25, 0.5):
        eps = frac * e
        s = eps / (1 + eps)
        path = connect(u0, u1, K=2)
        us = path.at(s)
        # exact value of the threshold for the sub-segment from u_s
        assert max_extension(us, u1) == pytest.approx((e + s) / (1 - s), rel=1e-3)
        assert max_extension(us, u1) >= eps * (1 - 1e-3)
        # the front piece [0, 1/(1+eps)], rescaled to unit length
        tau = 1 / (1 + eps)
        assert max_extension(u0, path.at(tau)) == pytest.approx(e / tau, rel=1e-3)


def test_obstruction_constant_family(grid):
    u0 = Potential1D.zero(grid)
    c = 0.4
    u1 = Potential1D(grid, np.full(grid.n, -c))
    eps = 0.75
    cand = extension_candidate(u0, u1, eps)
    assert cand.is_extension
    np.testing.assert_allclose(cand.potential.values, eps * c, atol=1e-12)
    assert verify_extension_obstruction(u0, u1, cand.potential)


def test_obstruction_preconditions(grid):
    z = Potential1D.zero(grid)
    with pytest.raises(ValueError):
        verify_extension_obstruction(z + 1, z - 1, z)
    with pytest.raises(ValueError):
        verify_extension_obstruction(z, harmonic(grid, 0.01), z)


def test_valid_extensions_are_nonnegative(grid):
    u0 = Potential1D.zero(grid)
    v = harmonic(grid, 1.0)
    u1 = 0.015 * (v - v.values.max())
    e = max_extension(u0, u1)
    for frac in (0.2, 0.6, 0.95):
        cand = extension_candidate(u0, u1, frac * e)
        assert cand.is_extension
        assert verify_extension_obstruction(u0, u1, cand.potential)
        sup_c, bound = extension_lower_bound(u1, cand.potential, frac * e)
        assert sup_c >= bound - u0.grid.h


def test_over_extension_breaks_dual_linearity(grid):
    u0 = Potential1D.zero(grid)
    v = harmonic(grid, 1.0)
    u1 = 0.02 * (v - v.values.max())
    e = max_extension(u0, u1)
    cand = extension_candidate(u0, u1, 3 * e)
    assert not cand.is_extension
    assert cand.dual_gap > 100 * cand.tol


def test_mirror_concat_shift_family(grid, rng):
    u = random_kahler(grid, rng)
    c = 0.25
    path = mirror_concat(u, u + c, K=16)
    assert path.times[0] == -1 and path.times[-1] == 1
    assert d_p(path.at(-1.0), path.at(1.0)).value == pytest.approx(2 * c, rel=1e-9)


def test_mirror_concat_properties(grid, rng):
    u0 = random_kahler(grid, rng, curvature=0.1)
    u1 = random_kahler(grid, rng, curvature=0.1)
    assert max_extension(u0, u1) >= 1
    path = mirror_concat(u0, u1, K=64)
    k0 = 64
    assert np.abs(path.slices[k0] - u0.values).max() <= grid.h
    dt = path.times[1] - path.times[0]
    right = (path.slices[k0 + 1] - path.slices[k0]) / dt
    left = (path.slices[k0] - path.slices[k0 - 1]) / dt
    assert np.abs(right - left).max() <= dt + grid.h
    d_left = d_p(path.at(-1.0), u0).value
    assert d_left == pytest.approx(d_p(u0, u1).value, rel=1e-3)
    assert d_p(path.at(-0.5), path.at(0.7)).value == pytest.approx(
        0.6 * d_p(path.at(-1.0), u1).value, rel=1e-3)


def test_mirror_concat_rejects_steep_pair(grid):
    u0 = Potential1D.zero(grid)
    with pytest.raises(ExtensionError):
        mirror_concat(u0, 0.024 * harmonic(grid, 1.0))


def test_geodesic_csv(tmp_path):
    g = CircleGrid(16)
    path = connect(Potential1D.zero(g), harmonic(g, 0.02), K=2)
    out = tmp_path / "geo.csv"
    write_geodesic_csv(path, out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "x", "u"]
    assert len(rows) == 1 + 3 * 16
    t = [float(r[0]) for r in rows[1:]]
    assert t == sorted(t)
