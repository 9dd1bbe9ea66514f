"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Lines are written through the terminal reporter, so they show up in plain
``pytest`` output without ``-s``.  Each line carries the measured worst case,
the tolerance it was held to, and the wall time against its budget.
"""
import filecmp
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from mabuchi_torus import (CircleGrid, Potential1D, P_SWEEP, bump_family, cat0_check,
                           check_subgeodesic, classify, compose, connect, d_infinity, d_p,
                           distance_table, envelope_oracle, extension_candidate, flip, flip_map,
                           harmonic, holomorphy_check, identity_map, initial_tangent, ma_energy,
                           max_extension, mirror_concat, pullback_map, random_kahler,
                           segment_speed, subgeodesic_delta, symmetry_probe,
                           verify_extension_obstruction, verify_isometry)
from mabuchi_torus.cli import main as cli_main
from mabuchi_torus.experiments import EXPERIMENTS
from mabuchi_torus.holomorphy2d import NAMED_MAPS

N = 1024
H = 1.0 / N


@pytest.fixture
def report(request):
    tr = request.config.pluginmanager.getplugin("terminalreporter")

    @contextmanager
    def _report(label, budget):
        lines = []
        t0 = time.perf_counter()
        ok = False
        try:
            yield lines
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            in_time = budget is None or elapsed <= budget
            status = "PASS" if ok and in_time else "FAIL"
            limit = f" (budget {budget:g}s)" if budget is not None else ""
            msg = f"[acceptance] {status} {label}: {'; '.join(lines)}; {elapsed:.2f}s{limit}"
            if tr is not None:
                tr.write_line("")
                tr.write_line(msg)
            else:
                print(msg)
        assert in_time, f"{label} took {elapsed:.2f}s, budget {budget}s"

    return _report


def _grid(n=N):
    return CircleGrid(n)


def test_01_flip_algebra(report):
    with report("1 flip algebra", 1.0) as out:
        g, rng = _grid(), np.random.default_rng(1)
        inv = sgn = 0.0
        for _ in range(100):
            u = random_kahler(g, rng, offset=2.0)
            inv = max(inv, float(np.abs((flip(flip(u)) - u).values).max()))
            sgn = max(sgn, abs(ma_energy(flip(u)) + ma_energy(u)))
        out.append(f"max|FF(u)-u| = {inv:.2e} <= 1e-12, max|I(F(u))+I(u)| = {sgn:.2e} <= 1e-10")
        assert inv <= 1e-12 and sgn <= 1e-10


def test_02_isometry_residuals(report):
    maps = [flip_map(), pullback_map(1, 0.25, N), pullback_map(-1, 0.0, N),
            pullback_map(-1, 0.125, N), compose(flip_map(), pullback_map(1, 0.25, N)),
            compose(pullback_map(-1, 0.5, N), flip_map())]
    with report("2 isometry residuals", 5.0) as out:
        worst, tol = 0.0, None
        for i, F in enumerate(maps):
            chk = verify_isometry(F, trials=50, n=N, seed=i)
            worst, tol = max(worst, chk.max_residual), chk.tolerance
            assert chk.passed, (F.name, chk.max_residual)
        out.append(f"{len(maps)} maps x 50 probes, worst {worst:.2e} <= {tol:.2e}")


def test_03_classifier_recovery(report):
    maps = [flip_map(), pullback_map(1, 0.25, N), pullback_map(-1, 0.125, N),
            compose(flip_map(), pullback_map(1, 0.25, N)),
            compose(flip_map(), pullback_map(-1, 0.375, N))]
    with report("3 classifier recovery", 10.0) as out:
        worst_g = 0.0
        for F in maps:
            rep = classify(F, n=N, seed=0, centers=16)
            assert not rep.inconclusive, F.name
            assert (rep.a, rep.b) == F.ab, (F.name, rep.a_hat, rep.b_hat)
            assert len(rep.g_samples) == 16
            worst_g = max(worst_g, rep.g_error)
        out.append(f"(a,b) exact for {len(maps)} maps, G error at 16 centers {worst_g:.2e} <= 2h")
        assert worst_g <= 2 * H


def test_04_tangent_extremes(report):
    with report("4 inf/sup tangent identities", 10.0) as out:
        g, rng = _grid(), np.random.default_rng(4)
        worst = 0.0
        for _ in range(100):
            u0, u1 = random_kahler(g, rng), random_kahler(g, rng)
            v = initial_tangent(connect(u0, u1, K=2))
            diff = (u1 - u0).values
            worst = max(worst, abs(v.min() - diff.min()), abs(v.max() - diff.max()))
        shift = 0.0
        for c in np.linspace(-1.5, 1.5, 7):
            u0 = random_kahler(g, rng)
            v = initial_tangent(connect(u0, u0 + c, K=2))
            shift = max(shift, float(np.abs(v - c).max()))
        out.append(f"100 pairs worst {worst:.2e} <= 5h = {5 * H:.2e}, shift family {shift:.1e} <= 1e-10")
        assert worst <= 5 * H and shift <= 1e-10


def test_05_envelope_equivalence(report):
    with report("5 envelope equivalence", 30.0) as out:
        worst_ratio = math.inf
        for i in range(10):
            gaps = []
            for n in (512, 1024, 2048):
                rng = np.random.default_rng(500 + i)
                g = _grid(n)
                u0, u1 = random_kahler(g, rng), random_kahler(g, rng)
                oracle = envelope_oracle(u0, u1, 0.5).values
                gaps.append(float(np.abs(oracle - connect(u0, u1, K=2).slices[1]).max()))
            worst_ratio = min(worst_ratio, gaps[0] / gaps[1], gaps[1] / gaps[2])
        out.append(f"10 pairs, smallest gap ratio per doubling {worst_ratio:.2f} >= 1.8")
        assert worst_ratio >= 1.8


def test_06_metric_structure(report):
    with report("6 metric structure", 20.0) as out:
        g, rng = _grid(), np.random.default_rng(6)
        mono = -math.inf
        for _ in range(20):
            u0, u1 = random_kahler(g, rng), random_kahler(g, rng)
            vals = [v for _, v in distance_table(u0, u1, P_SWEEP)] + [d_infinity(u0, u1)]
            mono = max(mono, max(a - b for a, b in zip(vals[:-1], vals[1:])))
        # single-harmonic pairs: the L^64 norm of a broad tangent is close to its sup
        limit = 0.0
        for _ in range(10):
            a0, a1 = rng.uniform(0.005, 0.02, size=2)
            p0, p1 = rng.uniform(0, 2 * np.pi, size=2)
            u0, u1 = harmonic(g, a0, phase=p0), harmonic(g, a1, phase=p1)
            dinf = d_infinity(u0, u1)
            limit = max(limit, abs(d_p(u0, u1, 64).value - dinf) / dinf)
        speed = 0.0
        for _ in range(10):
            u0, u1 = random_kahler(g, rng), random_kahler(g, rng)
            path = connect(u0, u1, K=8)
            full = d_p(u0, u1).value
            for a, b in ((0.0, 0.25), (0.25, 0.75), (0.5, 1.0), (0.125, 0.375)):
                speed = max(speed, abs(segment_speed(path, a, b) - full) / full)
        cat_ok, cat_worst = True, math.inf
        for _ in range(100):
            res = cat0_check(*(random_kahler(g, rng) for _ in range(3)))
            cat_ok &= res.passed
            cat_worst = min(cat_worst, res.slack)
        out.append(f"monotone slack {-mono:.1e} >= -1e-10, |d64-dinf|/dinf {limit:.3f} <= 0.05, "
                   f"speed {speed:.1e} <= 1e-3, CAT(0) min slack {cat_worst:.1e} on 100 triples")
        assert mono <= 1e-10 and limit <= 0.05 and speed <= 1e-3 and cat_ok


def test_07_concatenation(report):
    with report("7 concatenation", 10.0) as out:
        g, rng = _grid(), np.random.default_rng(7)
        pairs = []
        while len(pairs) < 10:
            u0 = random_kahler(g, rng, curvature=(0.05, 0.3))
            u1 = random_kahler(g, rng, curvature=(0.05, 0.3))
            if max_extension(u0, u1) >= 1.0:
                pairs.append((u0, u1))
        worst = 0.0
        for u0, u1 in pairs:
            path = mirror_concat(u0, u1, 64)
            left = path.at(-1.0)
            d_l, d_r, d_full = d_p(left, u0).value, d_p(u0, u1).value, d_p(left, u1).value
            worst = max(worst, abs(d_l - d_r) / d_r, abs(d_full - d_l - d_r) / d_full)
            for a, b in ((-0.5, 0.7), (-0.9, -0.1), (0.2, 0.6)):
                seg = d_p(path.at(a), path.at(b)).value
                worst = max(worst, abs(seg - 0.5 * (b - a) * d_full) / d_full)
        out.append(f"10 extendable pairs, worst relative error {worst:.1e} <= 1e-3")
        assert worst <= 1e-3


def test_08_non_extendability(report):
    with report("8 non-extendability thresholds", 10.0) as out:
        g = _grid()
        u0 = Potential1D.zero(g)
        assert all(math.isinf(max_extension(u0, u0 + c)) for c in (-1.0, -0.25, 0.5, 2.0))
        v = harmonic(g, 1.0).values
        v = v - v.max()
        svals = np.linspace(0.9 / (2 * np.pi) ** 2 / 8, 0.9 / (2 * np.pi) ** 2, 8)
        eps = [max_extension(u0, u0 + s * v) for s in svals]
        assert all(math.isfinite(e) for e in eps)
        rise = max(b - a for a, b in zip(eps[:-1], eps[1:]))
        assert rise <= 1e-3 * max(eps)
        assert eps[-1] < 1.0
        checked = 0
        for s, e in zip(svals, eps):
            for frac in (0.25, 0.5, 0.9):
                cand = extension_candidate(u0, u0 + s * v, frac * e)
                if cand.is_extension:
                    assert verify_extension_obstruction(u0, u0 + s * v, cand.potential)
                    checked += 1
        out.append(f"eps* {eps[0]:.3g} -> {eps[-1]:.3g} non-increasing, "
                   f"{checked} extensions satisfy u_(-eps) >= 0")
        assert checked > 0


def test_09_symmetry_obstruction(report):
    with report("9 symmetry obstruction", 10.0) as out:
        g, rng = _grid(), np.random.default_rng(9)
        maps = [identity_map(), flip_map(), pullback_map(1, 0.25, N), pullback_map(-1, 0.0, N),
                compose(flip_map(), pullback_map(-1, 0.0, N))]
        bases = [Potential1D.zero(g), harmonic(g, 0.02)] + [random_kahler(g, rng) for _ in range(3)]
        blocked = math.inf
        for F in maps:
            for j, phi in enumerate(bases):
                ver = symmetry_probe(F, phi, seed=j)
                assert ver.failed, (F.name, j)
                blocked = min(blocked, ver.reversal_eps)
        out.append(f"{len(maps)} maps x 5 bases all fail a condition, reversal blocked at eps* = {blocked:.3g} < 1")
        assert blocked < 1.0


def test_10_subgeodesic(report):
    with report("10 subgeodesic construction", 5.0) as out:
        g = _grid()
        deltas, worst = [], math.inf
        for u in (Potential1D.zero(g), harmonic(g, 0.02)):
            for x0 in (0.0, 0.25, 0.5, 0.75):
                delta = subgeodesic_delta(u, x0, 64, eps=1e-6)
                times, slices = bump_family(u, x0, delta, 64)
                cert = check_subgeodesic(slices, times, 1e-6)
                assert delta > 0 and cert.passed
                deltas.append(delta)
                worst = min(worst, cert.min_slack)
        out.append(f"8 families, delta in [{min(deltas):.3g}, {max(deltas):.3g}], min slack {worst:.1e}")


def test_11_holomorphy_signs(report):
    expected = {"translation": 1, "rotation": 1, "quarter_turn": 1, "conjugation": -1, "shear": None}
    with report("11 holomorphy signs", 10.0) as out:
        maps = {k: f() for k, f in NAMED_MAPS.items()}
        signs = {k: holomorphy_check(m, m=128).sign for k, m in maps.items()}
        assert signs == expected
        pairs = 0
        for a in maps:
            for b in maps:
                if signs[a] is None or signs[b] is None:
                    continue
                assert holomorphy_check(maps[a] @ maps[b], m=128).sign == signs[a] * signs[b]
                pairs += 1
        out.append(f"named signs match, {pairs} compositions multiply")


def test_12_determinism(report, tmp_path):
    with report("12 determinism", None) as out:
        for tag in ("a", "b"):
            for exp in EXPERIMENTS:
                assert cli_main(["run", exp, "--seed", "7", "--out", str(tmp_path / tag / exp)]) == 0
            assert cli_main(["classify", "compose:flip+pullback:1,0.25",
                             "--out", str(tmp_path / tag / "classify_cmd")]) == 0
            assert cli_main(["holomorphy", "conjugation+shear",
                             "--out", str(tmp_path / tag / "holo_cmd")]) == 0
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
        assert files
        same = [filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in files]
        out.append(f"{sum(same)}/{len(files)} artifacts byte-identical")
        assert all(same)
