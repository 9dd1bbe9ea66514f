"""Named numerical experiments with PASS/FAIL assertions and CSV artifacts.

Each experiment is a function of an :class:`ExperimentConfig` that records
assertions on a :class:`Run` and writes its CSV files into the output
directory.  Randomness comes only from the configured seed, and floats are
written with ``repr`` so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .geodesic import (connect, extension_candidate, extension_lower_bound, initial_tangent,
                       max_extension, mirror_concat, check_subgeodesic, bump_family,
                       subgeodesic_delta, verify_extension_obstruction, write_geodesic_csv)
from .holomorphy2d import NAMED_MAPS, holomorphy_check
from .isometry import (classify, compose, flip, flip_map, identity_map, pullback_map,
                       symmetry_probe)
from .metric import P_SWEEP, cat0_check, d_infinity, d_p, distance_table
from .potential import CircleGrid, Potential1D, harmonic, ma_energy, random_kahler

__all__ = ["ExperimentConfig", "Assertion", "Run", "EXPERIMENTS", "DEFAULT_TOLERANCES",
           "run_experiment"]


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 1024
    time_samples: int = 64
    seed: int = 0
    tol: dict = field(default_factory=dict)
    out: Path = Path("out")
    steepness_sweep: bool = False

    def __post_init__(self):
        n = self.n
        if not (isinstance(n, int) and 16 <= n <= 65536 and n & (n - 1) == 0):
            raise ValueError(f"n must be a power of two in [16, 65536], got {n!r}")
        if self.time_samples < 6:
            raise ValueError("time samples must be at least 6")
        self.out = Path(self.out)


@dataclass(frozen=True)
class Assertion:
    name: str
    passed: bool
    value: float
    tolerance: float

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


class Run:
    """Collects assertions and writes artifacts for one experiment."""

    def __init__(self, cfg: ExperimentConfig, statement: str, tolerances: dict):
        self.cfg = cfg
        self.statement = statement
        self.tol = dict(tolerances)
        unknown = set(cfg.tol) - set(self.tol)
        if unknown:
            raise ValueError(f"unknown tolerance(s) for {cfg.experiment}: "
                             f"{', '.join(sorted(unknown))}; known: {', '.join(sorted(self.tol))}")
        self.tol.update(cfg.tol)
        self.assertions: list[Assertion] = []
        self.grid = CircleGrid(cfg.n)
        self.rng = np.random.default_rng(cfg.seed)
        cfg.out.mkdir(parents=True, exist_ok=True)

    def check(self, name: str, value: float, tolerance: float, passed: bool = None) -> None:
        if passed is None:
            passed = value <= tolerance
        self.assertions.append(Assertion(name, bool(passed), float(value), float(tolerance)))

    def write_csv(self, filename: str, header, rows) -> Path:
        path = self.cfg.out / filename
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        return path

    def write_summary(self) -> Path:
        path = self.cfg.out / "summary.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"# {self.cfg.experiment}: {self.statement}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["NAME", "STATUS", "VALUE", "TOLERANCE"])
            for a in self.assertions:
                w.writerow([a.name, a.status, _fmt(a.value), _fmt(a.tolerance)])
        return path

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


def _lemma31(run: Run) -> None:
    g, rng, h = run.grid, run.rng, run.grid.h
    rows, worst = [], 0.0
    for i in range(int(run.tol["pairs"])):
        u0, u1 = random_kahler(g, rng), random_kahler(g, rng)
        v = initial_tangent(connect(u0, u1, K=2))
        e_inf = abs(v.min() - (u1 - u0).values.min())
        e_sup = abs(v.max() - (u1 - u0).values.max())
        worst = max(worst, e_inf, e_sup)
        rows.append((i, e_inf, e_sup))
    run.write_csv("lemma31.csv", ["pair", "inf_error", "sup_error"], rows)
    run.check("tangent inf/sup match endpoint difference", worst, run.tol["identity"] * h)
    shift = 0.0
    for c in (-0.7, -0.1, 0.3, 1.5):
        u0 = random_kahler(g, rng)
        v = initial_tangent(connect(u0, u0 + c, K=2))
        shift = max(shift, abs(v.min() - c), abs(v.max() - c))
    run.check("constant-shift family exact", shift, run.tol["shift"])


def _smooth_pair(g: CircleGrid, rng) -> tuple[Potential1D, Potential1D]:
    a0, a1 = rng.uniform(0.005, 0.02, size=2)
    ph0, ph1 = rng.uniform(0, 2 * np.pi, size=2)
    return harmonic(g, a0, phase=ph0), harmonic(g, a1, phase=ph1)


def _dp_limit(run: Run) -> None:
    g, rng = run.grid, run.rng
    rows, mono, gap, linf = [], 0.0, 0.0, 0.0
    for i in range(int(run.tol["pairs"])):
        u0, u1 = _smooth_pair(g, rng)
        table = distance_table(u0, u1, P_SWEEP)
        dinf = d_infinity(u0, u1)
        rows += [(i, p, val) for p, val in table] + [(i, "inf", dinf)]
        vals = [v for _, v in table]
        mono = max(mono, max(a - b for a, b in zip(vals[:-1], vals[1:])))
        gap = max(gap, abs(vals[-1] - dinf) / dinf)
        linf = max(linf, abs(dinf - np.abs((u1 - u0).values).max()))
    run.write_csv("dp_limit.csv", ["pair", "p", "value"], rows)
    run.check("d_p non-decreasing in p", mono, run.tol["monotone"])
    run.check("relative gap d_64 vs d_inf", gap, run.tol["limit"])
    run.check("d_inf equals sup|u1-u0|", linf, run.tol["identity"] * g.h)


def _flip(run: Run) -> None:
    g, rng = run.grid, run.rng
    inv, sgn, rows = 0.0, 0.0, []
    for i in range(int(run.tol["samples"])):
        u = random_kahler(g, rng, offset=1.0)
        e_inv = float(np.abs((flip(flip(u)) - u).values).max())
        e_sgn = abs(ma_energy(flip(u)) + ma_energy(u))
        inv, sgn = max(inv, e_inv), max(sgn, e_sgn)
        rows.append((i, ma_energy(u), e_inv, e_sgn))
    run.write_csv("flip.csv", ["sample", "energy", "involution_error", "energy_sign_error"], rows)
    run.check("flip is an involution", inv, run.tol["involution"])
    run.check("flip reverses the energy", sgn, run.tol["energy"])


def _classify_maps(n: int):
    return [flip_map(), pullback_map(1, 0.25, n), pullback_map(-1, 0.125, n),
            compose(flip_map(), pullback_map(1, 0.25, n)),
            compose(flip_map(), pullback_map(-1, 0.375, n))]


def _classify(run: Run) -> None:
    rows, grows = [], []
    for F in _classify_maps(run.cfg.n):
        rep = classify(F, n=run.cfg.n, seed=run.cfg.seed)
        rows.append((F.name, rep.a_hat, rep.b_hat, rep.residual, rep.g_error, rep.shift_drift))
        grows += [(F.name, y, c) for y, c in rep.g_samples]
        ok = (rep.a, rep.b) == F.ab and not rep.inconclusive
        run.check(f"{F.name}: a={F.ab[0]} b={F.ab[1]}", abs(rep.a_hat - F.ab[0]) + abs(rep.b_hat - F.ab[1]),
                  run.tol["ab"], ok)
        run.check(f"{F.name}: G matches defining map", rep.g_error, run.tol["g"] * run.grid.h)
    run.write_csv("classify.csv", ["map", "a_hat", "b_hat", "residual", "g_error", "shift_drift"], rows)
    run.write_csv("classify_g.csv", ["map", "preimage", "center"], grows)


def _concat_pairs(run: Run, count: int):
    g, rng, pairs = run.grid, run.rng, []
    for _ in range(200):
        u0 = random_kahler(g, rng, curvature=(0.05, 0.3))
        u1 = random_kahler(g, rng, curvature=(0.05, 0.3))
        if max_extension(u0, u1) >= 1.0:
            pairs.append((u0, u1))
            if len(pairs) == count:
                break
    return pairs


def _concat(run: Run) -> None:
    K = run.cfg.time_samples
    pairs = _concat_pairs(run, int(run.tol["pairs"]))
    run.check("extendable pairs found", len(pairs), run.tol["pairs"], len(pairs) == run.tol["pairs"])
    rows, e41, e42, e43 = [], 0.0, 0.0, 0.0
    for i, (u0, u1) in enumerate(pairs):
        path = mirror_concat(u0, u1, K)
        left = path.at(-1.0)
        d_left, d_right = d_p(left, u0).value, d_p(u0, u1).value
        d_full = d_p(left, u1).value
        e41 = max(e41, abs(d_left - d_right) / d_right)
        e42 = max(e42, abs(d_full - d_left - d_right) / d_full)
        a, b = -0.5, 0.7
        e43 = max(e43, abs(d_p(path.at(a), path.at(b)).value - 0.5 * (b - a) * d_full) / d_full)
        rows.append((i, d_left, d_right, d_full))
        if i == 0:
            write_geodesic_csv(path, run.cfg.out / "concat_path.csv")
    run.write_csv("concat.csv", ["pair", "d_left", "d_right", "d_full"], rows)
    tol = run.tol["relative"]
    run.check("equal speeds on both halves", e41, tol)
    run.check("length additivity through the junction", e42, tol)
    run.check("proportional sub-segment length (a,b)=(-0.5,0.7)", e43, tol)


def _extend(run: Run) -> None:
    g = run.grid
    u0 = Potential1D.zero(g)
    shifts = [max_extension(u0, u0 + c) for c in (-1.0, -0.2, 0.5)]
    run.check("constant shifts extend forever", 0.0 if all(math.isinf(e) for e in shifts) else 1.0,
              0.0)
    v = harmonic(g, 1.0).values
    v = v - v.max()
    s_max = 0.9 / (2 * np.pi) ** 2
    count = 20 if run.cfg.steepness_sweep else 8
    svals = np.linspace(s_max / count, s_max, count)
    eps = [max_extension(u0, u0 + s * v) for s in svals]
    finite = [e for e in eps if math.isfinite(e)]
    incr = max(b - a for a, b in zip(finite[:-1], finite[1:])) if len(finite) > 1 else 0.0
    run.check("eps* non-increasing in steepness", incr, run.tol["monotone"] * max(finite))
    run.check("steepest member not extendable by its length", eps[-1], 1.0, eps[-1] < 1.0)
    if run.cfg.steepness_sweep:
        run.write_csv("extend_sweep.csv", ["s", "eps_star"], zip(svals, eps))
    all_ok, low_u, bound, undetected, rows = True, math.inf, math.inf, 0, []
    for s, e in zip(svals, eps):
        if not math.isfinite(e):
            continue
        u1 = u0 + s * v
        for frac in (0.25, 0.5, 0.9):
            cand = extension_candidate(u0, u1, frac * e)
            all_ok &= cand.is_extension and verify_extension_obstruction(u0, u1, cand.potential)
            low_u = min(low_u, float(cand.potential.values.min()))
            sup_c, low = extension_lower_bound(u1, cand.potential, frac * e)
            bound = min(bound, sup_c - low)
            rows.append((s, frac * e, cand.potential.values.min(), sup_c, low))
        undetected += extension_candidate(u0, u1, 2 * e + 0.05).is_extension
    run.write_csv("extend_candidates.csv", ["s", "eps", "min_u", "sup_u", "lower_bound"], rows)
    run.check("valid extensions are non-negative (negated min)", -low_u, g.h, all_ok)
    run.check("backward slice dominates the steepness bound", -bound, run.tol["bound"] * g.h)
    run.check("over-extensions break dual linearity", undetected, 0.0)


def _symmetry(run: Run) -> None:
    g, rng = run.grid, run.rng
    maps = [identity_map(), flip_map(), pullback_map(1, 0.25, g.n), pullback_map(-1, 0.0, g.n),
            compose(flip_map(), pullback_map(-1, 0.0, g.n))]
    bases = [Potential1D.zero(g), harmonic(g, 0.02)] + [random_kahler(g, rng) for _ in range(3)]
    rows, all_fail, eps_max = [], True, 0.0
    for F in maps:
        for j, phi in enumerate(bases):
            ver = symmetry_probe(F, phi, seed=run.cfg.seed + j)
            all_fail &= bool(ver.failed)
            eps_max = max(eps_max, ver.reversal_eps)
            r = ver.residuals
            rows.append((F.name, j, r["involution"], r["fixes_phi"], r["differential_is_minus_id"],
                         ver.reversal_scale, ver.reversal_eps))
    run.write_csv("symmetry.csv", ["map", "base", "involution", "fixes_phi",
                                   "differential_is_minus_id", "reversal_s", "reversal_eps"], rows)
    run.check("every map fails a symmetry condition", 0.0 if all_fail else 1.0, 0.0, all_fail)
    run.check("reversal blocked by a non-extendable geodesic", eps_max, 1.0, eps_max < 1.0)


def _subgeodesic(run: Run) -> None:
    g, K = run.grid, run.cfg.time_samples
    rows, worst = [], math.inf
    for label, u in (("zero", Potential1D.zero(g)), ("cos", harmonic(g, 0.02))):
        for x0 in (0.0, 0.25, 0.5, 0.75):
            delta = subgeodesic_delta(u, x0, K, eps=run.tol["slack"])
            times, slices = bump_family(u, x0, delta, K)
            cert = check_subgeodesic(slices, times, run.tol["slack"])
            worst = min(worst, cert.min_slack)
            rows.append((label, x0, delta, cert.min_slack))
    run.write_csv("subgeodesic.csv", ["base", "center", "delta", "min_slack"], rows)
    run.check("bump families certified", -worst, run.tol["slack"])


def _holomorphy(run: Run) -> None:
    m = int(run.tol["m"])
    expected = {"translation": 1, "rotation": 1, "quarter_turn": 1, "conjugation": -1, "shear": None}
    maps = {k: f() for k, f in NAMED_MAPS.items()}
    signs, rows = {}, []
    for name, gmap in maps.items():
        res = holomorphy_check(gmap, m=m, tol=run.tol["holo"])
        signs[name] = res.sign
        rows.append((name, res.label, res.r_plus, res.r_minus))
        run.check(f"{name} sign {expected[name]}", min(res.r_plus, res.r_minus), run.tol["holo"],
                  res.sign == expected[name])
    bad = 0
    for a in maps:
        for b in maps:
            if signs[a] is None or signs[b] is None:
                continue
            res = holomorphy_check(maps[a] @ maps[b], m=m, tol=run.tol["holo"])
            bad += res.sign != signs[a] * signs[b]
            rows.append((f"{a}*{b}", res.label, res.r_plus, res.r_minus))
    run.write_csv("holomorphy.csv", ["map", "sign", "r_plus", "r_minus"], rows)
    run.check("composition signs multiply", bad, 0.0)


def _cat0(run: Run) -> None:
    g, rng = run.grid, run.rng
    rows, worst, ok = [], math.inf, True
    for i in range(int(run.tol["triples"])):
        u, v, w = (random_kahler(g, rng) for _ in range(3))
        res = cat0_check(u, v, w, run.tol["relative"])
        worst, ok = min(worst, res.slack), ok and res.passed
        rows.append((i, res.lhs, res.rhs, res.slack))
    run.write_csv("cat0.csv", ["triple", "lhs", "rhs", "slack"], rows)
    # the tolerance is relative to max(rhs, 1), which is 1 for these triples
    run.check("semiparallelogram law (negated min slack)", -worst, run.tol["relative"], ok)


@dataclass(frozen=True)
class _Spec:
    statement: str
    fn: Callable[[Run], None]
    tolerances: dict


EXPERIMENTS = {
    "lemma31": _Spec("inf and sup of the initial tangent equal those of u1 - u0",
                     _lemma31, {"identity": 5.0, "shift": 1e-10, "pairs": 20}),
    "dp-limit": _Spec("d_p increases to d_inf = sup of the initial tangent",
                      _dp_limit, {"monotone": 1e-10, "limit": 0.05, "identity": 5.0, "pairs": 5}),
    "flip": _Spec("the Monge-Ampere flip is an involution reversing the energy",
                  _flip, {"involution": 1e-12, "energy": 1e-10, "samples": 100}),
    "classify": _Spec("differentials have the form a xi o G - b int xi",
                      _classify, {"ab": 0.05, "g": 2.0}),
    "concat": _Spec("a geodesic joined to its mirror image is a geodesic",
                    _concat, {"relative": 1e-3, "pairs": 5}),
    "extend": _Spec("steep geodesics cannot be extended backward",
                    _extend, {"monotone": 1e-3, "bound": 1.0}),
    "symmetry": _Spec("no implemented map is an L2 symmetry",
                      _symmetry, {}),
    "subgeodesic": _Spec("small bump perturbations are subgeodesics",
                         _subgeodesic, {"slack": 1e-6}),
    "holomorphy": _Spec("commuting with i ddbar up to sign detects (anti)holomorphy",
                        _holomorphy, {"holo": 1e-3, "m": 128}),
    "cat0": _Spec("the L2 distance satisfies the CAT(0) comparison",
                  _cat0, {"relative": 1e-3, "triples": 100}),
}

DEFAULT_TOLERANCES = {k: dict(v.tolerances) for k, v in EXPERIMENTS.items()}


def run_experiment(cfg: ExperimentConfig) -> Run:
    """Run one experiment, write its artifacts and summary, return the record."""
    try:
        spec = EXPERIMENTS[cfg.experiment]
    except KeyError:
        raise ValueError(f"unknown experiment {cfg.experiment!r}; choose from "
                         f"{', '.join(EXPERIMENTS)}") from None
    run = Run(cfg, spec.statement, spec.tolerances)
    spec.fn(run)
    run.write_summary()
    return run
