"""Command-line front end: ``mabuchi-torus {run,distance,classify,holomorphy}``.

Exit status is 0 when every assertion passes, 1 on a failed assertion or an
inconclusive classification, and 2 on usage or I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .holomorphy2d import NAMED_MAPS, TorusMap2D, holomorphy_check
from .isometry import classify, parse_map
from .metric import P_SWEEP, d_infinity, distance_table
from .potential import read_potential_csv

OUT_ENV = "MABUCHI_TORUS_OUT"


class UsageError(Exception):
    pass


def _out_dir(flag: Optional[str], default: str) -> Path:
    if flag is not None:
        return Path(flag)
    return Path(os.environ.get(OUT_ENV, default))


def _parse_tol(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise UsageError(f"--tol expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--tol {name}: {value!r} is not a number") from None
    return out


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    allowed = {"n", "time_samples", "seed", "tol", "out", "steepness_sweep"}
    extra = set(cfg) - allowed
    if extra:
        raise UsageError(f"unknown config keys: {', '.join(sorted(extra))}")
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    tol = dict(cfg.get("tol", {}))
    tol.update(_parse_tol(args.tol))
    pick = lambda flag, key, default: flag if flag is not None else cfg.get(key, default)  # noqa: E731
    out = args.out if args.out is not None else cfg.get("out")
    try:
        config = ExperimentConfig(
            experiment=args.experiment,
            n=pick(args.n, "n", 1024),
            time_samples=pick(args.time_samples, "time_samples", 64),
            seed=pick(args.seed, "seed", 0),
            tol=tol,
            out=_out_dir(out, str(Path("out") / args.experiment)),
            steepness_sweep=args.steepness_sweep or bool(cfg.get("steepness_sweep", False)),
        )
        run = run_experiment(config)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"# {config.experiment}: {run.statement}")
    for a in run.assertions:
        print(f"{a.status}  {a.name}  value={a.value:.6g}  tol={a.tolerance:.6g}")
    print(f"artifacts: {config.out}")
    return 0 if run.passed else 1


def _cmd_distance(args) -> int:
    try:
        u0 = read_potential_csv(args.u0)
        u1 = read_potential_csv(args.u1)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if u0.n != u1.n:
        raise UsageError("potential files use different grids")
    rows = [(p, v) for p, v in distance_table(u0, u1, P_SWEEP)]
    rows.append(("inf", d_infinity(u0, u1)))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "value"])
        for p, v in rows:
            w.writerow([p if isinstance(p, str) else repr(p), repr(v)])
    finally:
        if args.out:
            fh.close()
    return 0


def _cmd_classify(args) -> int:
    try:
        F = parse_map(args.map, args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = classify(F, n=args.n, seed=args.seed)
    print(rep.summary())
    out = _out_dir(args.out, str(Path("out") / "classify"))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "classify_residuals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["center", "preimage", "defining_map_error"])
        for y, c in rep.g_samples:
            err = ""
            if F.g_map is not None:
                d = abs(float(F.g_map(y)) - c)
                err = repr(float(min(d, 1 - d)))
            w.writerow([repr(float(c)), repr(float(y)), err])
    return 1 if rep.inconclusive else 0


def _parse_torus_map(spec: str) -> TorusMap2D:
    parts = spec.split("+")
    maps = []
    for p in parts:
        if p in NAMED_MAPS:
            maps.append(NAMED_MAPS[p]())
        elif p.startswith("affine:"):
            try:
                nums = [float(v) for v in p[len("affine:"):].split(",")]
                if len(nums) not in (4, 6):
                    raise ValueError(f"got {len(nums)} numbers")
                A = [[nums[0], nums[1]], [nums[2], nums[3]]]
                shift = (nums[4], nums[5]) if len(nums) == 6 else (0.0, 0.0)
                maps.append(TorusMap2D(A, shift, p))
            except ValueError as exc:
                raise UsageError(f"bad affine map {p!r}: expected affine:a,b,c,d[,s1,s2] ({exc})") from None
        else:
            raise UsageError(f"unknown torus map {p!r}; named maps: {', '.join(NAMED_MAPS)}")
    g = maps[0]
    for m in maps[1:]:
        g = g @ m
    return g


def _cmd_holomorphy(args) -> int:
    g = _parse_torus_map(args.map)
    res = holomorphy_check(g, m=args.m, tol=args.tol)
    print(f"map: {res.name}\nsign: {res.label}\nR+ = {res.r_plus:.3e}  R- = {res.r_minus:.3e}  tol = {res.tol:g}")
    out = _out_dir(args.out, str(Path("out") / "holomorphy"))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "holomorphy_residuals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["probe", "r_plus", "r_minus"])
        for name, rp, rm in res.table:
            w.writerow([name, repr(rp), repr(rm)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mabuchi-torus",
                                 description="L2 geometry of invariant Kähler potentials on the torus")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment", choices=sorted(EXPERIMENTS))
    r.add_argument("--n", type=int, default=None, help="grid size, power of two (default 1024)")
    r.add_argument("--time-samples", type=int, default=None, help="time steps K (default 64)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a tolerance")
    r.add_argument("--out", default=None, help=f"output directory (else ${OUT_ENV}, else out/<exp>)")
    r.add_argument("--config", default=None, help="JSON file with the same keys; flags win")
    r.add_argument("--steepness-sweep", action="store_true", help="extend: write the (s, eps*) sweep")
    r.set_defaults(func=_cmd_run)

    d = sub.add_parser("distance", help="d_p table between two potential files")
    d.add_argument("u0")
    d.add_argument("u1")
    d.add_argument("--out", default=None, help="CSV path (default stdout)")
    d.set_defaults(func=_cmd_distance)

    c = sub.add_parser("classify", help="estimate (a, b, G) of a map")
    c.add_argument("map", help="flip | identity | pullback:s,a | compose:A+B")
    c.add_argument("--n", type=int, default=1024)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None)
    c.set_defaults(func=_cmd_classify)

    h = sub.add_parser("holomorphy", help="holomorphy sign of an affine torus map")
    h.add_argument("map", help=f"{' | '.join(NAMED_MAPS)} | affine:a,b,c,d[,s1,s2], joined by '+'")
    h.add_argument("--m", type=int, default=128)
    h.add_argument("--tol", type=float, default=1e-3)
    h.add_argument("--out", default=None)
    h.set_defaults(func=_cmd_holomorphy)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
