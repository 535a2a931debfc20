"""Experiment runner: JSON configs in, CSV/JSON results out.

Subcommands: count, volume, reduce, classify, subtorus, orbit,
index-check.  Every run writes a manifest embedding the config hash.
Exit codes: 0 success, 1 config error, 2 low-confidence numeric result,
3 enumeration guard failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import List, Optional, Sequence

from . import __version__
from .arith import euler_product
from .configs import (
    ClassifyConfig,
    ConfigError,
    CountConfig,
    IndexCheckConfig,
    OrbitConfig,
    ReduceConfig,
    SubtorusConfig,
    VolumeConfig,
    load_config,
)
from .counting import QuadratureError, curve_volume, fit_growth, theta_count
from .domain import DomainPoint, ReductionError, in_fundamental_set, reduce_point, reduction_residual
from .groups import HeisenbergElement, element_to_json, integral_order
from .orbit import (
    GuardError,
    LocalIndexCase,
    SpecialPointData,
    cross_check_index,
    local_index_bruteforce,
    sweep_orbit_bound,
)
from .rational import RatVec
from .special import (
    ComplexStructure,
    MonodromyData,
    is_weakly_special_fiber,
    smallest_subabelian,
    smallest_subtorus,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_LOW_CONFIDENCE = 2
EXIT_GUARD = 3


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x)
    return "%.12g" % float(x)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(outdir: str, subcommand: str, raw_config: dict,
                    seed: int, threads: int) -> None:
    blob = json.dumps(raw_config, sort_keys=True).encode("utf-8")
    manifest = {
        "subcommand": subcommand,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "package": "heislab",
        "version": __version__,
        "seed": seed,
        "threads": threads,
    }
    _write_json(os.path.join(outdir, "manifest.json"), manifest)


def cmd_count(raw: dict, outdir: str, threads: int) -> int:
    cfg = CountConfig.from_dict(raw)
    curve = cfg.curve.build()
    if curve.ambient not in ("torus", "abelian"):
        raise ConfigError("count.curve.ambient", "counting needs torus or abelian")
    resolution = cfg.resolution.build(curve, max(cfg.schedule))

    def run(m: int):
        return theta_count(curve, m, resolution)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, cfg.schedule))
    else:
        records = [run(m) for m in cfg.schedule]

    volumes: List[Optional[float]] = []
    for m in cfg.schedule:
        if cfg.with_volume and curve.param == "complex":
            try:
                volumes.append(curve_volume(curve, m))
            except QuadratureError:
                volumes.append(None)
        else:
            volumes.append(None)

    rows = [
        (rec.m, rec.count, rec.uncertain, vol, rec.runtime_ms)
        for rec, vol in zip(records, volumes)
    ]
    _write_csv(os.path.join(outdir, "count.csv"),
               ["M", "count", "uncertain", "volume", "runtime_ms"], rows)

    summary = {
        "schedule": list(cfg.schedule),
        "counts": [r.count for r in records],
        "uncertain": [r.uncertain for r in records],
        "low_confidence": [r.low_confidence for r in records],
    }
    if cfg.fit:
        fit = fit_growth(records)
        summary["growth_fit"] = fit.to_json()
    _write_json(os.path.join(outdir, "count_summary.json"), summary)
    if any(r.low_confidence for r in records):
        return EXIT_LOW_CONFIDENCE
    return EXIT_OK


def cmd_volume(raw: dict, outdir: str) -> int:
    cfg = VolumeConfig.from_dict(raw)
    curve = cfg.curve.build()
    rows = []
    values = []
    for m in cfg.schedule:
        vol = curve_volume(curve, m, cfg.truncate_to_fundamental, cfg.tolerance)
        rows.append((m, vol))
        values.append(vol)
    _write_csv(os.path.join(outdir, "volume.csv"), ["M", "volume"], rows)
    summary = {
        "schedule": list(cfg.schedule),
        "volumes": values,
        "truncated": cfg.truncate_to_fundamental,
    }
    if cfg.fit and all(v > 0 for v in values):
        import numpy as np

        xs = np.log([float(m) for m in cfg.schedule])
        ys = np.log(values)
        slope, intercept = np.polyfit(xs, ys, 1)
        summary["loglog_slope"] = float(slope)
        summary["loglog_intercept"] = float(intercept)
    _write_json(os.path.join(outdir, "volume_summary.json"), summary)
    return EXIT_OK


def cmd_reduce(raw: dict, outdir: str) -> int:
    cfg = ReduceConfig.from_dict(raw)
    datum = cfg.datum.build()
    results = []
    for i, pt in enumerate(cfg.points):
        try:
            x = DomainPoint.from_json(datum, pt)
            gamma, y = reduce_point(x)
            results.append({
                "index": i,
                "gamma": element_to_json(gamma),
                "reduced": y.to_json(),
                "residual": reduction_residual(gamma, x, y),
                "in_fundamental_set": in_fundamental_set(y),
            })
        except (ReductionError, ValueError) as exc:
            results.append({"index": i, "error": str(exc)})
    _write_json(os.path.join(outdir, "reduce.json"), {"points": results})
    return EXIT_OK


def cmd_classify(raw: dict, outdir: str) -> int:
    cfg = ClassifyConfig.from_dict(raw)
    cand = cfg.build()
    verdict = is_weakly_special_fiber(cand)
    _write_json(os.path.join(outdir, "classify.json"), verdict.to_json())
    return EXIT_OK


def cmd_subtorus(raw: dict, outdir: str) -> int:
    cfg = SubtorusConfig.from_dict(raw)
    data = MonodromyData(cfg.ambient_dim, cfg.generators)
    if cfg.complex_structure is not None:
        from .rational import RatMat

        lattice = smallest_subabelian(data, ComplexStructure(RatMat(cfg.complex_structure)))
        kind = "abelian"
    else:
        lattice = smallest_subtorus(data)
        kind = "torus"
    _write_json(os.path.join(outdir, "subtorus.json"),
                {"kind": kind, "lattice": lattice.to_json()})
    return EXIT_OK


def cmd_orbit(raw: dict, outdir: str, seed: int) -> int:
    cfg = OrbitConfig.from_dict(raw)
    ns, oms, euler, ells, ratios, summary = sweep_orbit_bound(cfg.n_max, cfg.b, cfg.eps)
    # exact euler_product column for small sweeps, floats otherwise
    if cfg.n_max <= 10_000:
        euler_col: List = [euler_product(int(n)) for n in ns]
    else:
        euler_col = [float(e) for e in euler]
    rows = [
        (int(n), int(o), e, float(ell), float(ratio))
        for n, o, e, ell, ratio in zip(ns, oms, euler_col, ells, ratios)
    ]
    _write_csv(os.path.join(outdir, "orbit.csv"),
               ["N", "omega", "euler_product", "ell", "ratio"], rows)

    payload = {"sweep": summary.to_json()}
    if cfg.grid_b and cfg.grid_eps:
        grid = []
        for b in cfg.grid_b:
            for eps in cfg.grid_eps:
                _, _, _, _, _, s = sweep_orbit_bound(cfg.n_max, b, eps)
                grid.append(s.to_json())
        payload["grid"] = grid
    checks = []
    for n in cfg.cross_check_orders:
        datum = _orbit_datum(cfg.level)
        w = HeisenbergElement(datum, RatVec([Fraction(1, n)]),
                              RatVec([Fraction(1, n), 0]))
        s = SpecialPointData(w, cfg.level)
        try:
            closed, product = cross_check_index(s, guard=cfg.guard)
        except GuardError as exc:
            sys.stderr.write(f"guard failure at {exc.case}\n")
            return EXIT_GUARD
        checks.append({
            "order": n,
            "closed_form": str(closed),
            "local_product": product,
            "match": closed == product,
        })
    if checks:
        payload["index_cross_checks"] = checks
    _write_json(os.path.join(outdir, "orbit_summary.json"), payload)
    return EXIT_OK


def _orbit_datum(level: int):
    from .groups import SymplecticDatum

    return SymplecticDatum(g=1, r=1, level=level)


def cmd_index_check(raw: dict, outdir: str, seed: int) -> int:
    import random

    cfg = IndexCheckConfig.from_dict(raw)
    datum = _orbit_datum(cfg.level)
    rows = []
    for p in cfg.primes:
        for n in cfg.n_values:
            for m in cfg.m_values:
                case = LocalIndexCase(p, n, m)
                u = RatVec([Fraction(1, p ** n)])
                v = RatVec([Fraction(1, p ** n), 0])
                psi_vv = datum.pairing(v, v)
                try:
                    brute = local_index_bruteforce(case, u, v, psi_vv, guard=cfg.guard)
                except GuardError as exc:
                    sys.stderr.write(f"guard failure at {exc.case}\n")
                    return EXIT_GUARD
                closed = p ** (n - 1) * (p - 1)
                rows.append((p, n, m, brute, closed, brute == closed))
    _write_csv(os.path.join(outdir, "index_check.csv"),
               ["p", "n", "m", "bruteforce", "closed_form", "match"], rows)

    rng = random.Random(seed)
    random_checks = []
    for _ in range(cfg.random_count):
        order = rng.randint(2, cfg.max_order)
        u = RatVec([Fraction(rng.randrange(1, 2 * order + 1), order)])
        v = RatVec([Fraction(rng.randrange(0, 2 * order), order), rng.randint(-2, 2)])
        w = HeisenbergElement(datum, u, v)
        s = SpecialPointData(w, cfg.level)
        try:
            closed, product = cross_check_index(s, guard=cfg.guard)
        except GuardError as exc:
            sys.stderr.write(f"guard failure at {exc.case}\n")
            return EXIT_GUARD
        random_checks.append({
            "order": integral_order(w),
            "closed_form": str(closed),
            "local_product": product,
            "match": closed == product,
        })
    payload = {
        "grid_all_match": all(r[5] for r in rows),
        "random_checks": random_checks,
        "random_all_match": all(c["match"] for c in random_checks),
    }
    _write_json(os.path.join(outdir, "index_check_summary.json"), payload)
    if not payload["grid_all_match"] or not payload["random_all_match"]:
        return EXIT_GUARD
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heislab",
        description="Exact group arithmetic, counting and classification experiments.",
    )
    parser.add_argument("--version", action="version", version=f"heislab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("count", "volume", "reduce", "classify", "subtorus", "orbit", "index-check"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    try:
        raw = load_config(args.config)
        _write_manifest(args.out, args.subcommand, raw, args.seed, args.threads)
        if args.subcommand == "count":
            return cmd_count(raw, args.out, args.threads)
        if args.subcommand == "volume":
            return cmd_volume(raw, args.out)
        if args.subcommand == "reduce":
            return cmd_reduce(raw, args.out)
        if args.subcommand == "classify":
            return cmd_classify(raw, args.out)
        if args.subcommand == "subtorus":
            return cmd_subtorus(raw, args.out)
        if args.subcommand == "orbit":
            return cmd_orbit(raw, args.out, args.seed)
        if args.subcommand == "index-check":
            return cmd_index_check(raw, args.out, args.seed)
        raise AssertionError("unreachable")
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except QuadratureError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_LOW_CONFIDENCE


if __name__ == "__main__":
    sys.exit(main())
