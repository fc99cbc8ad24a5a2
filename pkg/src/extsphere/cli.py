"""Batch front-end: parse a scene file, run checkers, emit reports.

Subcommands: check (extended condition), cover (witness balls for probe
points), sconvex (S-convexity against a chosen envelope), harness (the
three-way equivalence), report (everything combined).  Exit status 0 means
every requested check holds, 1 means a violation or failed witness, 2 means
a usage or scene error.  Identical scene and seed reproduce the same report
digest; timings are reported but excluded from the digest.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import conditions as _conditions
from . import cover as _cover
from . import sconvex as _sconvex
from .geom import GeometryError
from .scene import SceneError, Scene, _Tokens, _parse_value, load_scene
from .svg import render_scene


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return "inf" if math.isinf(value) else value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _report_digest(payload: dict) -> str:
    body = {k: v for k, v in payload.items() if k != "timings"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def _parse_point_list(text: str):
    tok = _Tokens(text.replace(";", " "), 1)
    points = []
    while not tok.done():
        points.append(_parse_value(tok))
    return points


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("scene", help="scene file path")
    parser.add_argument("--seed", type=int, default=None, help="override the scene seed")
    parser.add_argument("--samples", type=int, default=None, help="boundary sample count")
    parser.add_argument("--density", type=int, default=None, help="direction sweep density")
    parser.add_argument("--rho-max", type=float, default=None, help="realization radius cap")
    parser.add_argument("--delta-list", default=None, help="deltas for infinite witnesses")
    parser.add_argument("--svg", default=None, help="write an SVG overlay to this path")
    parser.add_argument("--json-report", default=None, help="write the JSON report to this path")


def _effective(scene: Scene, args):
    spec = scene.samples
    seed = spec.seed if args.seed is None else args.seed
    samples = spec.boundary_samples if args.samples is None else args.samples
    density = spec.density if args.density is None else args.density
    rho_max = spec.rho_max if args.rho_max is None else args.rho_max
    deltas = spec.delta_list
    if args.delta_list is not None:
        deltas = tuple(float(v) for v in args.delta_list.replace(",", " ").split())
    return seed, samples, density, rho_max, deltas


def _emit(scene: Scene, payload: dict, lines: list[str], args) -> None:
    payload["digest"] = _report_digest(payload)
    print(f"scene: {scene.name} (report digest {payload['digest']})")
    for line in lines:
        print(line)
    if args.json_report:
        with open(args.json_report, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
        print(f"json report: {args.json_report}")


def _run_check(scene: Scene, args) -> int:
    seed, samples, density, rho_max, _ = _effective(scene, args)
    t0 = time.perf_counter()
    report = _conditions.check_extended_condition(
        scene.desc, scene.radius_field, boundary_samples=samples, density=density,
        seed=seed, rho_max=rho_max,
    )
    elapsed = time.perf_counter() - t0
    counts = report.counts()
    lines = [
        f"check: {report.verdict} ({counts['total']} samples, "
        f"{counts['violations']} violations, {counts['marginal']} marginal, "
        f"{counts['unclassified']} unclassified)",
    ]
    for rec in report.violations()[:8]:
        cert = rec.certificate
        lines.append(
            f"  violation at {tuple(round(v, 9) for v in cert.point)} "
            f"dir {tuple(round(v, 6) for v in cert.direction)} "
            f"realization {cert.realization:.9g} < required {cert.required:.9g}"
        )
    payload = {
        "command": "check", "scene": scene.digest(), "seed": seed,
        "verdict": report.verdict, "report": _jsonable(report),
        "timings": {"check_s": elapsed},
    }
    _emit(scene, payload, lines, args)
    if args.svg:
        viols = [rec.certificate.point for rec in report.violations()]
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(render_scene(scene.desc, violations=viols))
        print(f"svg: {args.svg}")
    return 0 if report.verdict in ("holds", "vacuous") else 1


def _run_cover(scene: Scene, args) -> int:
    seed, samples, density, rho_max, deltas = _effective(scene, args)
    points = [np.asarray(p, dtype=float) for p in scene.samples.points]
    if args.points:
        points.extend(np.asarray(p, dtype=float) for p in _parse_point_list(args.points))
    if not points:
        points = list(scene.desc.sample_exterior(args.random_points, seed=seed))
    t0 = time.perf_counter()
    witnesses = []
    failures = 0
    lines = []
    for x in points:
        w = _cover.construct_witness(
            scene.desc, scene.radius_field, x, delta_list=deltas,
            density=density, seed=seed, rho_max=rho_max,
        )
        witnesses.append(w)
        if w.ball is not None:
            lines.append(
                f"cover: x={tuple(round(v, 9) for v in w.x)} case {w.case_tag} "
                f"ball center {tuple(round(float(c), 9) for c in w.ball.center)} "
                f"radius {w.ball.radius:.9g} ok={w.ok}"
            )
        else:
            lines.append(
                f"cover: x={tuple(round(v, 9) for v in w.x)} case {w.case_tag} "
                f"direction {tuple(round(v, 6) for v in (w.direction or ()))} ok={w.ok}"
            )
        failures += 0 if w.ok else 1
    elapsed = time.perf_counter() - t0
    lines.append(f"cover: {len(points) - failures}/{len(points)} witnesses verified")
    payload = {
        "command": "cover", "scene": scene.digest(), "seed": seed,
        "verdict": "holds" if failures == 0 else "fails",
        "witnesses": _jsonable(witnesses), "timings": {"cover_s": elapsed},
    }
    _emit(scene, payload, lines, args)
    if args.svg:
        balls = [(w.ball.center, w.ball.radius) for w in witnesses if w.ball is not None]
        dirs = [
            (np.asarray(w.x), np.asarray(w.direction), 0.25 * scene.desc.diameter)
            for w in witnesses
            if w.direction is not None
        ]
        bad = [w.x for w in witnesses if not w.ok]
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(
                render_scene(scene.desc, witness_balls=balls, witness_directions=dirs,
                             violations=bad, probe_points=[w.x for w in witnesses])
            )
        print(f"svg: {args.svg}")
    return 0 if failures == 0 else 1


def _run_sconvex(scene: Scene, args) -> int:
    seed, samples, density, rho_max, _ = _effective(scene, args)
    ctx = _sconvex.EnvelopeContext(scene.desc, scene.radius_field, density, rho_max)
    membership = {
        "full": lambda p: _sconvex.in_full_envelope(ctx, p),
        "capped": lambda p: _sconvex.in_capped_envelope(ctx, p),
        "space": lambda p: True,
    }[args.envelope]
    t0 = time.perf_counter()
    report = _sconvex.is_s_convex(
        scene.desc, membership, scene.radius_field,
        boundary_samples=min(samples, 120), density=density, seed=seed,
        rho_max=rho_max, ctx=ctx,
    )
    elapsed = time.perf_counter() - t0
    lines = [
        f"sconvex[{args.envelope}]: {report.verdict} "
        f"({report.segments_tested} segments, {report.pairs_tested} pairs)"
    ]
    for v in report.violations[:4]:
        lines.append(
            f"  crossing at {tuple(round(c, 6) for c in v.point)} via {v.detector}: "
            f"bases {tuple(round(c, 6) for c in v.base_a)} / {tuple(round(c, 6) for c in v.base_b)}"
        )
    payload = {
        "command": "sconvex", "scene": scene.digest({"envelope": args.envelope}),
        "seed": seed, "verdict": report.verdict, "report": _jsonable(report),
        "timings": {"sconvex_s": elapsed},
    }
    _emit(scene, payload, lines, args)
    if args.svg:
        segs = []
        viols = []
        for v in report.violations:
            segs.append((v.base_a, v.dir_a, v.t_a))
            segs.append((v.base_b, v.dir_b, v.t_b))
            viols.append(v.point)
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(render_scene(scene.desc, normal_segments=segs, violations=viols))
        print(f"svg: {args.svg}")
    return 0 if report.verdict == "holds" else 1


def _run_harness(scene: Scene, args) -> int:
    seed, samples, density, rho_max, _ = _effective(scene, args)
    t0 = time.perf_counter()
    report = _sconvex.equivalence_harness(
        scene.desc, scene.radius_field, boundary_samples=samples,
        density=density, seed=seed, rho_max=rho_max,
    )
    elapsed = time.perf_counter() - t0
    v = report.verdicts
    lines = [
        f"harness: i={v['i']} ii={v['ii']} iii={v['iii']} consistent={report.consistent}",
        f"  iii parts: convexity={v['iii_parts']['capped_convexity']} "
        f"unique-projection={v['iii_parts']['unique_projection']} "
        f"thin-margin-open={v['iii_parts']['thin_margin_open']}",
    ]
    for u in report.uniqueness.violations[:3]:
        lines.append(
            f"  envelope boundary point {tuple(round(c, 6) for c in u.point)} "
            f"has {u.multiplicity} projections"
        )
    payload = {
        "command": "harness", "scene": scene.digest(), "seed": seed,
        "verdicts": _jsonable(v), "consistent": report.consistent,
        "condition": _jsonable(report.condition),
        "uniqueness": _jsonable(report.uniqueness),
        "timings": {"harness_s": elapsed},
    }
    _emit(scene, payload, lines, args)
    all_hold = all(val == "holds" for val in (v["i"], v["ii"], v["iii"]))
    return 0 if all_hold else 1


def _run_report(scene: Scene, args) -> int:
    seed, samples, density, rho_max, deltas = _effective(scene, args)
    t0 = time.perf_counter()
    condition = _conditions.check_extended_condition(
        scene.desc, scene.radius_field, boundary_samples=samples, density=density,
        seed=seed, rho_max=rho_max,
    )
    lsc = _conditions.audit_lower_semicontinuity(
        scene.desc, scene.radius_field, rays=scene.samples.rays, seed=seed,
    )
    harness = _sconvex.equivalence_harness(
        scene.desc, scene.radius_field, boundary_samples=min(samples, 120),
        density=density, seed=seed, rho_max=rho_max,
    )
    cover_rep = _conditions.verify_union_of_balls(
        scene.desc,
        rho_fn=lambda x: _conditions.cover_radius(scene.desc, scene.radius_field, x),
        witness_fn=lambda x: _cover.construct_witness(
            scene.desc, scene.radius_field, x, delta_list=deltas,
            density=density, seed=seed, rho_max=rho_max,
        ),
        samples=min(100, scene.samples.probes),
        delta_list=deltas,
        seed=seed,
    )
    elapsed = time.perf_counter() - t0
    v = harness.verdicts
    lines = [
        f"condition: {condition.verdict}",
        f"lsc audit: {lsc.verdict} ({len(lsc.discontinuities())} discontinuities flagged)",
        f"union of balls: {cover_rep.verdict} ({cover_rep.checked} points)",
        f"harness: i={v['i']} ii={v['ii']} iii={v['iii']} consistent={harness.consistent}",
    ]
    payload = {
        "command": "report", "scene": scene.digest(), "seed": seed,
        "verdicts": {
            "condition": condition.verdict, "lsc": lsc.verdict,
            "union_of_balls": cover_rep.verdict, **_jsonable(v),
        },
        "consistent": harness.consistent,
        "timings": {"report_s": elapsed},
    }
    _emit(scene, payload, lines, args)
    ok = (
        condition.verdict in ("holds", "vacuous")
        and lsc.verdict == "holds"
        and cover_rep.verdict == "holds"
        and all(val == "holds" for val in (v["i"], v["ii"], v["iii"]))
    )
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extsphere",
        description="Exterior sphere condition checks, witness covers, and convexity harnesses",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_check = sub.add_parser("check", help="check the extended exterior sphere condition")
    _add_common(p_check)
    p_cover = sub.add_parser("cover", help="construct witness balls for probe points")
    _add_common(p_cover)
    p_cover.add_argument("--points", default=None, help="probe points, e.g. \"(0,1) (2,3)\"")
    p_cover.add_argument("--random-points", type=int, default=20,
                         help="random exterior probes when none are given")
    p_sconvex = sub.add_parser("sconvex", help="S-convexity check")
    _add_common(p_sconvex)
    p_sconvex.add_argument("--envelope", choices=("full", "capped", "space"), default="full")
    p_harness = sub.add_parser("harness", help="three-way equivalence harness")
    _add_common(p_harness)
    p_report = sub.add_parser("report", help="combined report")
    _add_common(p_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scene = load_scene(args.scene)
    except (SceneError, OSError) as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return 2
    runner = {
        "check": _run_check,
        "cover": _run_cover,
        "sconvex": _run_sconvex,
        "harness": _run_harness,
        "report": _run_report,
    }[args.command]
    try:
        return runner(scene, args)
    except (SceneError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
