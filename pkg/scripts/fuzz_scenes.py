#!/usr/bin/env python3
"""Randomized cross-validation over generated scenes.

Builds random multi-component scenes (disjoint half-planes, balls, lines,
points, or a lone ball complement), attaches random radius rules, and then
checks, per scene:

* analytic distances agree with the brute-force grid cloud (2h),
* every constructed witness is sound against the analytic distance,
* on scenes where the condition holds, witness construction never fails,
* the three-way harness verdicts agree (the consistency flag).

Exit status 0 when every scene passes; detailed lines otherwise.

Usage:
    python scripts/fuzz_scenes.py [--scenes N] [--seed S] [--harness-every K]
"""

import argparse
import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np  # noqa: E402

from extsphere.conditions import check_extended_condition, cover_radius  # noqa: E402
from extsphere.cover import construct_witness  # noqa: E402
from extsphere.proximal import RadiusField  # noqa: E402
from extsphere.sconvex import equivalence_harness  # noqa: E402
from extsphere.sets import (  # noqa: E402
    AffineSubspace,
    BallComplement,
    ClosedBall,
    ClosedSetDesc,
    FinitePointSet,
    HalfSpace,
    SetError,
    Union,
)


def random_scene(rng: np.random.Generator):
    box = ((-6.0, -6.0), (6.0, 6.0))
    if rng.random() < 0.12:
        center = rng.uniform(-1.5, 1.5, size=2)
        leaf = BallComplement(center, rng.uniform(0.8, 2.5), label="shell")
        desc = ClosedSetDesc(leaf, box=box)
        return desc
    kinds = ["halfspace", "ball", "line", "point"]
    count = int(rng.integers(1, 4))
    leaves = []
    for k in range(count):
        kind = kinds[int(rng.integers(len(kinds)))]
        label = f"{kind}{k}"
        if kind == "halfspace":
            angle = rng.uniform(0, 2 * math.pi)
            n = np.array([math.cos(angle), math.sin(angle)])
            leaves.append(HalfSpace(n, rng.uniform(-4.5, -2.0), label=label))
        elif kind == "ball":
            leaves.append(ClosedBall(rng.uniform(-3, 3, size=2), rng.uniform(0.4, 1.6), label=label))
        elif kind == "line":
            angle = rng.uniform(0, math.pi)
            d = np.array([math.cos(angle), math.sin(angle)])
            leaves.append(AffineSubspace(rng.uniform(-3, 3, size=2), [d], label=label))
        else:
            pts = rng.uniform(-4, 4, size=(int(rng.integers(1, 3)), 2))
            leaves.append(FinitePointSet(pts, label=label))
    root = leaves[0] if len(leaves) == 1 else Union(leaves)
    return ClosedSetDesc(root, box=box)


def random_radius_field(desc, rng):
    rules = {}
    for leaf in desc.leaves:
        rules[leaf.label] = "inf" if rng.random() < 0.25 else float(rng.uniform(0.3, 2.5))
    return RadiusField.from_sources(rules)


def run_one(seed: int, with_harness: bool) -> list[str]:
    rng = np.random.default_rng(seed)
    problems: list[str] = []
    for _ in range(40):
        try:
            desc = random_scene(rng)
            desc.validate()
            break
        except SetError:
            continue
    else:
        return [f"seed {seed}: could not build a valid scene"]
    rf = random_radius_field(desc, rng)

    oracle = desc.oracle
    lo, hi = desc.box
    probe = rng.uniform(lo, hi, size=(200, 2))
    analytic = desc.distance_many(probe)
    brute = oracle.distance_many(probe)
    worst = float(np.max(np.abs(analytic - brute)))
    if worst > 2 * oracle.h:
        problems.append(f"seed {seed}: grid disagreement {worst:.3g} > {2*oracle.h:.3g}")

    report = check_extended_condition(desc, rf, boundary_samples=60, seed=seed, rho_max=80.0)

    try:
        pts = desc.sample_exterior(60, seed=seed + 1)
    except SetError:
        pts = []
    failures = 0
    for i, x in enumerate(pts):
        w = construct_witness(desc, rf, x, delta_list=(0.5, 4.0), seed=i, rho_max=80.0)
        if not w.ok:
            failures += 1
            continue
        if w.ball is not None:
            c = np.asarray(w.ball.center)
            r = w.ball.radius
            rho = cover_radius(desc, rf, x)
            if abs(r - rho) > 1e-9 * (1 + rho):
                problems.append(f"seed {seed}: witness radius {r} != cover radius {rho} at {x}")
            if np.linalg.norm(x - c) > r + 1e-9 or desc.distance(c) < r - 1e-9:
                problems.append(f"seed {seed}: unsound witness at {x.tolist()}")
        else:
            for delta, clear in w.delta_checks:
                if clear < delta - 1e-9:
                    problems.append(f"seed {seed}: unsound delta witness at {x.tolist()}")
    if report.verdict == "holds" and failures:
        problems.append(
            f"seed {seed}: {failures} witness failures although the condition holds"
        )

    if with_harness:
        harness = equivalence_harness(desc, rf, boundary_samples=40, seed=seed, rho_max=80.0)
        if not harness.consistent:
            problems.append(
                f"seed {seed}: harness inconsistent {harness.verdicts} "
                f"(condition {report.verdict}, labels {[l.label for l in desc.leaves]})"
            )
    return problems


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenes", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--harness-every", type=int, default=3,
                        help="run the (slower) harness on every K-th scene")
    args = parser.parse_args()
    all_problems = []
    for k in range(args.scenes):
        seed = args.seed + k
        problems = run_one(seed, with_harness=(k % args.harness_every == 0))
        all_problems.extend(problems)
        for line in problems:
            print("PROBLEM:", line)
    print(f"checked {args.scenes} scenes: {len(all_problems)} problems")
    return 0 if not all_problems else 1


if __name__ == "__main__":
    sys.exit(main())
