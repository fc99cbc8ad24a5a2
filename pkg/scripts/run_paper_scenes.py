#!/usr/bin/env python3
"""Run every bundled scene through the full pipeline and print a summary.

For each scene: the extended-condition check, the lower-semicontinuity audit
of the cover radius, a sampled union-of-balls verification with constructed
witnesses, and the three-way equivalence harness.

Usage:
    python scripts/run_paper_scenes.py [--seed N] [--samples N]
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from extsphere.conditions import (  # noqa: E402
    audit_lower_semicontinuity,
    check_extended_condition,
    cover_radius,
    verify_union_of_balls,
)
from extsphere.cover import construct_witness  # noqa: E402
from extsphere.scene import load_scene  # noqa: E402
from extsphere.sconvex import equivalence_harness  # noqa: E402

SCENES = ("strip", "lineplane", "ball", "ballcomplement", "halfplane", "pointset")


def run_scene(path: str, seed: int, samples: int) -> dict:
    scene = load_scene(path)
    desc, rf, spec = scene.desc, scene.radius_field, scene.samples
    t0 = time.perf_counter()
    cond = check_extended_condition(
        desc, rf, boundary_samples=samples, density=spec.density,
        seed=seed, rho_max=spec.rho_max,
    )
    lsc = audit_lower_semicontinuity(desc, rf, rays=spec.rays, random_rays=10, seed=seed)
    balls = verify_union_of_balls(
        desc,
        rho_fn=lambda x: cover_radius(desc, rf, x),
        witness_fn=lambda x: construct_witness(
            desc, rf, x, delta_list=spec.delta_list, seed=seed, rho_max=spec.rho_max
        ),
        samples=80,
        delta_list=spec.delta_list,
        seed=seed,
    )
    harness = equivalence_harness(
        desc, rf, boundary_samples=min(samples, 60), density=spec.density,
        seed=seed, rho_max=spec.rho_max,
    )
    return {
        "name": scene.name,
        "condition": cond.verdict,
        "lsc": lsc.verdict,
        "flags": len(lsc.discontinuities()),
        "cover": balls.verdict,
        "harness": "/".join(harness.verdicts[k] for k in ("i", "ii", "iii")),
        "consistent": harness.consistent,
        "seconds": time.perf_counter() - t0,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--samples", type=int, default=120)
    args = parser.parse_args()
    scene_dir = os.path.join(os.path.dirname(__file__), "..", "scenes")
    rows = []
    for name in SCENES:
        rows.append(run_scene(os.path.join(scene_dir, f"{name}.scene"), args.seed, args.samples))
    header = f"{'scene':<16}{'condition':<11}{'lsc':<7}{'jumps':<7}{'cover':<8}{'harness':<21}{'consistent':<11}{'s':>6}"
    print(header)
    print("-" * len(header))
    ok = True
    for row in rows:
        print(
            f"{row['name']:<16}{row['condition']:<11}{row['lsc']:<7}{row['flags']:<7}"
            f"{row['cover']:<8}{row['harness']:<21}{str(row['consistent']):<11}{row['seconds']:>6.1f}"
        )
        ok &= row["consistent"] and row["lsc"] == "holds" and row["cover"] == "holds"
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
