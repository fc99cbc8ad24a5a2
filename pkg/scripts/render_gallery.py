#!/usr/bin/env python3
"""Render an SVG gallery: every bundled scene with witness balls for a grid
of exterior probes and, where the condition fails, the violation points.

Usage:
    python scripts/render_gallery.py [--out DIR] [--seed N]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np  # noqa: E402

from extsphere.conditions import check_extended_condition  # noqa: E402
from extsphere.cover import construct_witness  # noqa: E402
from extsphere.scene import load_scene  # noqa: E402
from extsphere.svg import render_scene  # noqa: E402

SCENES = ("strip", "lineplane", "ball", "ballcomplement", "halfplane", "pointset")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="gallery")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--probes", type=int, default=12)
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    scene_dir = os.path.join(os.path.dirname(__file__), "..", "scenes")
    for name in SCENES:
        scene = load_scene(os.path.join(scene_dir, f"{name}.scene"))
        desc, rf, spec = scene.desc, scene.radius_field, scene.samples
        probes = list(desc.sample_exterior(args.probes, seed=args.seed))
        balls, dirs, bad = [], [], []
        for i, x in enumerate(probes):
            w = construct_witness(
                desc, rf, x, delta_list=spec.delta_list, seed=i, rho_max=spec.rho_max
            )
            if not w.ok:
                bad.append(w.x)
            elif w.ball is not None:
                balls.append((w.ball.center, w.ball.radius))
            else:
                dirs.append((np.asarray(w.x), np.asarray(w.direction), 0.2 * desc.diameter))
        report = check_extended_condition(
            desc, rf, boundary_samples=60, density=spec.density,
            seed=args.seed, rho_max=spec.rho_max,
        )
        bad.extend(rec.certificate.point for rec in report.violations())
        path = os.path.join(args.out, f"{name}.svg")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(
                render_scene(desc, witness_balls=balls, witness_directions=dirs,
                             violations=bad, probe_points=probes)
            )
        print(f"{name}: {path} (witness balls {len(balls)}, directions {len(dirs)}, "
              f"violations {len(bad)})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
