#!/usr/bin/env python3
"""Time IK followed by FK over random arm geometries and report the worst position error."""
import argparse
import math
import time

import numpy as np

from armvision.kinematics import ArmGeometry, PlanPoint, forward_kinematics, reachable_annulus, solve_ik


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--geometries", type=int, default=10)
    ap.add_argument("--targets", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'L1':>7} {'L2':>7} {'h1':>6} {'h2':>6} {'r_min':>7} {'r_max':>7} {'max err (cm)':>13} {'us/solve':>9}")
    grand = 0.0
    t_all = time.perf_counter()
    for _ in range(args.geometries):
        l1, l2 = rng.uniform(2, 30, 2)
        h1, h2 = rng.uniform(0, 15, 2)
        if abs(h2 - h1) >= 0.9 * (l1 + l2):
            h2 = h1
        g = ArmGeometry(l1, l2, h1, h2)
        r_min, r_max = reachable_annulus(g)
        r = np.sqrt(rng.uniform(r_min ** 2, r_max ** 2, args.targets))
        th = rng.uniform(-math.pi, math.pi, args.targets)
        worst = 0.0
        t0 = time.perf_counter()
        for x, y in zip((r * np.sin(th)).tolist(), (r * np.cos(th)).tolist()):
            if math.hypot(x, y) < 1e-6:
                continue
            plan, z = forward_kinematics(g, solve_ik(g, PlanPoint(x, y)))
            worst = max(worst, math.hypot(plan.x - x, plan.y - y, z - h2))
        dt = time.perf_counter() - t0
        grand = max(grand, worst)
        print(f"{l1:7.2f} {l2:7.2f} {h1:6.2f} {h2:6.2f} {r_min:7.2f} {r_max:7.2f} {worst:13.3e} {1e6 * dt / args.targets:9.2f}")
    print(f"overall max error {grand:.3e} cm in {time.perf_counter() - t_all:.2f} s")


if __name__ == "__main__":
    main()
