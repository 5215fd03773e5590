#!/usr/bin/env python3
"""Placement rate over many noise seeds, optionally with jittered piece poses.

    python scripts/monte_carlo.py --seeds 200 --jitter 2.0 --grasp-tol 0.5
"""
import argparse
import collections
import dataclasses
import json
import time

from armvision.config import load_config, load_scene
from armvision.sim import DROPPED, PLACED, UNREACHABLE, default_scene, jittered_scene, run_episode


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", help="INI config (default: built-in)")
    ap.add_argument("--scene", help="scene INI (default: built-in 4-piece scene)")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--jitter", type=float, default=0.0, help="re-draw piece poses within +/- this many cm per seed")
    ap.add_argument("--grasp-tol", type=float, help="override grasp tolerance (cm)")
    ap.add_argument("--noise", type=int, help="override pixel noise amplitude")
    args = ap.parse_args()

    cfg = load_config(args.config)
    base = load_scene(args.scene) if args.scene else default_scene()
    settings = cfg.episode
    if args.grasp_tol is not None:
        settings = dataclasses.replace(settings, grasp_tol=args.grasp_tol)
    if args.noise is not None:
        settings = dataclasses.replace(settings, noise=args.noise)

    tally = collections.Counter()
    det_err = []
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        scene = jittered_scene(seed, args.jitter, base) if args.jitter > 0 else base
        rep = run_episode(scene, cfg.calibration, cfg.arm, settings, seed=seed).report
        for outcome in (PLACED, DROPPED, UNREACHABLE):
            tally[outcome] += rep.count(outcome)
        tally["missed"] += len(rep.missed_pieces)
        det_err.extend(rep.detection_errors_cm.values())
    total = args.seeds * len(base.pieces)
    summary = {
        "seeds": args.seeds,
        "pieces": total,
        **{k: tally[k] for k in (PLACED, DROPPED, UNREACHABLE, "missed")},
        "placement_rate": tally[PLACED] / total if total else None,
        "max_detection_error_cm": max(det_err, default=None),
        "seconds": round(time.perf_counter() - t0, 3),
    }
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
