#!/usr/bin/env python3
"""Run one episode and write everything worth looking at into a directory.

Produces before.ppm / after.ppm, the five pipeline stage PGMs for the
before frame, the servo command log and the JSON report.
"""
import argparse
from pathlib import Path

from armvision import netpbm
from armvision.config import load_config, load_scene
from armvision.sim import default_scene, run_episode
from armvision.vision import STAGE_NAMES, run_pipeline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--config")
    ap.add_argument("--scene")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    cfg = load_config(args.config)
    scene = load_scene(args.scene) if args.scene else default_scene()
    ep = run_episode(scene, cfg.calibration, cfg.arm, cfg.episode, seed=args.seed)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    netpbm.write(out / "before.ppm", ep.before)
    netpbm.write(out / "after.ppm", ep.after)
    stages = run_pipeline(ep.before, cfg.episode.pipeline).stages
    for name in STAGE_NAMES:
        netpbm.write(out / f"{name}.pgm", stages[name])
    (out / "commands.txt").write_text(ep.report.command_log())
    (out / "report.json").write_text(ep.report.to_json() + "\n")
    placed = sum(o.outcome == "placed" for o in ep.report.outcomes)
    print(f"{placed}/{len(scene.pieces)} placed; wrote {len(list(out.iterdir()))} files to {out}")


if __name__ == "__main__":
    main()
