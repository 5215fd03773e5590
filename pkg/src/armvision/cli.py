"""Command-line front end: ``solve``, ``detect`` and ``simulate``.

stdout carries only machine-readable records; diagnostics go to stderr.

Exit codes:
    0   success
    1   simulate: at least one piece not placed
    2   target unreachable (or empty workspace)
    3   degenerate target (object on the base axis)
    64  usage or config error
    65  malformed image or scene file, piece outside the frame
    66  input file missing or unreadable
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import netpbm
from .config import Config, ConfigError, load_config, load_scene
from .kinematics import DegenerateTarget, KinematicsError, PlanPoint, solve_ik
from .sim import PieceOutOfFrame, default_scene, run_episode
from .vision import STAGE_NAMES, VisionError, run_pipeline

EXIT_OK = 0
EXIT_NOT_PLACED = 1
EXIT_UNREACHABLE = 2
EXIT_DEGENERATE = 3
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_NOINPUT = 66


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means "unreachable" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _die(code: int, message: str) -> int:
    print(f"armvision: {message}", file=sys.stderr)
    return code


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=default, help="arm/calibration/pipeline INI file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="armvision", description="Vision-guided pick-and-place arm: IK, detection, simulation.")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="joint angles for a plan target (cm, base frame, +y forward)")
    _add_common(p, suppress=True)
    p.add_argument("x_cm", type=float)
    p.add_argument("y_cm", type=float)

    p = sub.add_parser("detect", help="detect objects in a PPM/PGM frame")
    _add_common(p, suppress=True)
    p.add_argument("image", help="binary PPM (P6) or PGM (P5) file")
    p.add_argument("--dump-stages", action="store_true", help="write gray/equalized/binary/edges/opened PGMs")
    p.add_argument("--out-dir", default=".", help="directory for stage dumps (default: .)")

    p = sub.add_parser("simulate", help="run one pick-and-place episode and print its report")
    _add_common(p, suppress=True)
    p.add_argument("scene", nargs="?", help="scene INI file (default: built-in 4-piece scene)")
    p.add_argument("--seed", type=int, help="noise seed (default: the scene's seed)")
    p.add_argument("--frames-out", metavar="DIR", help="write before.ppm and after.ppm here")
    p.add_argument("--grasp-tol", type=float, metavar="CM", help="override grasp tolerance")
    p.add_argument("--noise", type=int, metavar="N", help="override pixel noise amplitude")
    p.add_argument("--command-log", metavar="PATH", help="write servo command log here")
    return parser


def cmd_solve(cfg: Config, x_cm: float, y_cm: float) -> int:
    try:
        sol = solve_ik(cfg.arm, PlanPoint(x_cm, y_cm))
    except DegenerateTarget as exc:
        return _die(EXIT_DEGENERATE, f"DegenerateTarget: {exc}")
    except KinematicsError as exc:
        return _die(EXIT_UNREACHABLE, f"TargetUnreachable: target ({x_cm}, {y_cm}) is unreachable: {exc}")
    except ValueError as exc:
        return _die(EXIT_USAGE, str(exc))
    print(sol.to_json())
    return EXIT_OK


def cmd_detect(cfg: Config, image: str, dump_stages: bool = False, out_dir: str = ".") -> int:
    try:
        frame = netpbm.read(image)
    except OSError as exc:
        return _die(EXIT_NOINPUT, f"cannot read {image}: {exc.strerror}")
    except netpbm.NetpbmError as exc:
        return _die(EXIT_DATAERR, f"{image}: {exc}")
    try:
        result = run_pipeline(frame, cfg.episode.pipeline)
    except VisionError as exc:
        return _die(EXIT_DATAERR, f"{image}: {exc}")
    for obj in result.objects:
        print(obj.to_json())
    if dump_stages:
        os.makedirs(out_dir, exist_ok=True)
        for name in STAGE_NAMES:
            netpbm.write(Path(out_dir) / f"{name}.pgm", result.stages[name])
    return EXIT_OK


def cmd_simulate(
    cfg: Config,
    scene_path: Optional[str] = None,
    seed: Optional[int] = None,
    frames_out: Optional[str] = None,
    grasp_tol: Optional[float] = None,
    noise: Optional[int] = None,
    command_log: Optional[str] = None,
) -> int:
    try:
        scene = load_scene(scene_path) if scene_path else default_scene()
    except ConfigError as exc:
        code = EXIT_NOINPUT if not os.path.exists(scene_path) else EXIT_DATAERR
        return _die(code, str(exc))
    settings = cfg.episode
    if grasp_tol is not None:
        if grasp_tol < 0:
            return _die(EXIT_USAGE, "--grasp-tol must be >= 0")
        settings = dataclasses.replace(settings, grasp_tol=grasp_tol)
    if noise is not None:
        if noise < 0:
            return _die(EXIT_USAGE, "--noise must be >= 0")
        settings = dataclasses.replace(settings, noise=noise)
    try:
        episode = run_episode(scene, cfg.calibration, cfg.arm, settings, seed)
    except (PieceOutOfFrame, VisionError) as exc:
        return _die(EXIT_DATAERR, f"{type(exc).__name__}: {exc}")
    except ValueError as exc:
        return _die(EXIT_DATAERR, str(exc))

    report = episode.report
    sys.stdout.write(report.to_json() + "\n")
    if frames_out:
        os.makedirs(frames_out, exist_ok=True)
        netpbm.write(Path(frames_out) / "before.ppm", episode.before)
        netpbm.write(Path(frames_out) / "after.ppm", episode.after)
    if command_log:
        Path(command_log).write_text(report.command_log())
    if not report.all_placed:
        summary = ", ".join(f"{o.piece_id}={o.outcome}" for o in report.outcomes)
        missed = f"; missed {report.missed_pieces}" if report.missed_pieces else ""
        return _die(EXIT_NOT_PLACED, f"not every piece was placed: {summary}{missed}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _die(EXIT_USAGE, f"config error: {exc}")
    if args.command == "solve":
        return cmd_solve(cfg, args.x_cm, args.y_cm)
    if args.command == "detect":
        return cmd_detect(cfg, args.image, args.dump_stages, args.out_dir)
    return cmd_simulate(
        cfg, args.scene, args.seed, args.frames_out, args.grasp_tol, args.noise, args.command_log
    )


if __name__ == "__main__":
    sys.exit(main())
