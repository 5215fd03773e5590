"""Vision-guided pick-and-place arm: closed-form IK, centroid detection, episode simulator."""
from .calib import OverheadCalibration, pixel_to_world, world_to_pixel
from .kinematics import (
    ArmGeometry,
    DegenerateTarget,
    EmptyWorkspace,
    JointSolution,
    PlanPoint,
    TargetUnreachable,
    forward_kinematics,
    reachable_annulus,
    solve_ik,
)
from .sim import Scene, run_episode
from .vision import DetectedObject, PipelineParams, RegionOfInterest, detect_objects

__all__ = [
    "ArmGeometry",
    "DegenerateTarget",
    "DetectedObject",
    "EmptyWorkspace",
    "JointSolution",
    "OverheadCalibration",
    "PipelineParams",
    "PlanPoint",
    "RegionOfInterest",
    "Scene",
    "TargetUnreachable",
    "detect_objects",
    "forward_kinematics",
    "pixel_to_world",
    "reachable_annulus",
    "run_episode",
    "solve_ik",
    "world_to_pixel",
]
