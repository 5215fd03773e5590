"""Closed-loop pick-and-place episode on a synthetic overhead frame.

One frame is captured with the arm parked upright, pieces are detected,
joint angles solved for each, and the arm relocates every piece to a slot on
the other side of the board. There is no grip sensing: a grasp holds only if
the wrist lands within ``grasp_tol`` of the piece's true centre, otherwise
the piece is dropped and stays put.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .calib import OverheadCalibration, pixel_to_world, world_to_pixel
from .kinematics import (
    ArmGeometry,
    JointSolution,
    KinematicsError,
    PlanPoint,
    forward_kinematics,
    solve_ik,
)
from .vision import DetectedObject, PipelineParams, run_pipeline

BACKGROUND = 230
PLACED, DROPPED, UNREACHABLE = "placed", "dropped", "unreachable"


class SimError(ValueError):
    pass


class PieceOutOfFrame(SimError):
    pass


class PlanSceneMismatch(SimError):
    pass


@dataclass(frozen=True)
class Board:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        bounds = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in bounds):
            raise ValueError(f"board bounds must be finite numbers, got {bounds}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"board bounds are empty: {bounds}")

    def contains(self, p: PlanPoint) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


@dataclass
class Piece:
    id: str
    shape: str  # "rectangle" | "disk"
    size_cm: float
    pose: PlanPoint
    intensity: int = 40
    height_cm: Optional[float] = None  # rectangles only; defaults to size_cm

    def __post_init__(self) -> None:
        if self.shape not in ("rectangle", "disk"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if not self.size_cm > 0:
            raise ValueError("size_cm must be positive")
        if not 0 <= self.intensity <= 255:
            raise ValueError("intensity must be in 0..255")


@dataclass
class Scene:
    board: Board
    pieces: List[Piece]
    slots: List[PlanPoint]
    rng_seed: int = 0

    def __post_init__(self) -> None:
        ids = [p.id for p in self.pieces]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate piece ids in {ids}")
        for p in self.pieces:
            if not self.board.contains(p.pose):
                raise ValueError(f"piece {p.id} at ({p.pose.x}, {p.pose.y}) is off the board")

    def piece(self, piece_id: str) -> Piece:
        for p in self.pieces:
            if p.id == piece_id:
                return p
        raise KeyError(piece_id)


# -- rendering ----------------------------------------------------------------

def _piece_extent_px(p: Piece, c: OverheadCalibration) -> Tuple[float, float, float, float]:
    u, v = world_to_pixel(c, p.pose)
    if p.shape == "disk":
        hw = hh = p.size_cm / 2 / c.scale
    else:
        hw = p.size_cm / 2 / c.scale
        hh = (p.height_cm or p.size_cm) / 2 / c.scale
    return u, v, hw, hh


def render_scene(
    s: Scene,
    c: OverheadCalibration,
    w: int = 640,
    h: int = 480,
    noise: int = 5,
    seed: Optional[int] = None,
) -> np.ndarray:
    """RGB frame: light board, filled dark pieces, seeded uniform integer noise in [-noise, noise]."""
    canvas = np.full((h, w), BACKGROUND, dtype=np.int16)
    ys, xs = np.mgrid[0:h, 0:w]
    for p in s.pieces:
        u, v, hw, hh = _piece_extent_px(p, c)
        if u - hw < 0 or u + hw > w - 1 or v - hh < 0 or v + hh > h - 1:
            raise PieceOutOfFrame(f"piece {p.id} projects outside the {w}x{h} frame")
        # small slack so exactly-aligned edges are inside despite float division
        if p.shape == "disk":
            inside = (xs - u) ** 2 + (ys - v) ** 2 <= hw * hw + 1e-6
        else:
            inside = (np.abs(xs - u) <= hw + 1e-9) & (np.abs(ys - v) <= hh + 1e-9)
        canvas[inside] = p.intensity
    frame = np.repeat(canvas[:, :, None], 3, axis=2)
    if noise > 0:
        rng = np.random.default_rng(s.rng_seed if seed is None else seed)
        frame = frame + rng.integers(-noise, noise + 1, size=frame.shape, dtype=np.int16)
    return np.clip(frame, 0, 255).astype(np.uint8)


# -- servos -------------------------------------------------------------------

@dataclass(frozen=True)
class ServoCommand:
    channel: int
    angle: float
    pulse_us: int

    def to_line(self) -> str:
        return f"ch={self.channel} angle={self.angle:.3f} pulse_us={self.pulse_us}"


def angle_to_pulse(channel: int, angle: float) -> ServoCommand:
    """Hobby-servo mapping: 0 deg -> 500 us, 180 deg -> 2500 us, clamped."""
    if not 0 <= channel <= 6:
        raise ValueError(f"channel {channel} outside 0..6")
    a = min(180.0, max(0.0, float(angle)))
    return ServoCommand(channel, a, int(math.floor(500 + a / 180.0 * 2000 + 0.5)))


@dataclass(frozen=True)
class ServoMap:
    """Joint angle -> servo angle as ``servo = joint + offset`` per channel."""

    base: Tuple[int, float] = (0, 90.0)
    shoulder: Tuple[int, float] = (1, 90.0)
    elbow: Tuple[int, float] = (2, 90.0)
    wrist: Tuple[int, float] = (3, 0.0)
    wrist_roll_channel: int = 4
    wrist_roll_deg: float = 90.0
    gripper: Tuple[int, float] = (5, 0.0)

    def servo_angles(self, s: JointSolution) -> Dict[int, float]:
        pairs = zip((self.base, self.shoulder, self.elbow, self.wrist, self.gripper), s.as_tuple())
        return {ch: q + off for (ch, off), q in pairs}

    def mappable(self, s: JointSolution) -> bool:
        return all(0.0 <= a <= 180.0 for a in self.servo_angles(s).values())


#: Arm parked upright for capture: shoulder vertical, forearm continuing straight up.
HOME = JointSolution(q1=0.0, q2=0.0, q3=-90.0, q4=90.0, q5=0.0)


# -- planning -----------------------------------------------------------------

@dataclass
class TaskStep:
    piece_id: Optional[str]
    detection: DetectedObject
    target: PlanPoint
    slot_index: int
    slot: PlanPoint
    pick: Optional[JointSolution]
    place: Optional[JointSolution]
    reason: str = ""
    gripper_actions: Tuple[str, str] = ("close", "open")

    @property
    def reachable(self) -> bool:
        return self.pick is not None and self.place is not None


@dataclass
class TaskPlan:
    steps: List[TaskStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)


def plan_task(
    detections: Sequence[DetectedObject],
    c: OverheadCalibration,
    g: ArmGeometry,
    slots: Sequence[PlanPoint],
    piece_ids: Optional[Sequence[Optional[str]]] = None,
    servo_map: ServoMap = ServoMap(),
    shuffle_seed: Optional[int] = None,
) -> TaskPlan:
    """Order detections nearest-first and pair the i-th with the i-th slot.

    ``piece_ids`` names the scene piece behind each detection (same order as
    ``detections``); without it steps are named by detection label.
    Unreachable targets stay in the plan with ``pick``/``place`` unset.
    """
    if len(slots) < len(detections):
        raise ValueError(f"{len(detections)} detections but only {len(slots)} slots")
    ids = list(piece_ids) if piece_ids is not None else [str(d.label) for d in detections]
    items = []
    for det, pid in zip(detections, ids):
        target = pixel_to_world(c, (det.centroid_x, det.centroid_y))
        items.append((math.hypot(target.x, target.y), target.x, det, pid, target))
    items.sort(key=lambda it: (it[0], it[1]))

    order = list(range(len(slots)))
    if shuffle_seed is not None:
        np.random.default_rng(shuffle_seed).shuffle(order)

    plan = TaskPlan()
    for i, (_, _, det, pid, target) in enumerate(items):
        slot = slots[order[i]]
        pick = place = None
        reason = ""
        try:
            pick = solve_ik(g, target, gripper_deg=g.gripper_open_deg)
            place = solve_ik(g, slot, gripper_deg=g.gripper_closed_deg)
        except KinematicsError as exc:
            pick = place = None
            reason = f"{type(exc).__name__}: {exc}"
        else:
            if not (servo_map.mappable(pick) and servo_map.mappable(place)):
                pick = place = None
                reason = "servo range exceeded"
        plan.steps.append(TaskStep(pid, det, target, order[i], slot, pick, place, reason))
    return plan


# -- execution ----------------------------------------------------------------

@dataclass
class StepOutcome:
    piece_id: Optional[str]
    outcome: str
    target: PlanPoint
    slot: PlanPoint
    wrist_error_cm: Optional[float]
    reason: str = ""


@dataclass
class EpisodeReport:
    outcomes: List[StepOutcome]
    final_scene: Scene
    commands: List[ServoCommand]
    waypoints: List[Tuple[str, List[ServoCommand]]]
    detection_errors_cm: Dict[str, float] = field(default_factory=dict)
    missed_pieces: List[str] = field(default_factory=list)

    def count(self, outcome: str) -> int:
        return sum(1 for o in self.outcomes if o.outcome == outcome)

    @property
    def all_placed(self) -> bool:
        return (
            not self.missed_pieces
            and len(self.outcomes) == len(self.final_scene.pieces)
            and all(o.outcome == PLACED for o in self.outcomes)
        )

    def command_log(self) -> str:
        return "".join(cmd.to_line() + "\n" for cmd in self.commands)

    def to_dict(self) -> dict:
        return {
            "steps": [
                {
                    "piece_id": o.piece_id,
                    "outcome": o.outcome,
                    "target": [o.target.x, o.target.y],
                    "slot": [o.slot.x, o.slot.y],
                    "wrist_error_cm": o.wrist_error_cm,
                    "reason": o.reason,
                }
                for o in self.outcomes
            ],
            "summary": {k: self.count(k) for k in (PLACED, DROPPED, UNREACHABLE)},
            "missed_pieces": list(self.missed_pieces),
            "detection_errors_cm": dict(self.detection_errors_cm),
            "final_scene": [
                {"id": p.id, "x_cm": p.pose.x, "y_cm": p.pose.y} for p in self.final_scene.pieces
            ],
            "command_count": len(self.commands),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _pose_commands(servo_map: ServoMap, s: JointSolution, joints: Sequence[str]) -> List[ServoCommand]:
    angles = servo_map.servo_angles(s)
    channels = {
        "base": servo_map.base[0],
        "shoulder": servo_map.shoulder[0],
        "elbow": servo_map.elbow[0],
        "wrist": servo_map.wrist[0],
        "gripper": servo_map.gripper[0],
    }
    cmds = [angle_to_pulse(channels[j], angles[channels[j]]) for j in joints]
    if "wrist" in joints:
        cmds.append(angle_to_pulse(servo_map.wrist_roll_channel, servo_map.wrist_roll_deg))
    return cmds


def _with_gripper(s: JointSolution, q5: float) -> JointSolution:
    return JointSolution(s.q1, s.q2, s.q3, s.q4, q5)


def execute(
    plan: TaskPlan,
    scene: Scene,
    g: ArmGeometry,
    grasp_tol: float = 0.5,
    servo_map: ServoMap = ServoMap(),
) -> EpisodeReport:
    """Run the plan against a copy of ``scene`` and report what happened to each piece."""
    for step in plan.steps:
        if step.piece_id is not None and step.piece_id not in {p.id for p in scene.pieces}:
            raise PlanSceneMismatch(f"plan references unknown piece {step.piece_id!r}")

    world = copy.deepcopy(scene)
    home = _with_gripper(HOME, g.gripper_open_deg)
    arm = ("shoulder", "elbow", "wrist")
    waypoints: List[Tuple[str, List[ServoCommand]]] = []
    outcomes: List[StepOutcome] = []

    def emit(name: str, cmds: List[ServoCommand]) -> None:
        waypoints.append((name, cmds))

    for step in plan.steps:
        if not step.reachable:
            outcomes.append(StepOutcome(step.piece_id, UNREACHABLE, step.target, step.slot, None, step.reason))
            continue
        pick, place = step.pick, step.place
        closed = _with_gripper(pick, g.gripper_closed_deg)
        lift = JointSolution(pick.q1, home.q2, home.q3, home.q4, g.gripper_closed_deg)

        emit("home", _pose_commands(servo_map, home, ("base",) + arm + ("gripper",)))
        emit("rotate", _pose_commands(servo_map, pick, ("base",)))
        emit("reach", _pose_commands(servo_map, pick, arm))
        emit("close", _pose_commands(servo_map, closed, ("gripper",)))
        emit("lift", _pose_commands(servo_map, lift, arm))
        emit("slot", _pose_commands(servo_map, place, ("base",) + arm))
        emit("open", _pose_commands(servo_map, _with_gripper(place, g.gripper_open_deg), ("gripper",)))

        wrist, _ = forward_kinematics(g, pick)
        piece = world.piece(step.piece_id) if step.piece_id is not None else None
        if piece is None:
            outcomes.append(StepOutcome(None, DROPPED, step.target, step.slot, None, "no piece under gripper"))
            continue
        err = wrist.distance_to(piece.pose)
        if err <= grasp_tol:
            piece.pose = step.slot
            outcomes.append(StepOutcome(step.piece_id, PLACED, step.target, step.slot, err))
        else:
            outcomes.append(
                StepOutcome(step.piece_id, DROPPED, step.target, step.slot, err, "grasp missed piece centre")
            )
    if waypoints:
        emit("home", _pose_commands(servo_map, home, ("base",) + arm + ("gripper",)))

    commands = [cmd for _, cmds in waypoints for cmd in cmds]
    return EpisodeReport(outcomes, world, commands, waypoints)


# -- full episode -------------------------------------------------------------

def match_detections(
    detections: Sequence[DetectedObject], scene: Scene, c: OverheadCalibration
) -> List[Optional[str]]:
    """Ground-truth bookkeeping: greedy nearest pairing of detections to scene pieces."""
    pairs = []
    for i, det in enumerate(detections):
        world = pixel_to_world(c, (det.centroid_x, det.centroid_y))
        for p in scene.pieces:
            pairs.append((world.distance_to(p.pose), i, p.id))
    pairs.sort(key=lambda t: (t[0], t[1], t[2]))
    ids: List[Optional[str]] = [None] * len(detections)
    used = set()
    for _, i, pid in pairs:
        if ids[i] is None and pid not in used:
            ids[i] = pid
            used.add(pid)
    return ids


@dataclass(frozen=True)
class EpisodeSettings:
    width: int = 640
    height: int = 480
    noise: int = 5
    grasp_tol: float = 0.5
    shuffle_slots: bool = False
    pipeline: PipelineParams = PipelineParams()
    servo_map: ServoMap = ServoMap()


@dataclass
class Episode:
    report: EpisodeReport
    plan: TaskPlan
    detections: List[DetectedObject]
    before: np.ndarray
    after: np.ndarray


def run_episode(
    scene: Scene,
    c: OverheadCalibration,
    g: ArmGeometry,
    settings: EpisodeSettings = EpisodeSettings(),
    seed: Optional[int] = None,
) -> Episode:
    """Render, detect, plan and execute one episode; ``seed`` overrides the scene's."""
    seed = scene.rng_seed if seed is None else seed
    before = render_scene(scene, c, settings.width, settings.height, settings.noise, seed)
    detections = run_pipeline(before, settings.pipeline).objects
    ids = match_detections(detections, scene, c)
    plan = plan_task(
        detections,
        c,
        g,
        scene.slots,
        piece_ids=ids,
        servo_map=settings.servo_map,
        shuffle_seed=seed if settings.shuffle_slots else None,
    )
    report = execute(plan, scene, g, settings.grasp_tol, settings.servo_map)

    for det, pid in zip(detections, ids):
        if pid is not None:
            truth = scene.piece(pid).pose
            report.detection_errors_cm[pid] = pixel_to_world(c, (det.centroid_x, det.centroid_y)).distance_to(truth)
    report.missed_pieces = sorted(set(p.id for p in scene.pieces) - set(i for i in ids if i is not None))
    after = render_scene(report.final_scene, c, settings.width, settings.height, settings.noise, seed + 1)
    return Episode(report, plan, detections, before, after)


def default_scene(seed: int = 7) -> Scene:
    """Four pieces on the left of the board, four free slots on the right."""
    board = Board(x_min=-30.0, x_max=30.0, y_min=2.0, y_max=45.0)
    pieces = [
        Piece("A", "disk", 4.0, PlanPoint(-14.23, 22.37), 40),
        Piece("B", "rectangle", 3.5, PlanPoint(-8.61, 30.12), 55),
        Piece("C", "disk", 3.0, PlanPoint(-19.47, 14.86), 30),
        Piece("D", "rectangle", 4.0, PlanPoint(-6.38, 16.54), 60, height_cm=3.0),
    ]
    slots = [
        PlanPoint(8.0, 16.0),
        PlanPoint(14.0, 22.0),
        PlanPoint(9.0, 29.0),
        PlanPoint(18.0, 13.0),
    ]
    return Scene(board, pieces, slots, seed)


def default_calibration() -> OverheadCalibration:
    return OverheadCalibration(base_px_x=320.0, base_px_y=470.0, scale=0.1, axis_flip_y=True)


def default_geometry() -> ArmGeometry:
    return ArmGeometry(
        link_shoulder=18.0,
        link_forearm=16.0,
        base_height=8.0,
        wrist_height_at_target=11.0,
        gripper_open_deg=60.0,
        gripper_closed_deg=10.0,
    )


def jittered_scene(seed: int, jitter_cm: float = 2.0, base: Optional[Scene] = None) -> Scene:
    """``base`` (default scene if omitted) with each piece moved by a seeded uniform offset."""
    base = base or default_scene()
    rng = np.random.default_rng(seed)
    pieces = []
    for p in base.pieces:
        dx, dy = rng.uniform(-jitter_cm, jitter_cm, 2)
        pieces.append(
            Piece(p.id, p.shape, p.size_cm, PlanPoint(p.pose.x + dx, p.pose.y + dy), p.intensity, p.height_cm)
        )
    return Scene(base.board, pieces, list(base.slots), seed)
