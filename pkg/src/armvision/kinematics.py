"""Closed-form geometric inverse kinematics for a 5-revolute-joint arm.

The solver splits the problem in two planes:

* plan view (top-down): base rotation ``q1`` from the object's offset,
* vertical plane through the arm: shoulder ``q2``, elbow ``q3`` and wrist
  ``q4`` from the law of cosines on the triangle (shoulder link, forearm,
  shoulder-to-wrist hypotenuse) and the right triangle (plan reach, height
  gap, hypotenuse).

Lengths are centimetres and angles degrees on the public surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

#: Band around +/-1 inside which acos arguments are clamped instead of rejected.
ACOS_TOLERANCE = 1e-9
#: Height gaps below this are treated as coplanar shoulder and wrist.
HEIGHT_EPS = 1e-9


class KinematicsError(ValueError):
    """Base class for solver failures."""


class TargetUnreachable(KinematicsError):
    """The target lies outside the arm's reachable workspace."""


class DegenerateTarget(KinematicsError):
    """The target sits on the base axis, where the base angle is undefined."""


class EmptyWorkspace(KinematicsError):
    """The height gap exceeds the total arm length; nothing is reachable."""


class JointLimitExceeded(KinematicsError):
    """A solved joint angle falls outside its configured limits."""


@dataclass(frozen=True)
class ArmGeometry:
    link_shoulder: float
    link_forearm: float
    base_height: float = 0.0
    wrist_height_at_target: float = 0.0
    gripper_open_deg: float = 60.0
    gripper_closed_deg: float = 10.0

    def __post_init__(self) -> None:
        if not (self.link_shoulder > 0 and self.link_forearm > 0):
            raise ValueError("link lengths must be positive")
        if self.base_height < 0 or self.wrist_height_at_target < 0:
            raise ValueError("heights must be non-negative")

    @property
    def height_gap(self) -> float:
        """Signed wrist height minus base height."""
        return self.wrist_height_at_target - self.base_height


@dataclass(frozen=True)
class PlanPoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite plan point ({self.x}, {self.y})")

    def distance_to(self, other: "PlanPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class PlanTriangle:
    leg_y: float
    leg_x: float
    reach: float


@dataclass(frozen=True)
class VerticalTriangleAngles:
    a: float
    b: float
    c: float
    d: float
    e: float


@dataclass(frozen=True)
class JointLimits:
    min_deg: float = -180.0
    max_deg: float = 180.0

    def contains(self, angle_deg: float) -> bool:
        return self.min_deg <= angle_deg <= self.max_deg


@dataclass(frozen=True)
class JointSolution:
    q1: float
    q2: float
    q3: float
    q4: float
    q5: float

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.q1, self.q2, self.q3, self.q4, self.q5)

    def to_json(self) -> str:
        """Single-line JSON record with six decimals per angle."""
        fields = ",".join(
            f'"{name}":{_fmt6(value)}'
            for name, value in zip(("q1", "q2", "q3", "q4", "q5"), self.as_tuple())
        )
        return "{" + fields + "}"


def _fmt6(value: float) -> str:
    text = f"{value:.6f}"
    # avoid "-0.000000"
    return "0.000000" if text == "-0.000000" else text


def _acos_deg(arg: float, what: str) -> float:
    if arg > 1.0 + ACOS_TOLERANCE or arg < -1.0 - ACOS_TOLERANCE:
        raise TargetUnreachable(f"{what}: acos argument {arg!r} outside [-1, 1]")
    return math.degrees(math.acos(min(1.0, max(-1.0, arg))))


def plan_triangle(base: PlanPoint, obj: PlanPoint) -> PlanTriangle:
    """Plan-view legs and hypotenuse between the robot base and an object.

    The legs follow the drawn plan layout: ``leg_y = base.y - obj.y`` and
    ``leg_x = obj.x - base.x``. Signs are kept for quadrant resolution.
    """
    leg_y = base.y - obj.y
    leg_x = obj.x - base.x
    return PlanTriangle(leg_y=leg_y, leg_x=leg_x, reach=math.sqrt(leg_y * leg_y + leg_x * leg_x))


def base_angle_cosine_rule(t: PlanTriangle) -> float:
    """Unsigned base angle from the law of cosines, defined only for reach > 0 and leg_y != 0."""
    if t.reach == 0 or t.leg_y == 0:
        raise DegenerateTarget("law-of-cosines base angle needs reach > 0 and leg_y != 0")
    arg = (t.leg_y ** 2 + t.reach ** 2 - t.leg_x ** 2) / (2 * abs(t.leg_y) * t.reach)
    return _acos_deg(arg, "base angle")


def base_angle(t: PlanTriangle) -> float:
    """Signed base rotation in degrees, zero along ``leg_y``, positive toward ``+leg_x``.

    Range is (-180, 180]. Agrees in magnitude with the law-of-cosines form
    wherever that form is defined and ``leg_y > 0``.
    """
    if t.reach == 0:
        raise DegenerateTarget("object lies on the base axis; base angle undefined")
    q1 = math.degrees(math.atan2(t.leg_x, t.leg_y))
    return 180.0 if q1 == -180.0 else q1


def spatial_hypotenuse(g: ArmGeometry, reach: float) -> float:
    """Shoulder-to-wrist distance for a plan reach and the arm's height gap."""
    if reach < 0:
        raise ValueError("reach must be non-negative")
    dh = g.height_gap
    return math.sqrt(dh * dh + reach * reach)


def vertical_angles(g: ArmGeometry, reach: float, l4: float) -> VerticalTriangleAngles:
    """Interior angles of the vertical-plane triangles.

    ``a``, ``b``, ``c`` sit at the elbow, shoulder and wrist of the link
    triangle (sides shoulder link, forearm, ``l4``). ``d`` (at the shoulder)
    and ``e`` (at the wrist) belong to the right triangle with legs ``reach``
    and ``|h2 - h1|`` and hypotenuse ``l4``.
    """
    l1, l2 = g.link_shoulder, g.link_forearm
    if l4 <= 0:
        raise DegenerateTarget("shoulder and wrist coincide")
    a = _acos_deg((l1 * l1 + l2 * l2 - l4 * l4) / (2 * l1 * l2), "elbow angle a")
    b = _acos_deg((l1 * l1 + l4 * l4 - l2 * l2) / (2 * l1 * l4), "shoulder angle b")
    c = _acos_deg((l2 * l2 + l4 * l4 - l1 * l1) / (2 * l2 * l4), "wrist angle c")

    dh = abs(g.height_gap)
    if dh < HEIGHT_EPS:
        d, e = 0.0, 90.0
    elif reach == 0:
        d, e = 90.0, 0.0
    else:
        d = _acos_deg((l4 * l4 + reach * reach - dh * dh) / (2 * l4 * reach), "angle d")
        e = _acos_deg((dh * dh + l4 * l4 - reach * reach) / (2 * dh * l4), "angle e")
    return VerticalTriangleAngles(a=a, b=b, c=c, d=d, e=e)


def joint_mapping(v: VerticalTriangleAngles) -> Tuple[float, float, float]:
    """Shoulder, elbow and wrist joint angles from the triangle angles."""
    q2 = 90.0 - (v.b + v.d)
    q3 = 90.0 - v.a
    q4 = 180.0 - (v.c + v.e)
    return q2, q3, q4


def solve_ik(
    g: ArmGeometry,
    obj: PlanPoint,
    *,
    gripper_deg: Optional[float] = None,
    limits: Optional[JointLimits] = None,
) -> JointSolution:
    """Joint angles that put the wrist over ``obj`` (base frame, +y forward).

    ``q5`` is the gripper angle, open by default.
    """
    # The plan triangle measures the forward leg as y1 - y2 (image-style rows);
    # mirroring y makes world +y the q1 = 0 direction.
    t = plan_triangle(PlanPoint(0.0, 0.0), PlanPoint(obj.x, -obj.y))
    q1 = base_angle(t)
    l4 = spatial_hypotenuse(g, t.reach)
    q2, q3, q4 = joint_mapping(vertical_angles(g, t.reach, l4))
    q5 = g.gripper_open_deg if gripper_deg is None else gripper_deg
    sol = JointSolution(q1=q1, q2=q2, q3=q3, q4=q4, q5=q5)
    if limits is not None:
        for name, q in zip(("q1", "q2", "q3", "q4", "q5"), sol.as_tuple()):
            if not limits.contains(q):
                raise JointLimitExceeded(f"{name}={q:.4f} outside [{limits.min_deg}, {limits.max_deg}]")
    return sol


def forward_kinematics(g: ArmGeometry, s: JointSolution) -> Tuple[PlanPoint, float]:
    """Wrist plan position and height implied by ``q1..q4``.

    The arm is chained in the vertical plane: the shoulder link rises
    ``90 - q2`` degrees from the horizontal, the forearm turns by the elbow
    interior angle ``90 - q3``. The vertical axis of that plane points from
    the base height toward the wrist target height, which is the side the
    solver's unsigned right-triangle angle ``d`` lives on.
    """
    l1, l2 = g.link_shoulder, g.link_forearm
    rise = math.radians(90.0 - s.q2)
    interior = math.radians(90.0 - s.q3)
    forearm_dir = rise + interior - math.pi

    reach = l1 * math.cos(rise) + l2 * math.cos(forearm_dir)
    lift = l1 * math.sin(rise) + l2 * math.sin(forearm_dir)
    up = 1.0 if g.height_gap >= 0 else -1.0

    q1 = math.radians(s.q1)
    plan = PlanPoint(reach * math.sin(q1), reach * math.cos(q1))
    return plan, g.base_height + up * lift



def reachable_annulus(g: ArmGeometry) -> Tuple[float, float]:
    """Inner and outer plan-view reach (cm) at which the wrist can touch the target plane."""
    l1, l2 = g.link_shoulder, g.link_forearm
    dh2 = g.height_gap ** 2
    if abs(g.height_gap) > l1 + l2:
        raise EmptyWorkspace(f"height gap {abs(g.height_gap)} exceeds arm length {l1 + l2}")
    r_max = math.sqrt((l1 + l2) ** 2 - dh2)
    r_min = math.sqrt(max(0.0, (l1 - l2) ** 2 - dh2))
    return r_min, r_max
