"""Overhead-camera pixel <-> robot-base plan coordinates.

The camera looks straight down at a fixed height, so the mapping is a
uniform scale about the base pixel with an optional row flip (image rows
grow downward, world +y grows away from the base).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .kinematics import PlanPoint


@dataclass(frozen=True)
class OverheadCalibration:
    base_px_x: float
    base_px_y: float
    scale: float  # cm per pixel
    axis_flip_y: bool = True

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def pixel_to_world(c: OverheadCalibration, px: Tuple[float, float]) -> PlanPoint:
    u, v = px
    x = (u - c.base_px_x) * c.scale
    y = (c.base_px_y - v) * c.scale if c.axis_flip_y else (v - c.base_px_y) * c.scale
    return PlanPoint(x, y)


def world_to_pixel(c: OverheadCalibration, p: PlanPoint) -> Tuple[float, float]:
    u = c.base_px_x + p.x / c.scale
    v = c.base_px_y - p.y / c.scale if c.axis_flip_y else c.base_px_y + p.y / c.scale
    return u, v
