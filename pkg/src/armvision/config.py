"""INI-style config and scene files.

Config keys may sit in any section (or none); section names are only for
readability. Recognised keys::

    [arm]          link_shoulder_cm link_forearm_cm base_height_cm wrist_height_cm
                   gripper_open_deg gripper_closed_deg
    [calibration]  base_px_x base_px_y scale_cm_per_px axis_flip_y
    [camera]       frame_width frame_height noise_amplitude
    [pipeline]     min_area morph_radius polarity (dark|light) min_contrast roi (x0,y0,w,h)
    [task]         grasp_tol_cm shuffle_slots

Scene files use ``[scene]`` (seed), ``[board]`` (x_min_cm x_max_cm y_min_cm
y_max_cm), one ``[piece <id>]`` per piece (shape size_cm x_cm y_cm intensity,
optional height_cm) and one ``[slot <name>]`` per target (x_cm y_cm), in
file order.
"""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

from .calib import OverheadCalibration
from .kinematics import ArmGeometry, PlanPoint
from .sim import Board, EpisodeSettings, Piece, Scene, default_calibration, default_geometry
from .vision import PipelineParams, RegionOfInterest

PathLike = Union[str, "os.PathLike[str]"]


class ConfigError(ValueError):
    """Unreadable, malformed or out-of-range config or scene file."""


@dataclass(frozen=True)
class Config:
    arm: ArmGeometry = field(default_factory=default_geometry)
    calibration: OverheadCalibration = field(default_factory=default_calibration)
    episode: EpisodeSettings = EpisodeSettings()


_KNOWN = {
    "link_shoulder_cm", "link_forearm_cm", "base_height_cm", "wrist_height_cm",
    "gripper_open_deg", "gripper_closed_deg",
    "base_px_x", "base_px_y", "scale_cm_per_px", "axis_flip_y",
    "frame_width", "frame_height", "noise_amplitude",
    "min_area", "morph_radius", "polarity", "min_contrast", "roi",
    "grasp_tol_cm", "shuffle_slots",
}


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))


def _read(path: PathLike) -> configparser.ConfigParser:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if not text.lstrip().startswith("["):
        text = "[top]\n" + text
    cp = _parser()
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def _flatten(cp: configparser.ConfigParser, path: PathLike) -> Dict[str, str]:
    flat: Dict[str, str] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if key not in _KNOWN:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            if key in flat:
                raise ConfigError(f"{path}: key {key!r} given twice")
            flat[key] = value
    return flat


def _num(flat: Dict[str, str], key: str, default, kind=float):
    if key not in flat:
        return default
    try:
        return kind(flat[key])
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {flat[key]!r}") from None


def _bool(flat: Dict[str, str], key: str, default: bool) -> bool:
    if key not in flat:
        return default
    value = flat[key].strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {flat[key]!r}")


def load_config(path: Optional[PathLike] = None) -> Config:
    """Load a config file; missing keys fall back to the built-in defaults."""
    if path is None:
        return Config()
    flat = _flatten(_read(path), path)
    arm0, cal0, ep0 = default_geometry(), default_calibration(), EpisodeSettings()
    try:
        arm = ArmGeometry(
            link_shoulder=_num(flat, "link_shoulder_cm", arm0.link_shoulder),
            link_forearm=_num(flat, "link_forearm_cm", arm0.link_forearm),
            base_height=_num(flat, "base_height_cm", arm0.base_height),
            wrist_height_at_target=_num(flat, "wrist_height_cm", arm0.wrist_height_at_target),
            gripper_open_deg=_num(flat, "gripper_open_deg", arm0.gripper_open_deg),
            gripper_closed_deg=_num(flat, "gripper_closed_deg", arm0.gripper_closed_deg),
        )
        cal = OverheadCalibration(
            base_px_x=_num(flat, "base_px_x", cal0.base_px_x),
            base_px_y=_num(flat, "base_px_y", cal0.base_px_y),
            scale=_num(flat, "scale_cm_per_px", cal0.scale),
            axis_flip_y=_bool(flat, "axis_flip_y", cal0.axis_flip_y),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None

    p0 = ep0.pipeline
    polarity = flat.get("polarity", "dark").strip().lower()
    if polarity not in ("dark", "light"):
        raise ConfigError(f"polarity: expected dark or light, got {polarity!r}")
    roi = None
    if "roi" in flat:
        try:
            x0, y0, w, h = (int(v) for v in flat["roi"].split(","))
        except ValueError:
            raise ConfigError(f"roi: expected x0,y0,w,h, got {flat['roi']!r}") from None
        roi = RegionOfInterest(x0, y0, w, h)
    pipeline = PipelineParams(
        min_area=_num(flat, "min_area", p0.min_area, int),
        morph_radius=_num(flat, "morph_radius", p0.morph_radius, int),
        dark_foreground=polarity == "dark",
        roi=roi,
        min_contrast=_num(flat, "min_contrast", p0.min_contrast, int),
    )
    if pipeline.min_area < 0 or pipeline.morph_radius < 1:
        raise ConfigError("min_area must be >= 0 and morph_radius >= 1")
    episode = dataclasses.replace(
        ep0,
        width=_num(flat, "frame_width", ep0.width, int),
        height=_num(flat, "frame_height", ep0.height, int),
        noise=_num(flat, "noise_amplitude", ep0.noise, int),
        grasp_tol=_num(flat, "grasp_tol_cm", ep0.grasp_tol),
        shuffle_slots=_bool(flat, "shuffle_slots", ep0.shuffle_slots),
        pipeline=pipeline,
    )
    if episode.width < 3 or episode.height < 3 or episode.noise < 0 or episode.grasp_tol < 0:
        raise ConfigError("frame must be at least 3x3; noise and grasp_tol must be >= 0")
    return Config(arm=arm, calibration=cal, episode=episode)


def load_scene(path: PathLike) -> Scene:
    cp = _read(path)
    seed = 0
    board = None
    pieces = []
    slots = []
    try:
        for section in cp.sections():
            sec = cp[section]
            kind, _, name = section.partition(" ")
            if kind == "scene":
                seed = sec.getint("seed", 0)
            elif kind == "board":
                board = Board(
                    sec.getfloat("x_min_cm"), sec.getfloat("x_max_cm"),
                    sec.getfloat("y_min_cm"), sec.getfloat("y_max_cm"),
                )
            elif kind == "piece":
                if not name:
                    raise ConfigError(f"{path}: piece section needs an id, e.g. [piece A]")
                height = sec.getfloat("height_cm", None)
                pieces.append(
                    Piece(
                        id=name.strip(),
                        shape=sec.get("shape", "disk").strip(),
                        size_cm=sec.getfloat("size_cm"),
                        pose=PlanPoint(sec.getfloat("x_cm"), sec.getfloat("y_cm")),
                        intensity=sec.getint("intensity", 40),
                        height_cm=height,
                    )
                )
            elif kind == "slot":
                slots.append(PlanPoint(sec.getfloat("x_cm"), sec.getfloat("y_cm")))
            else:
                raise ConfigError(f"{path}: unknown section [{section}]")
        if board is None:
            raise ConfigError(f"{path}: missing [board] section")
        return Scene(board, pieces, slots, seed)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_scene(scene: Scene) -> str:
    lines = ["[scene]", f"seed = {scene.rng_seed}", "", "[board]"]
    b = scene.board
    lines += [f"x_min_cm = {b.x_min!r}", f"x_max_cm = {b.x_max!r}", f"y_min_cm = {b.y_min!r}", f"y_max_cm = {b.y_max!r}"]
    for p in scene.pieces:
        lines += ["", f"[piece {p.id}]", f"shape = {p.shape}", f"size_cm = {p.size_cm!r}"]
        if p.height_cm is not None:
            lines.append(f"height_cm = {p.height_cm!r}")
        lines += [f"x_cm = {p.pose.x!r}", f"y_cm = {p.pose.y!r}", f"intensity = {p.intensity}"]
    for i, s in enumerate(scene.slots, 1):
        lines += ["", f"[slot {i}]", f"x_cm = {s.x!r}", f"y_cm = {s.y!r}"]
    return "\n".join(lines) + "\n"
