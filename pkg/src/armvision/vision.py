"""Raster pipeline that finds dark puzzle pieces and their centroids.

Images are plain numpy arrays: RGB frames are ``(h, w, 3)`` uint8, gray
images ``(h, w)`` uint8 and binary masks ``(h, w)`` bool. Coordinates are
``x`` = column, ``y`` = row, with pixel centres on integers.

Stages: ROI crop, BT.601 grayscale, histogram equalization, Otsu
binarization, Sobel edges (exported only), square-element opening,
8-connected labeling, small-area removal.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class VisionError(ValueError):
    pass


class RoiOutOfBounds(VisionError):
    pass


class ImageTooSmall(VisionError):
    pass


@dataclass(frozen=True)
class RegionOfInterest:
    x0: int
    y0: int
    w: int
    h: int

    @classmethod
    def full(cls, img: np.ndarray) -> "RegionOfInterest":
        return cls(0, 0, img.shape[1], img.shape[0])


@dataclass(frozen=True)
class DetectedObject:
    label: int
    area: int
    centroid_x: float
    centroid_y: float

    def to_json(self) -> str:
        return json.dumps(
            {"label": self.label, "area": self.area, "cx": self.centroid_x, "cy": self.centroid_y}
        )


@dataclass(frozen=True)
class PipelineParams:
    min_area: int = 30
    morph_radius: int = 1
    dark_foreground: bool = True
    roi: Optional[RegionOfInterest] = None
    #: minimum gray-level gap between class means for any foreground to exist
    min_contrast: int = 20


@dataclass
class PipelineResult:
    objects: List[DetectedObject]
    stages: Dict[str, np.ndarray] = field(default_factory=dict)
    threshold: int = 0


#: Stage names written by ``--dump-stages``, in pipeline order.
STAGE_NAMES = ("gray", "equalized", "binary", "edges", "opened")


def crop_roi(img: np.ndarray, roi: RegionOfInterest) -> np.ndarray:
    h, w = img.shape[:2]
    if roi.w < 1 or roi.h < 1 or roi.x0 < 0 or roi.y0 < 0 or roi.x0 + roi.w > w or roi.y0 + roi.h > h:
        raise RoiOutOfBounds(f"{roi} outside {w}x{h} image")
    return img[roi.y0:roi.y0 + roi.h, roi.x0:roi.x0 + roi.w].copy()


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half up. Exact integer arithmetic."""
    rgb = img.astype(np.int64)
    luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.clip(luma, 0, 255).astype(np.uint8)


def equalization_lut(img: np.ndarray) -> np.ndarray:
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    n = int(cdf[-1])
    cdf_min = int(cdf[np.flatnonzero(hist)[0]])
    den = n - cdf_min
    if den == 0:
        return np.arange(256, dtype=np.uint8)
    num = 255 * (cdf - cdf_min)
    # round half up in integers; bins below the first occupied one clip to 0
    lut = (2 * num + den) // (2 * den)
    return np.clip(lut, 0, 255).astype(np.uint8)


def equalize_histogram(img: np.ndarray) -> np.ndarray:
    return equalization_lut(img)[img]


def otsu_level(img: np.ndarray) -> int:
    """Threshold ``t`` maximizing between-class variance of {v <= t} vs {v > t}.

    Comparisons are exact (integer cross-multiplication); ties go to the
    smallest ``t``. A constant image returns its single level.
    """
    hist = np.bincount(img.ravel(), minlength=256).tolist()
    n = sum(hist)
    total = sum(v * c for v, c in enumerate(hist))
    best_t, best_num, best_den = 0, -1, 1
    n0 = s0 = 0
    for t in range(256):
        n0 += hist[t]
        s0 += t * hist[t]
        n1 = n - n0
        if n0 == 0 or n1 == 0:
            continue
        # sigma_b^2 * n^2 = (n*s0 - n0*total)^2 / (n0*n1)
        num = (n * s0 - n0 * total) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    if best_num < 0:
        return int(np.flatnonzero(hist)[0])
    return best_t


def otsu_threshold(img: np.ndarray, dark_foreground: bool = True) -> Tuple[np.ndarray, int]:
    t = otsu_level(img)
    if img.size == 0 or img.min() == img.max():
        return np.zeros(img.shape, dtype=bool), t
    mask = img <= t if dark_foreground else img > t
    return mask, t


def class_contrast(gray: np.ndarray, mask: np.ndarray) -> float:
    """Absolute difference of mean intensity inside and outside ``mask``."""
    if mask.all() or not mask.any():
        return 0.0
    return abs(float(gray[mask].mean()) - float(gray[~mask].mean()))


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.int64)


def sobel_edges(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    if h < 3 or w < 3:
        raise ImageTooSmall(f"Sobel needs at least 3x3, got {w}x{h}")
    padded = np.pad(img.astype(np.int64), 1, mode="edge")
    win = sliding_window_view(padded, (3, 3))
    gx = np.einsum("ijkl,kl->ij", win, _SOBEL_X)
    gy = np.einsum("ijkl,kl->ij", win, _SOBEL_X.T)
    mag = np.sqrt((gx * gx + gy * gy).astype(np.float64))
    return np.clip(np.floor(mag + 0.5), 0, 255).astype(np.uint8)


def _square_filter(mask: np.ndarray, radius: int, reduce) -> np.ndarray:
    k = 2 * radius + 1
    out = mask
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, constant_values=False)
        out = reduce(sliding_window_view(padded, k, axis=axis), axis=-1)
    return out


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    return _square_filter(mask.astype(bool), radius, np.all)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    return _square_filter(mask.astype(bool), radius, np.any)


def morph_open(mask: np.ndarray, radius: int) -> np.ndarray:
    """Erosion then dilation with a (2r+1)-square element; outside the frame is background."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return dilate(erode(mask, radius), radius)


def _row_runs(row: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.concatenate(([False], row, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def label_components(mask: np.ndarray) -> Tuple[np.ndarray, List[DetectedObject]]:
    """8-connected labeling over horizontal runs with union-find.

    Returns the label image (0 = background) and one object per component,
    labels numbered from 1 in raster order of each component's first pixel.
    """
    mask = np.asarray(mask, dtype=bool)
    runs: List[Tuple[int, int, int]] = []  # (row, start, end)
    parent: List[int] = []

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    prev: List[int] = []
    for y in range(mask.shape[0]):
        cur: List[int] = []
        j = 0
        for s, e in _row_runs(mask[y]):
            idx = len(runs)
            runs.append((y, s, e))
            parent.append(idx)
            cur.append(idx)
            # previous-row runs touching [s-1, e+1]
            while j < len(prev) and runs[prev[j]][2] < s - 1:
                j += 1
            k = j
            while k < len(prev) and runs[prev[k]][1] <= e + 1:
                ra, rb = find(idx), find(prev[k])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
                k += 1
        prev = cur

    labels = np.zeros(mask.shape, dtype=np.int32)
    label_of: Dict[int, int] = {}
    area: List[int] = []
    sum_x: List[int] = []
    sum_y: List[int] = []
    for idx, (y, s, e) in enumerate(runs):
        root = find(idx)
        if root not in label_of:
            label_of[root] = len(area) + 1
            area.append(0)
            sum_x.append(0)
            sum_y.append(0)
        lab = label_of[root]
        n = e - s + 1
        area[lab - 1] += n
        sum_x[lab - 1] += (s + e) * n // 2
        sum_y[lab - 1] += y * n
        labels[y, s:e + 1] = lab

    objects = [
        DetectedObject(label=i + 1, area=a, centroid_x=sx / a, centroid_y=sy / a)
        for i, (a, sx, sy) in enumerate(zip(area, sum_x, sum_y))
    ]
    return labels, objects


def connected_components(mask: np.ndarray) -> List[DetectedObject]:
    return label_components(mask)[1]


def filter_small(objects: List[DetectedObject], min_area: int) -> List[DetectedObject]:
    if min_area < 0:
        raise ValueError("min_area must be >= 0")
    return [o for o in objects if o.area >= min_area]


def run_pipeline(img: np.ndarray, params: PipelineParams = PipelineParams()) -> PipelineResult:
    """Full detection with every intermediate stage kept (ROI coordinates)."""
    roi = params.roi or RegionOfInterest.full(img)
    cropped = crop_roi(img, roi)
    gray = to_grayscale(cropped) if cropped.ndim == 3 else cropped
    lut = equalization_lut(gray)
    equalized = lut[gray]
    # Equalization stretches the board's few noise levels over the whole range,
    # so the Otsu level is picked on the gray histogram and carried through the LUT.
    gray_mask, t_gray = otsu_threshold(gray, params.dark_foreground)
    t = int(lut[t_gray])
    if gray_mask.any() and class_contrast(gray, gray_mask) >= params.min_contrast:
        binary = equalized <= t if params.dark_foreground else equalized > t
    else:
        binary = np.zeros(gray.shape, dtype=bool)
    edges = sobel_edges(equalized)
    opened = morph_open(binary, params.morph_radius)
    objects = filter_small(connected_components(opened), params.min_area)
    shifted = [
        DetectedObject(o.label, o.area, o.centroid_x + roi.x0, o.centroid_y + roi.y0) for o in objects
    ]
    stages = {"gray": gray, "equalized": equalized, "binary": binary, "edges": edges, "opened": opened}
    return PipelineResult(objects=shifted, stages=stages, threshold=t)


def detect_objects(
    img: np.ndarray, roi: Optional[RegionOfInterest] = None, params: PipelineParams = PipelineParams()
) -> List[DetectedObject]:
    """Centroids of dark objects in full-frame pixel coordinates."""
    if roi is not None:
        params = dataclasses.replace(params, roi=roi)
    return run_pipeline(img, params).objects
