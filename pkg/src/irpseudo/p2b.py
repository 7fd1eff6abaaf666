"""Point-to-box: estimate a target's extent from directional intensity profiles.

For each of the four directions a strip of ``l_ep`` pixels along the scan
direction and ``+-l_dp`` pixels across it is reduced to a max vector and an
average vector.  Large jumps in the max vector separate the flat target and
background regions from the transition between them; the average value where
the transition ends becomes the background threshold, and the boundary is the
last position (scanning outward) whose average stays above it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BoundingBox,
    GrayImage,
    InvalidAnnotationError,
    PmgConfig,
    PointLabel,
)

DIRECTIONS = ("left", "right", "up", "down")

# Comparisons treat values closer than this fraction of the local intensity
# range as equal, so decisions survive the rounding of affine rescalings.
TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class DirectionalProfile:
    """Perpendicular reductions of one scan strip, indexed from the anchor outward."""

    max_vector: np.ndarray
    avg_vector: np.ndarray
    diffs: np.ndarray
    direction: str

    def __len__(self) -> int:
        return len(self.max_vector)


@dataclass(frozen=True)
class BoundaryEstimate:
    offset: int
    background_threshold: float
    fallback_used: bool


def _check_point(image: GrayImage, point: PointLabel) -> None:
    if not PointLabel(*point).in_bounds(image.width, image.height):
        raise InvalidAnnotationError(
            f"point {tuple(point)} outside {image.width}x{image.height} image")


def directional_profile(image: GrayImage, anchor: PointLabel, direction: str,
                        cfg: PmgConfig) -> DirectionalProfile:
    _check_point(image, anchor)
    x, y = anchor
    h, w = image.shape
    data = image.data
    if direction in ("left", "right"):
        rows = slice(max(y - cfg.l_dp, 0), min(y + cfg.l_dp, h - 1) + 1)
        if direction == "left":
            strip = data[rows, max(x - cfg.l_ep, 0):x + 1][:, ::-1]
        else:
            strip = data[rows, x:min(x + cfg.l_ep, w - 1) + 1]
        axis = 0
    elif direction in ("up", "down"):
        cols = slice(max(x - cfg.l_dp, 0), min(x + cfg.l_dp, w - 1) + 1)
        if direction == "up":
            strip = data[max(y - cfg.l_ep, 0):y + 1, cols][::-1, :]
        else:
            strip = data[y:min(y + cfg.l_ep, h - 1) + 1, cols]
        axis = 1
    else:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")

    max_vec = strip.max(axis=axis)
    # a float mean of equal values can overshoot their max by an ulp
    avg_vec = np.minimum(strip.mean(axis=axis), max_vec)
    return DirectionalProfile(max_vec, avg_vec, np.abs(np.diff(max_vec)), direction)


def estimate_boundary(profile: DirectionalProfile) -> BoundaryEstimate:
    """Locate the outward boundary of the target along one profile.

    1. the difference threshold is the mean of the adjacent max differences;
    2. the transition ends one past the outermost difference above it;
    3. the average value there is the background threshold;
    4. scanning outward, the boundary is the last index before the average
       drops strictly below that threshold.  When it never does (a perfectly
       flat background sits exactly at the threshold) the threshold position
       itself is where the crossing happens.

    If no difference exceeds the mean (flat or single-step profiles) the whole
    profile is kept and ``fallback_used`` is set.
    """
    n = len(profile)
    if n == 0:
        raise ValueError("empty profile")
    last = n - 1
    avg = profile.avg_vector
    if n == 1:
        return BoundaryEstimate(0, float(avg[0]), True)

    scale = max(np.ptp(profile.max_vector), np.ptp(avg))
    tol = TIE_RTOL * scale
    diffs = profile.diffs
    above = np.flatnonzero(diffs > diffs.mean() + tol)
    if above.size == 0:
        return BoundaryEstimate(last, float(avg[last]), True)

    b = int(above[-1]) + 1
    background = float(avg[b])
    below = np.flatnonzero(avg < background - tol)
    crossing = int(below[0]) if below.size else b
    return BoundaryEstimate(max(crossing - 1, 0), background, False)


def boundary_estimates(image: GrayImage, point: PointLabel,
                       cfg: PmgConfig) -> dict[str, BoundaryEstimate]:
    """Per-direction boundary estimates (no polarity handling)."""
    return {d: estimate_boundary(directional_profile(image, point, d, cfg)) for d in DIRECTIONS}


def _box_from_estimates(point: PointLabel, est: dict[str, BoundaryEstimate]) -> BoundingBox:
    x, y = point
    return BoundingBox(x - est["left"].offset, x + est["right"].offset,
                       y - est["up"].offset, y + est["down"].offset)


def point_to_box(image: GrayImage, point: PointLabel, cfg: PmgConfig = PmgConfig()) -> BoundingBox:
    """Bounding box around the target annotated at ``point``."""
    point = PointLabel(*point)
    _check_point(image, point)
    if cfg.invert:
        image = image.inverted()
    return _box_from_estimates(point, boundary_estimates(image, point, cfg))
