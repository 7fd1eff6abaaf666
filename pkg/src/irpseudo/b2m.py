"""Box-to-mask: probabilistic thresholding inside a point's bounding box."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (
    BinaryMask,
    BoundingBox,
    GrayImage,
    InvalidAnnotationError,
    PmgConfig,
    PointLabel,
    ProbMap,
)
from .p2b import TIE_RTOL, _box_from_estimates, _check_point, boundary_estimates

# Fused probabilities this close to 0.5 count as 0.5 (i.e. target).
PROB_ATOL = 1e-9


@dataclass(frozen=True)
class RegionStats:
    min: float
    max: float
    mean: float
    count: int

    @classmethod
    def of(cls, values: np.ndarray) -> "RegionStats":
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise ValueError("region is empty")
        lo, hi = float(values.min()), float(values.max())
        return cls(lo, hi, min(max(float(values.mean()), lo), hi), int(values.size))


@dataclass(frozen=True)
class SigmaThreshold:
    value: float


def pixel_threshold(image: GrayImage, box: BoundingBox, anchor: PointLabel,
                    alpha: float) -> SigmaThreshold:
    """Blend of the annotated pixel and the box mean: ``alpha*I(u0) + (1-alpha)*mean``."""
    if not box.contains(PointLabel(*anchor)):
        raise InvalidAnnotationError(f"anchor {tuple(anchor)} not inside {box}")
    box_mean = float(box.crop(image.data).mean())
    return SigmaThreshold(alpha * image[anchor] + (1.0 - alpha) * box_mean)


def normalize_probability(values: np.ndarray, stats: RegionStats,
                          sigma: SigmaThreshold) -> np.ndarray:
    """Map intensities to target probabilities, 0..0.5 below sigma and 0.5..1 above.

    Degenerate regions use the limits of the piecewise-linear map: a constant
    region is 0.5 everywhere, pixels at or below a sigma that does not exceed
    the region minimum get 0, and no division by zero happens.
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi, s = stats.min, stats.max, sigma.value
    if hi == lo:
        return np.full(values.shape, 0.5)
    tol = TIE_RTOL * (hi - lo)
    out = np.empty(values.shape)
    low = values <= s
    if s - lo > tol:
        out[low] = (values[low] - lo) / (s - lo) * 0.5
    else:
        out[low] = 0.0
    high = ~low
    if np.any(high):
        # high pixels exist only when s < hi
        out[high] = 1.0 - (hi - values[high]) / (hi - s) * 0.5
    return np.clip(out, 0.0, 1.0)


def _normalize_region(region: np.ndarray, sigma: SigmaThreshold) -> np.ndarray:
    if region.size == 0:
        return np.empty(region.shape)
    return normalize_probability(region, RegionStats.of(region), sigma)


def global_probability(image: GrayImage, box: BoundingBox, sigma: SigmaThreshold) -> ProbMap:
    return ProbMap(box, _normalize_region(box.crop(image.data), sigma))


def directional_probability(image: GrayImage, box: BoundingBox, anchor: PointLabel,
                            sigma: SigmaThreshold, axis: str) -> ProbMap:
    """Bidirectional map: the box split at the anchor, each half normalized on its own.

    The anchor's row (vertical) or column (horizontal) belongs to the upper or
    left half.  Both halves share ``sigma``.
    """
    anchor = PointLabel(*anchor)
    if not box.contains(anchor):
        raise InvalidAnnotationError(f"anchor {tuple(anchor)} not inside {box}")
    region = box.crop(image.data)
    if axis == "vertical":
        split = anchor.y - box.top + 1
        parts = (region[:split], region[split:])
        values = np.concatenate([_normalize_region(p, sigma) for p in parts], axis=0)
    elif axis == "horizontal":
        split = anchor.x - box.left + 1
        parts = (region[:, :split], region[:, split:])
        values = np.concatenate([_normalize_region(p, sigma) for p in parts], axis=1)
    else:
        raise ValueError(f"axis must be 'vertical' or 'horizontal', got {axis!r}")
    return ProbMap(box, values)


def fuse_probabilities(pg: ProbMap, pv: ProbMap, ph: ProbMap) -> np.ndarray:
    if not (pg.box == pv.box == ph.box):
        raise ValueError(f"probability maps cover different boxes: {pg.box}, {pv.box}, {ph.box}")
    return (pg.values + pv.values + ph.values) / 3.0


def fuse_and_binarize(pg: ProbMap, pv: ProbMap, ph: ProbMap) -> np.ndarray:
    """Average the three maps and keep pixels with fused probability >= 0.5.

    Returns a boolean fragment shaped like the box.
    """
    return fuse_probabilities(pg, pv, ph) >= 0.5 - PROB_ATOL


def box_to_mask(image: GrayImage, box: BoundingBox, anchor: PointLabel,
                alpha: float) -> np.ndarray:
    """Boolean fragment over ``box`` for the target annotated at ``anchor``."""
    sigma = pixel_threshold(image, box, anchor, alpha)
    pg = global_probability(image, box, sigma)
    pv = directional_probability(image, box, anchor, sigma, "vertical")
    ph = directional_probability(image, box, anchor, sigma, "horizontal")
    return fuse_and_binarize(pg, pv, ph)


def point_to_mask(image: GrayImage, points: Iterable[PointLabel],
                  cfg: PmgConfig = PmgConfig()) -> BinaryMask:
    """Initial pseudo mask for all annotated targets of one image."""
    points = [PointLabel(*p) for p in points]
    for p in points:
        _check_point(image, p)
    work = image.inverted() if cfg.invert else image
    out = np.zeros(image.shape, dtype=bool)
    for p in points:
        box = _box_from_estimates(p, boundary_estimates(work, p, cfg))
        out[box.slices] |= box_to_mask(work, box, p, cfg.alpha)
        out[p.y, p.x] = True
    return BinaryMask(out)
