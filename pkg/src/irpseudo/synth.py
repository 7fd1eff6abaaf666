"""Synthetic IR scenes with exact ground truth, for desk-scale verification.

Randomness comes from numpy's PCG64 bit generator seeded with the scene's
integer seed, whose output stream is fixed across platforms; noise is
rounded to the integer intensity grid before use.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import BinaryMask, GrayImage, PointLabel
from .pmu import Component, connected_components

log = logging.getLogger(__name__)

SHAPES = ("rectangle", "gaussian_blob")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class TargetSpec:
    """One target.  ``half_extent`` is ``(hx, hy)``; a rectangle covers
    ``center +- half_extent``.  A blob's ground truth is the pixels whose
    contrast reaches ``blob_threshold`` of the peak contrast, an ellipse with
    radii ``half_extent``.
    """

    center: tuple[int, int]
    half_extent: tuple[float, float]
    peak: float
    shape: str = "rectangle"
    blob_threshold: float = 0.5

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if min(self.half_extent) < 0:
            raise ValueError("half_extent must be non-negative")
        if not 0 < self.blob_threshold < 1:
            raise ValueError("blob_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    background_level: float = 30.0
    noise_std: float = 0.0
    gradient: tuple[float, float] | None = None
    targets: tuple[TargetSpec, ...] = ()
    seed: int = 0
    bit_depth: int = 8

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.bit_depth not in (8, 16):
            raise ValueError("bit_depth must be 8 or 16")
        for t in self.targets:
            x, y = t.center
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"target centre {t.center} outside the {self.width}x{self.height} scene")
            if t.peak <= self.background_level:
                raise ValueError("target peak must exceed the background level")
        object.__setattr__(self, "targets", tuple(self.targets))

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        d["targets"] = tuple(TargetSpec(**{**t, "center": tuple(t["center"]),
                                           "half_extent": tuple(t["half_extent"])})
                             for t in d.get("targets", ()))
        if d.get("gradient") is not None:
            d["gradient"] = tuple(d["gradient"])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CorruptionSpec:
    """How to turn ground truth into an imperfect network-style prediction."""

    drop_probability: float = 0.0
    false_component_count: int = 0
    false_component_distance: float = 100.0
    dilation: int = 0
    seed: int = 0
    max_false_side: int = 3
    max_tries: int = 10_000

    def __post_init__(self):
        if not 0 <= self.drop_probability <= 1:
            raise ValueError("drop_probability must lie in [0, 1]")
        if self.false_component_count < 0 or self.false_component_distance < 0 or self.dilation < 0:
            raise ValueError("counts and distances must be >= 0")


def _target_support(t: TargetSpec, xx: np.ndarray, yy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relative amplitude (0..1) and ground-truth support of one target."""
    cx, cy = t.center
    hx, hy = t.half_extent
    if t.shape == "rectangle":
        inside = (np.abs(xx - cx) <= hx) & (np.abs(yy - cy) <= hy)
        return inside.astype(np.float64), inside
    # gaussian whose contrast falls to blob_threshold exactly on the ellipse with radii half_extent
    k = 2.0 * math.log(1.0 / t.blob_threshold)
    sx, sy = max(hx, 0.5) / math.sqrt(k), max(hy, 0.5) / math.sqrt(k)
    amp = np.exp(-0.5 * (((xx - cx) / sx) ** 2 + ((yy - cy) / sy) ** 2))
    # the centre pixel always belongs to the support (amp == 1 there)
    return amp, amp >= t.blob_threshold


def round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def centroid_labels(gt: BinaryMask, connectivity: int = 8) -> list[PointLabel]:
    """Point labels at the rounded centroids of the ground-truth components."""
    return [PointLabel(round_half_up(cx), round_half_up(cy))
            for cx, cy in (c.centroid for c in connected_components(gt, connectivity))]


def generate_scene(spec: SceneSpec) -> tuple[GrayImage, BinaryMask, list[PointLabel]]:
    """Render an image, its ground-truth mask and centroid point labels."""
    h, w = spec.height, spec.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    clean = np.full((h, w), float(spec.background_level))
    if spec.gradient is not None:
        gx, gy = spec.gradient
        clean += gx * xx + gy * yy
    signal = np.zeros((h, w))
    gt = np.zeros((h, w), dtype=bool)
    for t in spec.targets:
        amp, support = _target_support(t, xx, yy)
        # overlapping targets take the brighter contribution, not the sum
        signal = np.maximum(signal, (t.peak - spec.background_level) * amp)
        if (gt & support).any():
            log.warning("target at %s overlaps another; their ground truth merges", t.center)
        gt |= support
    clean += signal
    rng = make_rng(spec.seed)
    noise = rng.normal(0.0, spec.noise_std, size=(h, w)) if spec.noise_std > 0 else 0.0
    top = 255 if spec.bit_depth == 8 else 65535
    img = np.clip(np.rint(clean + noise), 0, top)
    mask = BinaryMask(gt)
    return GrayImage(img, spec.bit_depth), mask, centroid_labels(mask)


def _snap(point: tuple[int, int], comp: Component) -> PointLabel:
    x, y = point
    d2 = (comp.xs - x) ** 2 + (comp.ys - y) ** 2
    i = int(np.argmin(d2))  # first minimum in scanline order
    return PointLabel(int(comp.xs[i]), int(comp.ys[i]))


def jitter_labels(labels: Sequence[PointLabel], components: Sequence[Component],
                  fraction: float = 0.125, seed: int = 0,
                  shape: tuple[int, int] | None = None) -> list[PointLabel]:
    """Coarse-centroid labels: Gaussian displacement with std ``fraction * size``.

    ``size`` is the component's larger bounding-box side.  Labels that leave
    the image (``shape`` = (height, width)) are clamped, and labels that leave
    their component are snapped to its nearest pixel.
    """
    if len(labels) != len(components):
        raise ValueError("need exactly one component per label")
    rng = make_rng(seed)
    out = []
    for p, comp in zip(labels, components):
        left, right, top, bottom = comp.bbox
        std = fraction * max(right - left + 1, bottom - top + 1)
        dx, dy = rng.normal(0.0, 1.0, size=2) * std
        x, y = p.x + int(np.rint(dx)), p.y + int(np.rint(dy))
        if shape is not None:
            x = min(max(x, 0), shape[1] - 1)
            y = min(max(y, 0), shape[0] - 1)
        if not np.any((comp.xs == x) & (comp.ys == y)):
            out.append(_snap((x, y), comp))
        else:
            out.append(PointLabel(x, y))
    return out


def corrupt_prediction(gt: BinaryMask, labels: Sequence[PointLabel],
                       spec: CorruptionSpec, connectivity: int = 8) -> BinaryMask:
    """Simulate a network prediction: dropped targets, dilation, far-away false alarms.

    False components are odd-sided squares whose centroids lie at least
    ``false_component_distance`` (L1) from every label and which never touch
    other foreground, so each stays a separate component.
    """
    rng = make_rng(spec.seed)
    h, w = gt.shape
    out = np.zeros((h, w), dtype=bool)
    for comp in connected_components(gt, connectivity):
        if rng.random() >= spec.drop_probability:
            out[comp.ys, comp.xs] = True
    if spec.dilation:
        out = ndimage.binary_dilation(out, structure=np.ones((3, 3), bool), iterations=spec.dilation)
    pts = np.array([(p.x, p.y) for p in labels], dtype=np.int64).reshape(-1, 2)
    # a false component may not touch anything already placed or any gt pixel
    blocked = ndimage.binary_dilation(out | gt.data, structure=np.ones((3, 3), bool))
    for _ in range(spec.false_component_count):
        for _try in range(spec.max_tries):
            half = int(rng.integers(0, (spec.max_false_side - 1) // 2 + 1))
            cx = int(rng.integers(half, w - half)) if w > 2 * half else -1
            cy = int(rng.integers(half, h - half)) if h > 2 * half else -1
            if cx < 0 or cy < 0:
                continue
            if len(pts) and np.min(np.abs(pts[:, 0] - cx) + np.abs(pts[:, 1] - cy)) < spec.false_component_distance:
                continue
            win = (slice(cy - half, cy + half + 1), slice(cx - half, cx + half + 1))
            if blocked[win].any():
                continue
            out[win] = True
            grow = (slice(max(cy - half - 1, 0), cy + half + 2), slice(max(cx - half - 1, 0), cx + half + 2))
            blocked[grow] = True
            break
        else:
            raise RuntimeError(
                f"could not place a false component after {spec.max_tries} tries; the scene is too crowded")
    return BinaryMask(out)


def random_scene_spec(rng: np.random.Generator, *, width: int = 128, height: int = 128,
                      n_targets: int = 1, shapes: Sequence[str] = ("rectangle",),
                      side_range: tuple[int, int] = (3, 9), min_contrast: float = 50.0,
                      max_contrast: float = 150.0, background: tuple[float, float] = (20.0, 60.0),
                      noise_fraction: float = 0.0, margin: int = 30, min_separation: int = 40,
                      seed: int | None = None) -> SceneSpec:
    """Draw a scene with well-separated targets away from the borders.

    Rectangles get integer sides in ``side_range``; blobs get ground-truth
    diameters in the same range.  ``noise_fraction`` sets noise std relative
    to each scene's contrast.
    """
    bg = float(rng.uniform(*background))
    contrast = float(rng.uniform(min_contrast, max_contrast))
    targets, centers = [], []
    while len(targets) < n_targets:
        c = (int(rng.integers(margin, width - margin)), int(rng.integers(margin, height - margin)))
        if any(abs(c[0] - o[0]) + abs(c[1] - o[1]) < min_separation for o in centers):
            continue
        shape = shapes[int(rng.integers(len(shapes)))]
        sx, sy = (int(v) for v in rng.integers(side_range[0], side_range[1] + 1, size=2))
        if shape == "rectangle":
            # even sides extend one pixel further on the low side
            lo = (c[0] - sx // 2, c[1] - sy // 2)
            hi = (lo[0] + sx - 1, lo[1] + sy - 1)
            ctr = ((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2)
            targets.append(TargetSpec(ctr, ((sx - 1) / 2, (sy - 1) / 2), bg + contrast, "rectangle"))
        else:
            targets.append(TargetSpec(c, ((sx - 1) / 2, (sy - 1) / 2), bg + contrast, "gaussian_blob"))
        centers.append(c)
    return SceneSpec(width, height, bg, noise_fraction * contrast, None, tuple(targets),
                     int(rng.integers(2**63)) if seed is None else seed)
