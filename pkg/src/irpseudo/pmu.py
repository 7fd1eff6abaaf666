"""Pseudo mask updating: false alarm filtering and missed detection retrieving.

A network prediction is first cleaned by erasing every connected component
whose centroid is farther than ``r`` (L1) from all point labels; the result is
then OR-ed with the initial point-derived mask to form the hybrid mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .core import BinaryMask, DimensionMismatchError, PointLabel, UpdateConfig

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass(frozen=True, eq=False)
class Component:
    """A maximal connected set of foreground pixels."""

    ys: np.ndarray
    xs: np.ndarray

    @property
    def area(self) -> int:
        return len(self.xs)

    @property
    def centroid(self) -> tuple[float, float]:
        return float(self.xs.mean()), float(self.ys.mean())

    @property
    def pixels(self) -> set[tuple[int, int]]:
        return set(zip(self.xs.tolist(), self.ys.tolist()))

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """(left, right, top, bottom), inclusive."""
        return int(self.xs.min()), int(self.xs.max()), int(self.ys.min()), int(self.ys.max())

    def l1_to(self, point) -> float:
        cx, cy = self.centroid
        return abs(cx - point[0]) + abs(cy - point[1])


def label_components(mask: BinaryMask | np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label image (0 = background, 1..n in scanline order of first pixel) and count."""
    data = mask.data if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    try:
        structure = _STRUCTURES[connectivity]
    except KeyError:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}") from None
    labels, n = ndimage.label(data, structure=structure)
    return labels, int(n)


def connected_components(mask: BinaryMask | np.ndarray, connectivity: int = 8) -> list[Component]:
    labels, n = label_components(mask, connectivity)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    # stable sort keeps each component's pixels in scanline order
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(1, n + 2))
    return [Component(ys[order[a:b]], xs[order[a:b]]) for a, b in zip(bounds[:-1], bounds[1:])]


def near_any_point(component: Component, points: Sequence[PointLabel], r: float) -> bool:
    return any(component.l1_to(p) <= r for p in points)


def false_alarm_filter(prediction: BinaryMask, points: Iterable[PointLabel],
                       cfg: UpdateConfig = UpdateConfig()) -> BinaryMask:
    """Erase components whose centroid is more than ``cfg.r`` (L1) from every point.

    With no points every component is a false alarm.
    """
    filtered, _ = _filter(prediction, list(points), cfg)
    return filtered


def _filter(prediction: BinaryMask, points: list, cfg: UpdateConfig) -> tuple[BinaryMask, int]:
    labels, n = label_components(prediction, cfg.connectivity)
    if n == 0:
        return prediction, 0
    keep = np.zeros(n + 1, dtype=bool)
    for i, comp in enumerate(connected_components(prediction, cfg.connectivity), start=1):
        keep[i] = near_any_point(comp, points, cfg.r)
    return BinaryMask(keep[labels]), int(n - keep.sum())


def missed_detection_retrieve(initial: BinaryMask, filtered: BinaryMask) -> BinaryMask:
    """Hybrid mask: pixelwise union of the initial and filtered masks."""
    if initial.shape != filtered.shape:
        raise DimensionMismatchError(
            f"initial mask {initial.shape} and filtered mask {filtered.shape} differ")
    return initial | filtered


@dataclass(frozen=True)
class UpdateResult:
    hybrid: BinaryMask
    filtered: BinaryMask
    erased_components: int
    retrieved_pixels: int


def update_mask(initial: BinaryMask, prediction: BinaryMask, points: Iterable[PointLabel],
                cfg: UpdateConfig = UpdateConfig()) -> UpdateResult:
    """FAF followed by MDR for one sample, with bookkeeping for logs.

    ``retrieved_pixels`` counts hybrid pixels the filtered prediction lacked.
    """
    if initial.shape != prediction.shape:
        raise DimensionMismatchError(
            f"initial mask {initial.shape} and prediction {prediction.shape} differ")
    filtered, erased = _filter(prediction, list(points), cfg)
    hybrid = missed_detection_retrieve(initial, filtered)
    return UpdateResult(hybrid, filtered, erased, hybrid.area - filtered.area)


class SampleError(ValueError):
    def __init__(self, index, name, cause):
        super().__init__(f"sample {name if name is not None else index}: {cause}")
        self.index = index
        self.name = name
        self.cause = cause


def update_masks(samples: Iterable[tuple], cfg: UpdateConfig = UpdateConfig()) -> list[BinaryMask]:
    """Hybrid masks for ``(initial, prediction, points)`` triples.

    A fourth element, if present, names the sample in error messages.
    """
    out = []
    for i, sample in enumerate(samples):
        initial, prediction, points, *rest = sample
        try:
            out.append(update_mask(initial, prediction, points, cfg).hybrid)
        except ValueError as exc:
            raise SampleError(i, rest[0] if rest else None, exc) from exc
    return out
