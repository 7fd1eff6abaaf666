"""IoU, false alarm rate and probability of detection for binary masks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import BinaryMask, DimensionMismatchError, EvalConfig
from .pmu import Component, connected_components

CATEGORIES = ("Point", "Spot", "Extended")


def _check(pred: BinaryMask, gt: BinaryMask) -> None:
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ")


def intersection_union(pred: BinaryMask, gt: BinaryMask) -> tuple[int, int]:
    _check(pred, gt)
    return int(np.sum(pred.data & gt.data)), int(np.sum(pred.data | gt.data))


def iou(pred: BinaryMask, gt: BinaryMask) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    inter, union = intersection_union(pred, gt)
    return 1.0 if union == 0 else inter / union


def false_pixels(pred: BinaryMask, gt: BinaryMask) -> int:
    _check(pred, gt)
    return int(np.sum(pred.data & ~gt.data))


def false_alarm_rate(pred: BinaryMask, gt: BinaryMask) -> float:
    """Falsely predicted pixels over all pixels (conventionally reported times 1e6)."""
    return false_pixels(pred, gt) / gt.data.size


def match_components(pred_comps: list[Component], gt_comps: list[Component],
                     d_match: float) -> list[tuple[int, int]]:
    """Greedy one-to-one matching by increasing centroid L1 distance.

    Returns ``(gt_index, pred_index)`` pairs; ties break on gt then pred index.
    """
    candidates = []
    for gi, g in enumerate(gt_comps):
        gx, gy = g.centroid
        for pi, p in enumerate(pred_comps):
            px, py = p.centroid
            d = abs(gx - px) + abs(gy - py)
            if d <= d_match:
                candidates.append((d, gi, pi))
    candidates.sort()
    used_g, used_p, pairs = set(), set(), []
    for _, gi, pi in candidates:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        pairs.append((gi, pi))
    return pairs


def probability_of_detection(pred: BinaryMask, gt: BinaryMask,
                             cfg: EvalConfig = EvalConfig()) -> tuple[int, int]:
    """``(hits, targets)`` for one image."""
    _check(pred, gt)
    gt_comps = connected_components(gt, cfg.connectivity)
    pred_comps = connected_components(pred, cfg.connectivity)
    return len(match_components(pred_comps, gt_comps, cfg.d_match)), len(gt_comps)


def size_category(area: int) -> str:
    if area < 1:
        raise ValueError(f"target area must be positive, got {area}")
    if area <= 9:
        return "Point"
    if area <= 81:
        return "Spot"
    return "Extended"


def category_overlaps(pred: BinaryMask, gt: BinaryMask,
                      cfg: EvalConfig = EvalConfig()) -> list[tuple[str, int, int]]:
    """Per-target ``(category, intersection, union)`` inside each target's crop.

    The crop is the target's bounding box padded by ``cfg.category_margin``;
    pixels of other ground-truth targets inside it are ignored.
    """
    _check(pred, gt)
    h, w = gt.shape
    labels_gt = np.zeros(gt.shape, dtype=np.int64)
    comps = connected_components(gt, cfg.connectivity)
    for i, c in enumerate(comps, start=1):
        labels_gt[c.ys, c.xs] = i
    m = cfg.category_margin
    out = []
    for i, c in enumerate(comps, start=1):
        left, right, top, bottom = c.bbox
        rows = slice(max(top - m, 0), min(bottom + m, h - 1) + 1)
        cols = slice(max(left - m, 0), min(right + m, w - 1) + 1)
        lab = labels_gt[rows, cols]
        own = lab == i
        p = pred.data[rows, cols] & ((lab == 0) | own)
        out.append((size_category(c.area), int(np.sum(p & own)), int(np.sum(p | own))))
    return out


@dataclass
class EvalReport:
    iou: float
    pd: float
    fa: float
    n_images: int
    n_targets: int
    per_category: dict[str, dict] = field(default_factory=dict)
    totals: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def headline(self) -> str:
        return (f"IoU {self.iou * 100:.2f}  Pd {self.pd * 100:.2f}  "
                f"Fa {self.fa * 1e6:.2f}  ({self.n_images} images, {self.n_targets} targets)")


@dataclass
class _Accumulator:
    inter: int = 0
    union: int = 0
    hits: int = 0
    targets: int = 0
    false: int = 0
    pixels: int = 0
    images: int = 0
    cats: dict = field(default_factory=lambda: {c: [0, 0, 0] for c in CATEGORIES})

    def add(self, pred: BinaryMask, gt: BinaryMask, cfg: EvalConfig) -> None:
        i, u = intersection_union(pred, gt)
        hits, targets = probability_of_detection(pred, gt, cfg)
        self.inter += i
        self.union += u
        self.hits += hits
        self.targets += targets
        self.false += false_pixels(pred, gt)
        self.pixels += gt.data.size
        self.images += 1
        for cat, ci, cu in category_overlaps(pred, gt, cfg):
            acc = self.cats[cat]
            acc[0] += ci
            acc[1] += cu
            acc[2] += 1


def evaluate_dataset(pairs: Iterable[tuple[BinaryMask, BinaryMask]],
                     cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Micro-averaged IoU, Pd and Fa over ``(pred, gt)`` pairs."""
    acc = _Accumulator()
    for idx, (pred, gt) in enumerate(pairs):
        try:
            acc.add(pred, gt, cfg)
        except DimensionMismatchError as exc:
            raise DimensionMismatchError(f"pair {idx}: {exc}") from exc
    if acc.images == 0:
        raise ValueError("evaluate_dataset needs at least one (pred, gt) pair")
    per_category = {}
    for cat, (ci, cu, count) in acc.cats.items():
        per_category[cat] = {
            "iou": (ci / cu) if cu else None,
            "count": count,
            "intersection": ci,
            "union": cu,
        }
    return EvalReport(
        iou=acc.inter / acc.union if acc.union else 1.0,
        pd=acc.hits / acc.targets if acc.targets else 1.0,
        fa=acc.false / acc.pixels,
        n_images=acc.images,
        n_targets=acc.targets,
        per_category=per_category,
        totals={"intersection": acc.inter, "union": acc.union, "hits": acc.hits,
                "false_pixels": acc.false, "pixels": acc.pixels},
        config={"d_match": cfg.d_match, "binarize_threshold": cfg.binarize_threshold,
                "connectivity": cfg.connectivity, "category_margin": cfg.category_margin},
    )
