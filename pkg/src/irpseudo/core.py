"""Shared data model: rasters, point labels, boxes, probability maps and configs.

Coordinates are ``(x, y)`` = (column, row) with the origin at the top-left
pixel.  Arrays are stored row-major, so a pixel ``(x, y)`` lives at
``array[y, x]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ConfigError(ValueError):
    """A configuration value violates its invariants."""


class InvalidAnnotationError(ValueError):
    """A point label or box does not fit the image it refers to."""


class DimensionMismatchError(ValueError):
    """Two rasters that must share a shape do not."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel intensity raster in the source's native scale.

    ``bit_depth`` records where the data came from (8, 16, or ``None`` for
    synthetic/float sources); the algorithms never rescale by it.
    """

    data: np.ndarray
    bit_depth: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D raster, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("intensities must be finite")
        if arr.min() < 0:
            raise ValueError("intensities must be non-negative")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __getitem__(self, point) -> float:
        x, y = point
        return float(self.data[y, x])

    def inverted(self) -> "GrayImage":
        """Flip polarity so dark targets become bright ones."""
        return GrayImage(self.data.max() - self.data, self.bit_depth)


class PointLabel(NamedTuple):
    x: int
    y: int

    def in_bounds(self, width: int, height: int) -> bool:
        return 0 <= self.x < width and 0 <= self.y < height


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with inclusive pixel bounds."""

    left: int
    right: int
    top: int
    bottom: int

    def __post_init__(self):
        if self.left > self.right or self.top > self.bottom:
            raise ValueError(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def slices(self) -> tuple[slice, slice]:
        """Row/column slices for indexing a row-major array."""
        return slice(self.top, self.bottom + 1), slice(self.left, self.right + 1)

    def contains(self, point: PointLabel) -> bool:
        return self.left <= point.x <= self.right and self.top <= point.y <= self.bottom

    def crop(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.slices]


def clamp_box(box: BoundingBox, width: int, height: int) -> BoundingBox:
    """Intersect ``box`` with the image rectangle ``[0, width) x [0, height)``."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    left, right = max(box.left, 0), min(box.right, width - 1)
    top, bottom = max(box.top, 0), min(box.bottom, height - 1)
    if left > right or top > bottom:
        raise InvalidAnnotationError(f"box {box} lies entirely outside a {width}x{height} image")
    return BoundingBox(left, right, top, bottom)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Full-image 0/1 raster stored as a boolean array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("mask values must be 0 or 1")
            arr = arr.astype(bool)
        object.__setattr__(self, "data", _frozen(arr))

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def area(self) -> int:
        return int(self.data.sum())

    def _check(self, other: "BinaryMask") -> None:
        if self.shape != other.shape:
            raise DimensionMismatchError(f"mask shapes differ: {self.shape} vs {other.shape}")

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        self._check(other)
        return BinaryMask(self.data | other.data)

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        self._check(other)
        return BinaryMask(self.data & other.data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.shape, self.data.tobytes()))

    def issubset(self, other: "BinaryMask") -> bool:
        self._check(other)
        return not np.any(self.data & ~other.data)

    def __repr__(self) -> str:
        return f"BinaryMask({self.width}x{self.height}, area={self.area})"


@dataclass(frozen=True, eq=False)
class ProbMap:
    """Target probabilities over a box; ``values[i, j]`` is pixel ``(left+j, top+i)``."""

    box: BoundingBox
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.box.height, self.box.width):
            raise ValueError(f"values shape {vals.shape} does not cover box {self.box}")
        if vals.size and (vals.min() < 0 or vals.max() > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(vals))


@dataclass(frozen=True)
class PmgConfig:
    """Point-to-mask parameters.

    l_ep is the half-extent along each scan direction (the cropping size is
    ``2 * l_ep + 1``), l_dp the half-extent across it, and alpha the weight
    of the annotated pixel in the B2M threshold.
    """

    l_ep: int = 25
    l_dp: int = 4
    alpha: float = 0.15
    invert: bool = False

    def __post_init__(self):
        if int(self.l_ep) != self.l_ep or self.l_ep < 1:
            raise ConfigError(f"l_ep must be an integer >= 1, got {self.l_ep}")
        if int(self.l_dp) != self.l_dp or self.l_dp < 0:
            raise ConfigError(f"l_dp must be an integer >= 0, got {self.l_dp}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def crop_size(self) -> int:
        return 2 * self.l_ep + 1


@dataclass(frozen=True)
class UpdateConfig:
    r: float = 30.0
    connectivity: int = 8

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigError(f"r must be positive, got {self.r}")
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation knobs.

    ``category_margin`` is the padding (pixels) around each ground-truth
    target's bounding box that forms the crop used for per-size-category IoU.
    """

    d_match: float = 3.0
    binarize_threshold: float = 0.5
    connectivity: int = 8
    category_margin: int = 8

    def __post_init__(self):
        if self.d_match < 0:
            raise ConfigError(f"d_match must be >= 0, got {self.d_match}")
        if not 0.0 < self.binarize_threshold < 1.0:
            raise ConfigError(f"binarize_threshold must lie in (0, 1), got {self.binarize_threshold}")
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.category_margin < 0:
            raise ConfigError("category_margin must be >= 0")
