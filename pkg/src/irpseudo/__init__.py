"""Pseudo masks for infrared small targets from single-point labels."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BinaryMask,
    BoundingBox,
    ConfigError,
    DimensionMismatchError,
    EvalConfig,
    GrayImage,
    InvalidAnnotationError,
    PmgConfig,
    PointLabel,
    ProbMap,
    UpdateConfig,
    clamp_box,
)
from .p2b import directional_profile, estimate_boundary, point_to_box  # noqa: E402
from .b2m import (  # noqa: E402
    directional_probability,
    fuse_and_binarize,
    global_probability,
    normalize_probability,
    pixel_threshold,
    point_to_mask,
)
from .pmu import (  # noqa: E402
    connected_components,
    false_alarm_filter,
    missed_detection_retrieve,
    update_masks,
)
from .metrics import (  # noqa: E402
    evaluate_dataset,
    false_alarm_rate,
    iou,
    probability_of_detection,
    size_category,
)

__all__ = [
    "BinaryMask", "BoundingBox", "ConfigError", "DimensionMismatchError", "EvalConfig",
    "GrayImage", "InvalidAnnotationError", "PmgConfig", "PointLabel", "ProbMap", "UpdateConfig",
    "clamp_box", "directional_profile", "estimate_boundary", "point_to_box",
    "directional_probability", "fuse_and_binarize", "global_probability", "normalize_probability",
    "pixel_threshold", "point_to_mask", "connected_components", "false_alarm_filter",
    "missed_detection_retrieve", "update_masks", "evaluate_dataset", "false_alarm_rate", "iou",
    "probability_of_detection", "size_category",
]
