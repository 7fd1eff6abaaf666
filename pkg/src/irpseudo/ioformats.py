"""Reading and writing images, masks, point annotations, manifests and reports.

The file formats are described in ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import __version__
from .core import BinaryMask, GrayImage, InvalidAnnotationError, PointLabel
from .metrics import CATEGORIES, EvalReport

log = logging.getLogger(__name__)

MANIFEST_SCHEMA = "irpseudo.manifest/1"
REPORT_SCHEMA = "irpseudo.eval-report/1"


class FormatError(ValueError):
    """A file exists but its content cannot be used."""


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _open_raster(path) -> Image.Image:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FormatError(f"cannot read raster {path}: {exc}") from exc
    return img


def _luminance(rgb: np.ndarray) -> np.ndarray:
    """Integer-exact ITU-R 601 luma, rounded half up."""
    rgb = rgb.astype(np.int64)
    return (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000


def _raster_array(img: Image.Image, path) -> tuple[np.ndarray, int]:
    """Pixel array and nominal bit depth of a single- or multi-channel raster."""
    mode = img.mode
    if mode == "1":
        return np.asarray(img, dtype=np.uint8) * 255, 8
    if mode in ("L", "LA"):
        arr = np.asarray(img)
        return (arr[..., 0] if arr.ndim == 3 else arr), 8
    if mode == "P":
        img = img.convert("RGB")
        mode = "RGB"
    if mode in ("RGB", "RGBA"):
        return _luminance(np.asarray(img)[..., :3]), 8
    if mode.startswith("I;16"):
        return np.asarray(img).astype(np.uint16), 16
    if mode == "I":
        arr = np.asarray(img)
        if arr.min() < 0 or arr.max() > 65535:
            raise FormatError(f"{path}: 32-bit integer rasters are not supported")
        return arr.astype(np.uint16), 16
    raise FormatError(f"{path}: unsupported raster mode {mode!r} (need 8- or 16-bit grayscale or RGB)")


def load_image(path: str | os.PathLike) -> GrayImage:
    """Load an 8/16-bit grayscale raster without rescaling.  Color inputs are
    reduced to integer luma."""
    arr, depth = _raster_array(_open_raster(path), path)
    return GrayImage(arr.astype(np.float64), depth)


def save_image(image: GrayImage, path: str | os.PathLike) -> None:
    data = image.data
    if not np.array_equal(data, np.rint(data)):
        raise FormatError("only integer-valued images can be written losslessly")
    depth = image.bit_depth or (8 if data.max() <= 255 else 16)
    if depth == 8 and data.max() <= 255:
        Image.fromarray(data.astype(np.uint8), mode="L").save(path)
    elif data.max() <= 65535:
        Image.fromarray(data.astype(np.uint16)).save(path)
    else:
        raise FormatError("intensities exceed the 16-bit range")


def save_mask(mask: BinaryMask, path: str | os.PathLike) -> None:
    """8-bit raster, 0 for background and 255 for target."""
    Image.fromarray(mask.data.astype(np.uint8) * 255, mode="L").save(path)


def load_mask(path: str | os.PathLike, threshold: float = 0.5) -> BinaryMask:
    """Read a mask raster (or ``.npy`` probability array) and binarize it.

    A pixel is target when its value exceeds ``threshold`` times the full
    scale of its storage type (255, 65535, or 1.0 for floats and booleans).
    """
    path = Path(path)
    if path.suffix == ".npy":
        if not path.is_file():
            raise FileNotFoundError(f"no such mask file: {path}")
        arr = np.load(path, allow_pickle=False)
        if arr.ndim != 2:
            raise FormatError(f"{path}: expected a 2-D array, got shape {arr.shape}")
        full = {np.dtype(np.uint8): 255.0, np.dtype(np.uint16): 65535.0}.get(arr.dtype, 1.0)
    else:
        img = _open_raster(path)
        if img.mode == "1":
            arr, full = np.asarray(img, dtype=np.uint8), 1.0
        else:
            arr, depth = _raster_array(img, path)
            full = 255.0 if depth == 8 else 65535.0
    arr = np.asarray(arr, dtype=np.float64)
    if not np.isin(arr, (0.0, full)).all():
        log.info("%s is not binary; binarizing at %.3g of full scale", path, threshold)
    return BinaryMask(arr > threshold * full)


def load_points(path: str | os.PathLike,
                image_sizes: dict[str, tuple[int, int]] | None = None) -> dict[str, list[PointLabel]]:
    """Read ``image,x,y`` records grouped by image in first-seen order.

    ``image_sizes`` maps image ids to ``(width, height)`` for bounds checks.
    """
    path = Path(path)
    out: dict[str, list[PointLabel]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            fields = [f.strip() for f in row]
            if len(fields) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields 'image,x,y', got {len(fields)}")
            name, xs, ys = fields
            if not out and (name, xs, ys) == ("image", "x", "y"):
                continue
            try:
                x, y = int(xs), int(ys)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: coordinates must be integers, got {xs!r}, {ys!r}") from None
            if not name:
                raise FormatError(f"{path}:{lineno}: empty image identifier")
            if x < 0 or y < 0:
                raise InvalidAnnotationError(f"{path}:{lineno}: negative coordinate ({x}, {y}) for {name}")
            if image_sizes is not None and name in image_sizes:
                w, h = image_sizes[name]
                if x >= w or y >= h:
                    raise InvalidAnnotationError(
                        f"{path}:{lineno}: point ({x}, {y}) outside {w}x{h} image {name}")
            out.setdefault(name, []).append(PointLabel(x, y))
    return out


def write_points(points: dict[str, list[PointLabel]], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("image", "x", "y"))
        for name, pts in points.items():
            for p in pts:
                w.writerow((name, p.x, p.y))


@dataclass
class ManifestEntry:
    name: str
    image: str | None = None
    points: list[PointLabel] = field(default_factory=list)
    gt_mask: str | None = None
    prediction_mask: str | None = None
    initial_mask: str | None = None


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path = Path(".")

    def resolve(self, rel: str | None) -> Path | None:
        return None if rel is None else (self.root / rel)

    def __len__(self) -> int:
        return len(self.entries)


def raster_size(path) -> tuple[int, int]:
    with Image.open(path) as img:
        return img.size


def load_manifest(path: str | os.PathLike, check_bounds: bool = True) -> DatasetManifest:
    """Read a JSON manifest; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise FormatError(f"{path}: schema must be {MANIFEST_SCHEMA!r}, got {doc.get('schema')!r}")
    root = path.parent
    from_file = load_points(root / doc["points_file"]) if doc.get("points_file") else {}
    entries = []
    for i, e in enumerate(doc.get("entries", [])):
        if "name" not in e:
            raise FormatError(f"{path}: entry {i} has no name")
        pts = e.get("points")
        pts = [PointLabel(int(x), int(y)) for x, y in pts] if pts is not None else from_file.get(e["name"], [])
        entry = ManifestEntry(e["name"], e.get("image"), pts, e.get("gt_mask"),
                              e.get("prediction_mask"), e.get("initial_mask"))
        if check_bounds and entry.image and pts and (root / entry.image).is_file():
            w, h = raster_size(root / entry.image)
            for p in pts:
                if not p.in_bounds(w, h):
                    raise InvalidAnnotationError(
                        f"{path}: point {tuple(p)} outside {w}x{h} image {entry.name}")
        entries.append(entry)
    return DatasetManifest(entries, root)


def save_manifest(manifest: DatasetManifest, path: str | os.PathLike) -> None:
    entries = []
    for e in manifest.entries:
        d = {"name": e.name, "points": [[p.x, p.y] for p in e.points]}
        for key in ("image", "gt_mask", "prediction_mask", "initial_mask"):
            if getattr(e, key) is not None:
                d[key] = getattr(e, key)
        entries.append(d)
    Path(path).write_text(json.dumps({"schema": MANIFEST_SCHEMA, "entries": entries}, indent=1) + "\n",
                          encoding="utf-8")


def report_to_dict(report: EvalReport, config: dict | None = None) -> dict:
    per_cat = {c: report.per_category.get(c, {"iou": None, "count": 0, "intersection": 0, "union": 0})
               for c in CATEGORIES}
    return {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "iou": report.iou,
        "pd": report.pd,
        "fa": report.fa,
        "n_images": report.n_images,
        "n_targets": report.n_targets,
        "per_category": per_cat,
        "totals": report.totals,
        "config": {**report.config, **(config or {})},
    }


def write_report(report: EvalReport, path: str | os.PathLike, config: dict | None = None) -> None:
    """JSON report; ``config`` adds the generation/update settings to the
    evaluation settings already carried by the report."""
    Path(path).write_text(json.dumps(report_to_dict(report, config), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_report(path: str | os.PathLike) -> EvalReport:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != REPORT_SCHEMA:
        raise FormatError(f"{path}: schema must be {REPORT_SCHEMA!r}, got {doc.get('schema')!r}")
    return EvalReport(doc["iou"], doc["pd"], doc["fa"], doc["n_images"], doc["n_targets"],
                      doc["per_category"], doc.get("totals", {}), doc.get("config", {}))


def write_json(obj, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                          encoding="utf-8")


def _jsonable(o):
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, (np.integer, np.floating)):
        return o.item()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
