"""Command-line front end: ``irpseudo {synth,centroids,pmg,update,eval,sweep}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .b2m import point_to_mask
from .core import BinaryMask, ConfigError, EvalConfig, PmgConfig, UpdateConfig
from .ioformats import (
    DatasetManifest,
    FormatError,
    ManifestEntry,
    file_digest,
    load_image,
    load_manifest,
    load_mask,
    save_image,
    save_manifest,
    save_mask,
    write_json,
    write_points,
    write_report,
)
from .metrics import CATEGORIES, evaluate_dataset
from .pmu import connected_components, update_mask
from .synth import (
    CorruptionSpec,
    SceneSpec,
    centroid_labels,
    corrupt_prediction,
    generate_scene,
    jitter_labels,
    make_rng,
    random_scene_spec,
)

log = logging.getLogger("irpseudo")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

SWEEP_PARAMS = ("l_ep", "l_dp", "alpha", "r")


class DataError(RuntimeError):
    """Input data could not be processed."""


# ---------------------------------------------------------------- config


def pmg_config(args) -> PmgConfig:
    return PmgConfig(args.l_ep, args.l_dp, args.alpha, args.invert)


def update_config(args) -> UpdateConfig:
    return UpdateConfig(args.r, args.connectivity)


def eval_config(args) -> EvalConfig:
    return EvalConfig(args.d_match, args.binarize_threshold, args.connectivity, args.category_margin)


def _add_pmg_flags(p):
    g = p.add_argument_group("point-to-mask")
    g.add_argument("--l-ep", type=int, default=25, help="half-extent along the scan direction (default 25)")
    g.add_argument("--l-dp", type=int, default=4, help="half-extent across the scan direction (default 4)")
    g.add_argument("--alpha", type=float, default=0.15, help="weight of the labelled pixel in the threshold")
    g.add_argument("--invert", action="store_true", help="targets are darker than their surroundings")


def _add_update_flags(p):
    g = p.add_argument_group("mask updating")
    g.add_argument("--r", type=float, default=30.0, help="L1 centroid radius for false alarm filtering")


def _add_eval_flags(p):
    g = p.add_argument_group("evaluation")
    g.add_argument("--d-match", type=float, default=3.0, help="centroid L1 radius for Pd matching")
    g.add_argument("--binarize-threshold", type=float, default=0.5,
                   help="fraction of full scale above which a mask pixel is target")
    g.add_argument("--category-margin", type=int, default=8,
                   help="padding of the per-target crop used for size-category IoU")


def _add_common(p, outputs=True):
    p.add_argument("--connectivity", type=int, default=8, choices=(4, 8))
    p.add_argument("--seed", type=int, default=0, help="seed for every stochastic step")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--strict", action="store_true", help="stop at the first bad entry")
    p.add_argument("-v", "--verbose", action="count", default=0)
    if outputs:
        p.add_argument("--run-log", type=Path, default=None,
                       help="where to write the JSON run log (default: inside the output)")


# --------------------------------------------------------------- helpers


def _pool_map(fn, items, jobs):
    items = list(items)
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


def _guarded(fn, entry, *args):
    """Run ``fn`` on one manifest entry, turning failures into an error string."""
    t0 = time.perf_counter()
    try:
        return entry.name, fn(entry, *args), None, time.perf_counter() - t0
    except (OSError, ValueError, DataError) as exc:
        return entry.name, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0


def _need(manifest, entry, key):
    rel = getattr(entry, key)
    if rel is None:
        raise DataError(f"entry has no {key.replace('_', ' ')}")
    return manifest.resolve(rel)


def _digests(paths) -> dict[str, str]:
    return {str(p): file_digest(p) for p in sorted({Path(p) for p in paths}) if Path(p).is_file()}


def _entry_inputs(manifest: DatasetManifest, keys) -> list[Path]:
    out = []
    for e in manifest.entries:
        for k in keys:
            p = manifest.resolve(getattr(e, k))
            if p is not None:
                out.append(p)
    return out


def _write_run_log(args, path: Path, config: dict, inputs, outputs, extra=None):
    doc = {
        "tool": "irpseudo",
        "version": __version__,
        "command": args.command,
        "argv": sys.argv[1:],
        "config": config,
        "inputs": _digests(inputs),
        "outputs": sorted(str(o) for o in outputs),
    }
    if extra:
        doc.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_json(doc, path)


def _report_failures(results) -> int:
    failed = [(name, err) for name, _, err, _ in results if err]
    for name, err in failed:
        log.error("%s: %s", name, err)
    return len(failed)


def _guarded_entry(fn, extra, entry):
    return _guarded(fn, entry, *extra)


def _run_entries(fn, manifest, args, *extra):
    """Apply ``fn`` per entry (in parallel), honouring ``--strict``."""
    work = partial(_guarded_entry, fn, extra)
    if not args.strict:
        return _pool_map(work, manifest.entries, args.jobs)
    results = []
    for e in manifest.entries:
        results.append(work(e))
        if results[-1][2]:
            break
    return results


# ------------------------------------------------------------- pipeline


def _pmg_entry(entry: ManifestEntry, root: Path, cfg: PmgConfig) -> tuple[BinaryMask, int | None]:
    """Initial mask and the source bit depth of the image."""
    if entry.image is None:
        raise DataError("entry has no image")
    image = load_image(root / entry.image)
    for p in entry.points:
        if not p.in_bounds(image.width, image.height):
            raise DataError(f"point {tuple(p)} outside {image.width}x{image.height} image")
    return point_to_mask(image, entry.points, cfg), image.bit_depth


def _pmg_and_save(entry, root, cfg, out_dir):
    mask, depth = _pmg_entry(entry, root, cfg)
    save_mask(mask, out_dir / f"{entry.name}.png")
    return {"area": mask.area, "bit_depth": depth}


def _update_entry(entry, root, cfg, threshold, allow_missing, out_dir):
    manifest = DatasetManifest([], root)
    initial = load_mask(_need(manifest, entry, "initial_mask"), threshold)
    if entry.prediction_mask is None:
        if not allow_missing:
            raise DataError("entry has no prediction mask (use --allow-missing-pred to pass the initial mask through)")
        save_mask(initial, out_dir / f"{entry.name}.png")
        return {"erased": 0, "retrieved": 0, "passthrough": True}
    prediction = load_mask(manifest.resolve(entry.prediction_mask), threshold)
    res = update_mask(initial, prediction, entry.points, cfg)
    save_mask(res.hybrid, out_dir / f"{entry.name}.png")
    return {"erased": res.erased_components, "retrieved": res.retrieved_pixels, "passthrough": False}


def _pair_entry(entry, root, field, masks_dir, threshold):
    manifest = DatasetManifest([], root)
    gt = load_mask(_need(manifest, entry, "gt_mask"), threshold)
    if masks_dir is not None:
        pred_path = masks_dir / f"{entry.name}.png"
        if not pred_path.is_file():
            raise DataError(f"no mask {pred_path}")
    else:
        pred_path = _need(manifest, entry, field)
    return load_mask(pred_path, threshold), gt


# ------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    out = args.out
    for sub in ("images", "masks") + (("predictions",) if args.corrupt else ()):
        (out / sub).mkdir(parents=True, exist_ok=True)
    if args.spec:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        specs = [SceneSpec.from_dict(d) for d in (doc["scenes"] if isinstance(doc, dict) and "scenes" in doc
                                                  else doc if isinstance(doc, list) else [doc])]
    else:
        rng = make_rng(args.seed)
        shapes = tuple(s.strip() for s in args.shapes.split(","))
        specs = [random_scene_spec(rng, width=args.width, height=args.height, n_targets=args.targets,
                                   shapes=shapes, side_range=(args.min_side, args.max_side),
                                   noise_fraction=args.noise_fraction, margin=args.margin,
                                   min_separation=args.min_separation)
                 for _ in range(args.count)]
    corruption = CorruptionSpec(args.drop_probability, args.false_components, args.false_distance,
                                args.dilation, args.seed) if args.corrupt else None
    entries, points, outputs = [], {}, []
    width = max(3, len(str(max(len(specs) - 1, 0))))
    for i, spec in enumerate(specs):
        name = f"scene{i:0{width}d}"
        image, gt, labels = generate_scene(spec)
        save_image(image, out / "images" / f"{name}.png")
        save_mask(gt, out / "masks" / f"{name}.png")
        entry = ManifestEntry(name, f"images/{name}.png", labels, f"masks/{name}.png")
        outputs += [out / entry.image, out / entry.gt_mask]
        if corruption is not None:
            pred = corrupt_prediction(gt, labels, dataclasses.replace(corruption, seed=args.seed + i),
                                      args.connectivity)
            save_mask(pred, out / "predictions" / f"{name}.png")
            entry.prediction_mask = f"predictions/{name}.png"
            outputs.append(out / entry.prediction_mask)
        entries.append(entry)
        points[name] = labels
    save_manifest(DatasetManifest(entries, out), out / "manifest.json")
    write_points(points, out / "points.csv")
    write_json({"scenes": [s.to_dict() for s in specs],
                "corruption": dataclasses.asdict(corruption) if corruption else None}, out / "scenes.json")
    _write_run_log(args, args.run_log or out / "run_log.json",
                   {"seed": args.seed, "corruption": dataclasses.asdict(corruption) if corruption else None},
                   [args.spec] if args.spec else [], outputs + [out / "manifest.json", out / "points.csv"])
    print(f"synth: wrote {len(specs)} scenes to {out}")
    return EXIT_OK


def _mask_sources(args) -> tuple[DatasetManifest, list[Path]]:
    if args.manifest:
        manifest = load_manifest(args.manifest)
        return manifest, [args.manifest]
    masks = sorted(Path(args.masks).glob("*.png"))
    entries = []
    for m in masks:
        img = None
        if args.images:
            cand = Path(args.images) / m.name
            img = str(cand.resolve()) if cand.is_file() else None
        entries.append(ManifestEntry(m.stem, img, [], str(m.resolve())))
    return DatasetManifest(entries, Path(".")), masks


def cmd_centroids(args) -> int:
    """Ground-truth masks -> centroid point labels (optionally jittered)."""
    manifest, inputs = _mask_sources(args)
    points, entries, failures = {}, [], 0
    for i, e in enumerate(manifest.entries):
        try:
            gt = load_mask(_need(manifest, e, "gt_mask"), args.binarize_threshold)
        except (OSError, ValueError, DataError) as exc:
            log.error("%s: %s", e.name, exc)
            failures += 1
            if args.strict:
                break
            continue
        labels = centroid_labels(gt, args.connectivity)
        if args.jitter:
            comps = connected_components(gt, args.connectivity)
            labels = jitter_labels(labels, comps, args.jitter, seed=args.seed + i, shape=gt.shape)
        points[e.name] = labels
        rel = lambda p: None if p is None else str(manifest.resolve(p).resolve())  # noqa: E731
        entries.append(ManifestEntry(e.name, rel(e.image), labels, rel(e.gt_mask),
                                     rel(e.prediction_mask), rel(e.initial_mask)))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_points(points, args.out)
    manifest_out = args.out.with_suffix(".manifest.json")
    save_manifest(DatasetManifest(entries), manifest_out)
    _write_run_log(args, args.run_log or args.out.with_suffix(".run_log.json"),
                   {"jitter": args.jitter, "seed": args.seed, "connectivity": args.connectivity,
                    "binarize_threshold": args.binarize_threshold},
                   inputs + _entry_inputs(manifest, ["gt_mask"]), [args.out, manifest_out])
    n = sum(len(v) for v in points.values())
    print(f"centroids: {n} points for {len(points)} images -> {args.out}")
    return EXIT_DATA if failures else EXIT_OK


def cmd_pmg(args) -> int:
    cfg = pmg_config(args)
    manifest = load_manifest(args.manifest)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if not manifest.entries:
        log.warning("manifest %s has no entries; nothing to do", args.manifest)
    results = _run_entries(_pmg_and_save, manifest, args, manifest.root, cfg, out)
    failures = _report_failures(results)
    done = {name for name, _, err, _ in results if not err}
    entries = []
    for e in manifest.entries:
        if e.name in done:
            entries.append(dataclasses.replace(
                e, image=str(manifest.resolve(e.image).resolve()),
                gt_mask=e.gt_mask and str(manifest.resolve(e.gt_mask).resolve()),
                prediction_mask=e.prediction_mask and str(manifest.resolve(e.prediction_mask).resolve()),
                initial_mask=str((out / f"{e.name}.png").resolve())))
    save_manifest(DatasetManifest(entries), out / "manifest.json")
    timings = {name: round(t, 6) for name, _, _, t in results}
    depths = {name: info["bit_depth"] for name, info, err, _ in results if not err}
    for name, info, err, t in results:
        if not err:
            log.info("%s: %d mask pixels in %.1f ms", name, info["area"], 1e3 * t)
    _write_run_log(args, args.run_log or out / "run_log.json", dataclasses.asdict(cfg),
                   [args.manifest] + _entry_inputs(manifest, ["image"]),
                   [out / f"{n}.png" for n in sorted(done)] + [out / "manifest.json"],
                   {"timing_seconds": timings, "source_bit_depth": depths, "failed": failures})
    total = sum(t for *_, t in results)
    print(f"pmg: {len(done)} masks, {failures} failed, l_ep={cfg.l_ep} l_dp={cfg.l_dp} alpha={cfg.alpha}, "
          f"{1e3 * total / max(len(results), 1):.1f} ms/image -> {out}")
    return EXIT_DATA if failures else EXIT_OK


def cmd_update(args) -> int:
    cfg = update_config(args)
    manifest = load_manifest(args.manifest)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if not manifest.entries:
        log.warning("manifest %s has no entries; nothing to do", args.manifest)
    if any(not e.points for e in manifest.entries):
        log.warning("some entries have no point labels; every predicted component there is erased")
    results = _run_entries(_update_entry, manifest, args, manifest.root, cfg, args.binarize_threshold,
                           args.allow_missing_pred, out)
    failures = _report_failures(results)
    stats = {}
    for name, info, err, _ in results:
        if not err:
            stats[name] = info
            print(f"{name}: erased {info['erased']} components, retrieved {info['retrieved']} pixels"
                  + (" (initial passed through)" if info["passthrough"] else ""))
    _write_run_log(args, args.run_log or out / "run_log.json",
                   {**dataclasses.asdict(cfg), "binarize_threshold": args.binarize_threshold},
                   [args.manifest] + _entry_inputs(manifest, ["initial_mask", "prediction_mask"]),
                   [out / f"{n}.png" for n in sorted(stats)], {"per_image": stats, "failed": failures})
    print(f"update: {len(stats)} hybrid masks, {failures} failed, r={cfg.r} -> {out}")
    return EXIT_DATA if failures else EXIT_OK


def cmd_eval(args) -> int:
    cfg = eval_config(args)
    manifest = load_manifest(args.manifest)
    masks_dir = Path(args.masks) if args.masks else None
    results = _run_entries(_pair_entry, manifest, args, manifest.root, args.field, masks_dir,
                           args.binarize_threshold)
    failures = _report_failures(results)
    pairs = [res for _, res, err, _ in results if not err]
    if not pairs:
        log.error("no valid (prediction, ground truth) pairs")
        return EXIT_DATA
    report = evaluate_dataset(pairs, cfg)
    report_path = args.report
    report_path.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, report_path, {"prediction_source": str(masks_dir) if masks_dir else args.field})
    if args.figure:
        from .plotting import plot_categories
        plot_categories(report, args.figure)
    print(report.headline())
    for cat in CATEGORIES:
        c = report.per_category[cat]
        shown = "   -" if c["iou"] is None else f"{100 * c['iou']:.2f}"
        print(f"  {cat:<8} IoU {shown}  ({c['count']} targets)")
    _write_run_log(args, args.run_log or report_path.with_suffix(".run_log.json"), dataclasses.asdict(cfg),
                   [args.manifest] + _entry_inputs(manifest, ["gt_mask", args.field]),
                   [report_path] + ([args.figure] if args.figure else []), {"failed": failures})
    return EXIT_DATA if failures else EXIT_OK


def parse_values(param: str, values: str | None, span: str | None) -> list:
    cast = int if param in ("l_ep", "l_dp") else float
    if values:
        out = [cast(v) for v in values.split(",") if v.strip()]
    elif span:
        parts = [float(v) for v in span.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"--range must be start:stop:step with step > 0, got {span!r}")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        out = [cast(round(start + k * step, 10)) for k in range(max(n, 0))]
    else:
        out = []
    if not out:
        raise ConfigError("sweep needs a non-empty --values list or --range")
    return out


def _sweep_row(param, value, data, pmg_cfg, upd_cfg, ev_cfg):
    row = {"param": param, "value": value}
    if param == "r":
        cfg = dataclasses.replace(upd_cfg, r=value)
        filtered, hybrid, erased = [], [], 0
        for image, points, gt, pred, initial in data:
            if initial is None:
                initial = point_to_mask(image, points, pmg_cfg)
            res = update_mask(initial, pred, points, cfg)
            filtered.append((res.filtered, gt))
            hybrid.append((res.hybrid, gt))
            erased += res.erased_components
        report = evaluate_dataset(filtered, ev_cfg)
        row["hybrid_iou"] = evaluate_dataset(hybrid, ev_cfg).iou
        row["erased"] = erased
    else:
        cfg = dataclasses.replace(pmg_cfg, **{param: value})
        report = evaluate_dataset([(point_to_mask(image, points, cfg), gt)
                                   for image, points, gt, _, _ in data], ev_cfg)
    row["iou"] = report.iou
    row["pd"] = report.pd
    row["fa"] = report.fa
    for cat in CATEGORIES:
        row[f"iou_{cat}"] = report.per_category[cat]["iou"]
        row[f"n_{cat}"] = report.per_category[cat]["count"]
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def cmd_sweep(args) -> int:
    values = parse_values(args.param, args.values, args.range)
    pmg_cfg, upd_cfg, ev_cfg = pmg_config(args), update_config(args), eval_config(args)
    for v in values:  # validate every value before any work
        if args.param == "r":
            dataclasses.replace(upd_cfg, r=v)
        else:
            dataclasses.replace(pmg_cfg, **{args.param: v})
    manifest = load_manifest(args.manifest)
    data = []
    for e in manifest.entries:
        try:
            image = load_image(_need(manifest, e, "image"))
            gt = load_mask(_need(manifest, e, "gt_mask"), args.binarize_threshold)
            pred = initial = None
            if args.param == "r":
                pred = load_mask(_need(manifest, e, "prediction_mask"), args.binarize_threshold)
                if e.initial_mask is not None:
                    initial = load_mask(manifest.resolve(e.initial_mask), args.binarize_threshold)
        except (OSError, ValueError, DataError) as exc:
            log.error("%s: %s", e.name, exc)
            if args.strict:
                return EXIT_DATA
            continue
        data.append((image, e.points, gt, pred, initial))
    if not data:
        log.error("no usable entries with ground truth%s", " and predictions" if args.param == "r" else "")
        return EXIT_DATA
    rows = _pool_map(partial(_sweep_row, args.param, data=data, pmg_cfg=pmg_cfg, upd_cfg=upd_cfg,
                             ev_cfg=ev_cfg), values, args.jobs)
    cols = ["param", "value", "iou"] + (["hybrid_iou", "erased"] if args.param == "r" else []) + \
        ["pd", "fa"] + [f"iou_{c}" for c in CATEGORIES] + [f"n_{c}" for c in CATEGORIES]
    lines = ["\t".join(cols)] + ["\t".join(_fmt(r[c]) for c in cols) for r in rows]
    text = "\n".join(lines) + "\n"
    outputs = []
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
        outputs.append(args.out)
        if not args.no_plot:
            from .plotting import plot_sweep
            fig = args.figure or args.out.with_suffix(".png")
            plot_sweep(rows, args.param, fig)
            outputs.append(fig)
    elif args.figure and not args.no_plot:
        from .plotting import plot_sweep
        plot_sweep(rows, args.param, args.figure)
        outputs.append(args.figure)
    sys.stdout.write(text)
    if args.run_log or args.out:
        _write_run_log(args, args.run_log or args.out.with_suffix(".run_log.json"),
                       {"param": args.param, "values": values, "pmg": dataclasses.asdict(pmg_cfg),
                        "update": dataclasses.asdict(upd_cfg), "eval": dataclasses.asdict(ev_cfg)},
                       [args.manifest] + _entry_inputs(manifest, ["image", "gt_mask", "prediction_mask",
                                                                   "initial_mask"]), outputs)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irpseudo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic corpus with ground truth")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--spec", type=Path, help="JSON scene spec (one scene, a list, or {'scenes': [...]})")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--targets", type=int, default=1, help="targets per scene")
    p.add_argument("--shapes", default="rectangle", help="comma list of rectangle,gaussian_blob")
    p.add_argument("--min-side", type=int, default=3)
    p.add_argument("--max-side", type=int, default=9)
    p.add_argument("--noise-fraction", type=float, default=0.0, help="noise std relative to contrast")
    p.add_argument("--margin", type=int, default=30)
    p.add_argument("--min-separation", type=int, default=40)
    p.add_argument("--corrupt", action="store_true", help="also write corrupted predictions")
    p.add_argument("--drop-probability", type=float, default=0.0)
    p.add_argument("--false-components", type=int, default=0)
    p.add_argument("--false-distance", type=float, default=100.0)
    p.add_argument("--dilation", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("centroids", help="ground-truth masks -> centroid point labels")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", type=Path)
    src.add_argument("--masks", type=Path, help="directory of ground-truth mask PNGs")
    p.add_argument("--images", type=Path, help="image directory matched to --masks by file name")
    p.add_argument("--out", type=Path, required=True, help="points CSV to write")
    p.add_argument("--jitter", type=float, default=0.0,
                   help="coarse-centroid noise, std as a fraction of target size (e.g. 0.125)")
    p.add_argument("--binarize-threshold", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_centroids)

    p = sub.add_parser("pmg", help="initial masks from point labels")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_pmg_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_pmg)

    p = sub.add_parser("update", help="hybrid masks from initial masks and predictions")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--allow-missing-pred", action="store_true")
    p.add_argument("--binarize-threshold", type=float, default=0.5)
    _add_update_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("eval", help="IoU / Pd / Fa report")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--field", default="prediction_mask",
                   choices=("prediction_mask", "initial_mask", "gt_mask"), help="manifest field holding the masks")
    p.add_argument("--masks", type=Path, help="directory of <name>.png masks to evaluate instead")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--figure", type=Path, help="also draw a per-category IoU bar chart")
    _add_eval_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="IoU table over one parameter")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    vals = p.add_mutually_exclusive_group(required=True)
    vals.add_argument("--values", help="comma-separated values")
    vals.add_argument("--range", help="start:stop:step, inclusive")
    p.add_argument("--out", type=Path, help="tab-separated table (a .png figure is drawn beside it)")
    p.add_argument("--figure", type=Path, help="figure path (default: table path with .png)")
    p.add_argument("--no-plot", action="store_true")
    _add_pmg_flags(p)
    _add_update_flags(p)
    _add_eval_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def _validate(args) -> None:
    """Check every override against its config type before doing any work."""
    if hasattr(args, "l_ep"):
        pmg_config(args)
    if hasattr(args, "r"):
        update_config(args)
    if hasattr(args, "d_match"):
        eval_config(args)
    if hasattr(args, "binarize_threshold"):
        EvalConfig(binarize_threshold=args.binarize_threshold)
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if getattr(args, "jitter", 0) < 0:
        raise ConfigError("--jitter must be >= 0")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (OSError, FormatError, DataError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
