"""Batch command-line front end.

Datasets are described by a JSON manifest: a ``defaults`` block of camera
parameters plus one entry per image, each optionally overriding the
defaults (required for mixed-camera datasets) and pointing at box/mask
annotation files. Paths are resolved relative to the manifest location and
outputs mirror that layout under ``--out-dir``; a transformed manifest is
written alongside so commands can be chained.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import ap_stats, labels, weighting
from .geometry import CameraIntrinsics, FieldOfView, focal_from_fov
from .imageio import read_image, write_image, write_pfm, write_pnm
from .resample import crop_to_fov, forward_shape, pit_forward, pit_reverse

__all__ = ["main"]


class ManifestError(ValueError):
    pass


def load_manifest(path: str) -> tuple[dict, str]:
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed manifest JSON: {exc}") from exc
    if not isinstance(manifest.get("entries"), list):
        raise ManifestError("manifest must contain an 'entries' list")
    return manifest, os.path.dirname(os.path.abspath(path))


def resolve_intrinsics(entry: dict, defaults: dict, width: int, height: int) -> CameraIntrinsics:
    """Per-entry camera parameters override the dataset defaults."""
    params = {**defaults, **{k: v for k, v in entry.items() if k in
                             ("fov_x", "fov_y", "fx", "fy")}}
    if "fx" in params and "fy" in params:
        return CameraIntrinsics(width=width, height=height,
                                fx=float(params["fx"]), fy=float(params["fy"]))
    if "fov_x" in params and "fov_y" in params:
        fov = FieldOfView(float(params["fov_x"]), float(params["fov_y"]))
        return CameraIntrinsics(
            width=width, height=height,
            fx=focal_from_fov(width, fov.fov_x),
            fy=focal_from_fov(height, fov.fov_y),
        )
    raise ManifestError(
        f"entry {entry.get('image_path')!r}: needs fov_x/fov_y or fx/fy "
        "(per-entry or in defaults)"
    )


def _resolve_path(base: str, rel: str) -> str:
    return rel if os.path.isabs(rel) else os.path.join(base, rel)


def _mirror_path(out_dir: str, base: str, src: str) -> str:
    rel = os.path.relpath(os.path.abspath(src), base)
    if rel.startswith(".."):
        rel = os.path.basename(src)
    dst = os.path.join(out_dir, rel)
    os.makedirs(os.path.dirname(dst), exist_ok=True)
    return dst


def _load_entry_image(entry: dict, base: str) -> tuple[np.ndarray, str]:
    path = entry.get("image_path")
    if not path:
        raise ManifestError("entry missing image_path")
    full = _resolve_path(base, path)
    if not os.path.exists(full):
        raise ManifestError(f"missing image file {full}")
    return read_image(full), full


def _load_entry_boxes(entry, base, expected_space):
    path = entry.get("boxes_path")
    if not path:
        return None, None
    full = _resolve_path(base, path)
    if not os.path.exists(full):
        raise ManifestError(f"missing boxes file {full}")
    with open(full) as fh:
        records = labels.boxes_from_jsonl(fh.read())
    for image_id, space, _ in records:
        if space != expected_space:
            raise ManifestError(
                f"{full}: box in space {space!r}, expected {expected_space!r}"
            )
    return records, full


def _load_entry_mask(entry, base):
    path = entry.get("mask_path")
    if not path:
        return None, None
    full = _resolve_path(base, path)
    if not os.path.exists(full):
        raise ManifestError(f"missing mask file {full}")
    mask = read_image(full)
    if mask.ndim == 3:
        mask = mask[:, :, 0]
    return mask, full


def _process_forward(entry, base, out_dir, args):
    image, image_path = _load_entry_image(entry, base)
    intrinsics = resolve_intrinsics(entry, args.defaults, image.shape[1], image.shape[0])
    start = time.perf_counter()
    transformed = pit_forward(image, intrinsics)
    elapsed = time.perf_counter() - start
    new_entry = dict(entry)
    outputs, n_boxes, n_masks = [], 0, 0
    dst = _mirror_path(out_dir, base, image_path)
    write_image(dst, transformed)
    outputs.append(dst)
    new_entry["image_path"] = os.path.relpath(dst, out_dir)
    # Record original dims so `reverse` need not reconstruct them.
    new_entry["orig_width"] = intrinsics.width
    new_entry["orig_height"] = intrinsics.height
    mask, mask_path = _load_entry_mask(entry, base)
    if mask is not None:
        mdst = _mirror_path(out_dir, base, mask_path)
        write_image(mdst, labels.mask_forward(mask, intrinsics))
        outputs.append(mdst)
        new_entry["mask_path"] = os.path.relpath(mdst, out_dir)
        n_masks = 1
    records, boxes_path = _load_entry_boxes(entry, base, "original")
    if records is not None:
        moved = [labels.box_forward(b, intrinsics) for _, _, b in records]
        image_id = records[0][0] if records else entry.get("image_path", "")
        bdst = _mirror_path(out_dir, base, boxes_path)
        with open(bdst, "w") as fh:
            fh.write(labels.boxes_to_jsonl(moved, image_id, "pit"))
        outputs.append(bdst)
        new_entry["boxes_path"] = os.path.relpath(bdst, out_dir)
        n_boxes = len(moved)
    return new_entry, outputs, elapsed, n_boxes, n_masks


def _process_reverse(entry, base, out_dir, args):
    image, image_path = _load_entry_image(entry, base)
    # Manifest intrinsics describe the original camera; derive its dims from
    # the arc-space image dims by inverting the extent shrink.
    intrinsics = _original_intrinsics_for_pit_image(entry, args.defaults, image.shape)
    start = time.perf_counter()
    restored = pit_reverse(image, intrinsics)
    elapsed = time.perf_counter() - start
    new_entry = dict(entry)
    outputs, n_boxes, n_masks = [], 0, 0
    dst = _mirror_path(out_dir, base, image_path)
    write_image(dst, restored)
    outputs.append(dst)
    new_entry["image_path"] = os.path.relpath(dst, out_dir)
    mask, mask_path = _load_entry_mask(entry, base)
    if mask is not None:
        mdst = _mirror_path(out_dir, base, mask_path)
        write_image(mdst, labels.mask_reverse(mask, intrinsics))
        outputs.append(mdst)
        new_entry["mask_path"] = os.path.relpath(mdst, out_dir)
        n_masks = 1
    records, boxes_path = _load_entry_boxes(entry, base, "pit")
    if records is not None:
        moved = [labels.box_reverse(b, intrinsics) for _, _, b in records]
        image_id = records[0][0] if records else entry.get("image_path", "")
        bdst = _mirror_path(out_dir, base, boxes_path)
        with open(bdst, "w") as fh:
            fh.write(labels.boxes_to_jsonl(moved, image_id, "original"))
        outputs.append(bdst)
        new_entry["boxes_path"] = os.path.relpath(bdst, out_dir)
        n_boxes = len(moved)
    return new_entry, outputs, elapsed, n_boxes, n_masks


def _original_intrinsics_for_pit_image(entry, defaults, pit_shape):
    """Search the original dims whose arc-space extents match the given image."""
    if "orig_width" in entry and "orig_height" in entry:
        return resolve_intrinsics(entry, defaults, int(entry["orig_width"]),
                                  int(entry["orig_height"]))
    # Extents shrink by at most ~36% (90-degree axis shrinks by pi/4), so a
    # bounded scan over candidate original dims recovers them exactly.
    h_pit, w_pit = pit_shape[0], pit_shape[1]
    width = _invert_extent(entry, defaults, w_pit, axis="x", other=h_pit)
    height = _invert_extent(entry, defaults, h_pit, axis="y", other=w_pit)
    return resolve_intrinsics(entry, defaults, width, height)


def _invert_extent(entry, defaults, pit_extent, axis, other):
    for candidate in range(pit_extent, 2 * pit_extent + 2):
        if axis == "x":
            intr = resolve_intrinsics(entry, defaults, candidate, other)
            if forward_shape(intr)[1] == pit_extent:
                return candidate
        else:
            intr = resolve_intrinsics(entry, defaults, other, candidate)
            if forward_shape(intr)[0] == pit_extent:
                return candidate
    raise ManifestError(
        f"cannot recover original {axis} extent for arc extent {pit_extent}; "
        "add orig_width/orig_height to the entry"
    )


def _process_crop(entry, base, out_dir, args):
    image, image_path = _load_entry_image(entry, base)
    intrinsics = resolve_intrinsics(entry, args.defaults, image.shape[1], image.shape[0])
    start = time.perf_counter()
    cropped, new_intrinsics = crop_to_fov(image, intrinsics, args.target_fovx)
    elapsed = time.perf_counter() - start
    new_entry = dict(entry)
    outputs, n_boxes, n_masks = [], 0, 0
    dst = _mirror_path(out_dir, base, image_path)
    write_image(dst, cropped)
    outputs.append(dst)
    new_entry["image_path"] = os.path.relpath(dst, out_dir)
    new_entry["fov_x"] = new_intrinsics.fov_x
    new_entry["fov_y"] = new_intrinsics.fov_y
    offset = (intrinsics.width - new_intrinsics.width) // 2
    mask, mask_path = _load_entry_mask(entry, base)
    if mask is not None:
        mdst = _mirror_path(out_dir, base, mask_path)
        write_image(mdst, np.ascontiguousarray(
            mask[:, offset : offset + new_intrinsics.width]))
        outputs.append(mdst)
        new_entry["mask_path"] = os.path.relpath(mdst, out_dir)
        n_masks = 1
    records, boxes_path = _load_entry_boxes(entry, base, "original")
    if records is not None:
        kept = labels.boxes_crop([b for _, _, b in records], intrinsics,
                                 new_intrinsics.width, args.min_visible)
        image_id = records[0][0] if records else ""
        bdst = _mirror_path(out_dir, base, boxes_path)
        with open(bdst, "w") as fh:
            fh.write(labels.boxes_to_jsonl(kept, image_id, "original"))
        outputs.append(bdst)
        new_entry["boxes_path"] = os.path.relpath(bdst, out_dir)
        n_boxes = len(kept)
    return new_entry, outputs, elapsed, n_boxes, n_masks


def _process_bench(entry, base, out_dir, args):
    image, _ = _load_entry_image(entry, base)
    intrinsics = resolve_intrinsics(entry, args.defaults, image.shape[1], image.shape[0])
    start = time.perf_counter()
    pit_forward(image, intrinsics)
    elapsed = time.perf_counter() - start
    return dict(entry), [], elapsed, 0, 0


PER_IMAGE_COMMANDS = {
    "forward": _process_forward,
    "reverse": _process_reverse,
    "crop": _process_crop,
    "bench": _process_bench,
}


def _run_per_image(command, manifest, base, args):
    out_dir = args.out_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    worker = PER_IMAGE_COMMANDS[command]
    report = {
        "command": command,
        "images": 0,
        "boxes": 0,
        "masks": 0,
        "per_image": [],
        "outputs": [],
        "errors": [],
    }
    new_entries = [None] * len(manifest["entries"])

    def job(entry):
        return worker(entry, base, out_dir, args)

    failures = 0
    stop = False
    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        futures = [pool.submit(job, entry) for entry in manifest["entries"]]
        for index, (entry, future) in enumerate(zip(manifest["entries"], futures)):
            if stop:
                future.cancel()
                continue
            try:
                new_entry, outputs, elapsed, n_boxes, n_masks = future.result()
            except (ManifestError, ValueError, OSError) as exc:
                failures += 1
                report["errors"].append(
                    {"entry": entry.get("image_path"), "error": str(exc)}
                )
                if not args.keep_going:
                    stop = True
                continue
            new_entries[index] = new_entry
            report["images"] += 1
            report["boxes"] += n_boxes
            report["masks"] += n_masks
            report["per_image"].append(
                {"image": entry.get("image_path"), "seconds": elapsed}
            )
            report["outputs"].extend(outputs)
    times = sorted(item["seconds"] for item in report["per_image"])
    if times:
        report["mean_seconds"] = sum(times) / len(times)
        report["p50_seconds"] = times[len(times) // 2]
        report["p90_seconds"] = times[min(len(times) - 1, int(len(times) * 0.9))]
    if command != "bench" and out_dir:
        out_manifest = {
            "defaults": manifest.get("defaults", {}),
            "entries": [e for e in new_entries if e is not None],
        }
        if command == "crop":
            out_manifest["defaults"] = dict(out_manifest["defaults"])
            out_manifest["defaults"].pop("fov_x", None)
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(out_manifest, fh, indent=2)
        report["outputs"].append(path)
    return report, failures


def _run_weights(manifest, base, args):
    os.makedirs(args.out_dir, exist_ok=True)
    report = {"command": "weights", "images": 0, "per_image": [], "outputs": [],
              "errors": []}
    seen: dict[CameraIntrinsics, str] = {}
    failures = 0
    for entry in manifest["entries"]:
        try:
            image, _ = _load_entry_image(entry, base)
            intrinsics = resolve_intrinsics(entry, args.defaults,
                                            image.shape[1], image.shape[0])
        except (ManifestError, ValueError, OSError) as exc:
            failures += 1
            report["errors"].append({"entry": entry.get("image_path"),
                                     "error": str(exc)})
            if not args.keep_going:
                break
            continue
        report["images"] += 1
        if intrinsics in seen:
            continue
        start = time.perf_counter()
        matrix = weighting.build_weight_matrix(intrinsics)
        elapsed = time.perf_counter() - start
        stem = (f"weights_{intrinsics.width}x{intrinsics.height}"
                f"_fx{intrinsics.fx:.3f}_fy{intrinsics.fy:.3f}")
        pfm_path = os.path.join(args.out_dir, stem + ".pfm")
        write_pfm(pfm_path, matrix.weights)
        lo, hi = float(matrix.weights.min()), float(matrix.weights.max())
        scale = (matrix.weights - lo) / (hi - lo) if hi > lo else np.zeros_like(matrix.weights)
        write_pnm(os.path.join(args.out_dir, stem + ".pgm"),
                  np.floor(scale * 255.0 + 0.5).astype(np.uint8))
        seen[intrinsics] = pfm_path
        report["per_image"].append({"image": entry.get("image_path"),
                                    "seconds": elapsed})
        report["outputs"].extend([pfm_path, os.path.join(args.out_dir, stem + ".pgm")])
    return report, failures


def _run_apstats(manifest, base, args):
    os.makedirs(args.out_dir, exist_ok=True)
    report = {"command": "apstats", "images": 0, "boxes": 0, "masks": 0,
              "per_image": [], "outputs": [], "errors": []}
    foreground = {int(c) for c in args.foreground.split(",")} if args.foreground else set()
    hist = ap_stats.empty_histogram()
    failures = 0
    for entry in manifest["entries"]:
        try:
            image, _ = _load_entry_image(entry, base)
            intrinsics = resolve_intrinsics(entry, args.defaults,
                                            image.shape[1], image.shape[0])
            start = time.perf_counter()
            if args.source == "mask":
                mask, _ = _load_entry_mask(entry, base)
                if mask is None:
                    raise ManifestError(
                        f"entry {entry.get('image_path')!r} has no mask_path")
                hist = ap_stats.accumulate_mask(hist, mask, foreground, intrinsics)
                report["masks"] += 1
            else:
                records, _ = _load_entry_boxes(entry, base, "original")
                boxes = [b for _, _, b in records] if records else []
                hist = ap_stats.accumulate_boxes(hist, boxes, intrinsics)
                report["boxes"] += len(boxes)
            elapsed = time.perf_counter() - start
        except (ManifestError, ValueError, OSError) as exc:
            failures += 1
            report["errors"].append({"entry": entry.get("image_path"),
                                     "error": str(exc)})
            if not args.keep_going:
                break
            continue
        report["images"] += 1
        report["per_image"].append({"image": entry.get("image_path"),
                                    "seconds": elapsed})
    csv_text, heat = ap_stats.export_heatmap(hist)
    csv_path = os.path.join(args.out_dir, "apstats.csv")
    pgm_path = os.path.join(args.out_dir, "apstats.pgm")
    with open(csv_path, "w") as fh:
        fh.write(csv_text)
    write_pnm(pgm_path, heat)
    report["outputs"].extend([csv_path, pgm_path])
    report["total_counts"] = hist.total
    return report, failures


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pit",
        description="Cross-FoV dataset transforms: arc-space remapping, "
                    "annotation transforms, loss weights and angle statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("forward", "remap images (plus masks/boxes) into arc space"),
        ("reverse", "remap arc-space images/masks/boxes back to plane space"),
        ("crop", "center-crop images to a narrower horizontal view angle"),
        ("weights", "emit per-camera loss weight matrices"),
        ("apstats", "accumulate angular-position foreground statistics"),
        ("bench", "timing-only forward pass"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--manifest", required=True, help="dataset manifest JSON")
        cmd.add_argument("--out-dir", default=None,
                         help="output directory (mirror of input layout)")
        cmd.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                         help="parallel per-image workers")
        cmd.add_argument("--keep-going", action="store_true",
                         help="continue past per-entry failures")
        cmd.add_argument("--report", default=None,
                         help="write the JSON report here instead of stdout")
        if name == "crop":
            cmd.add_argument("--target-fovx", type=float, required=True,
                             dest="target_fovx",
                             help="target horizontal view angle, degrees")
            cmd.add_argument("--min-visible", type=float, default=0.3,
                             dest="min_visible",
                             help="minimum surviving area fraction for boxes")
        if name == "apstats":
            cmd.add_argument("--source", choices=("mask", "boxes"), default="mask")
            cmd.add_argument("--foreground", default="",
                             help="comma-separated foreground class ids")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest, base = load_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    args.defaults = manifest.get("defaults", {})
    if args.command not in ("bench",) and not args.out_dir:
        print("error: --out-dir is required for this command", file=sys.stderr)
        return 2
    try:
        if args.command == "weights":
            report, failures = _run_weights(manifest, base, args)
        elif args.command == "apstats":
            report, failures = _run_apstats(manifest, base, args)
        else:
            report, failures = _run_per_image(args.command, manifest, base, args)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
