"""Detection-box and segmentation-mask transforms between image spaces.

Boxes are axis-aligned in pixel coordinates of a declared space ("original"
plane space or "pit" arc space). Because the per-axis maps are monotone and
the remap preserves horizontal/vertical lines, boxes transform exactly by
mapping their corners.

Masks are single-channel ``uint8`` class-index rasters and always move
through nearest-neighbor resampling so no class blending can occur.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    CameraIntrinsics,
    arc_to_plane,
    centered_to_pixel,
    pixel_to_centered,
    plane_to_arc,
)
from .resample import build_forward_lut, build_reverse_lut, forward_shape, remap

__all__ = [
    "BoundingBox",
    "box_forward",
    "box_reverse",
    "boxes_crop",
    "mask_forward",
    "mask_reverse",
    "boxes_to_jsonl",
    "boxes_from_jsonl",
    "check_mask",
]

SPACES = ("original", "pit")


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: int
    score: float | None = None

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score outside [0, 1]: {self.score}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


def check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != np.uint8:
        raise ValueError("mask must be a 2-D uint8 array of class indices")
    return mask


def _map_box(box: BoundingBox, map_x, map_y, width: int, height: int) -> BoundingBox:
    x_min, x_max = sorted((map_x(box.x_min), map_x(box.x_max)))
    y_min, y_max = sorted((map_y(box.y_min), map_y(box.y_max)))
    return replace(
        box,
        x_min=float(np.clip(x_min, 0.0, width)),
        x_max=float(np.clip(x_max, 0.0, width)),
        y_min=float(np.clip(y_min, 0.0, height)),
        y_max=float(np.clip(y_max, 0.0, height)),
    )


def box_forward(box: BoundingBox, intrinsics: CameraIntrinsics) -> BoundingBox:
    """Map an original-space box into arc space by its corners."""
    out_h, out_w = forward_shape(intrinsics)

    def make_map(in_extent, out_extent, focal):
        def mapper(coord):
            centered = coord - in_extent / 2.0  # box edges are positions, not pixel centers
            return plane_to_arc(centered, focal) + out_extent / 2.0

        return mapper

    return _map_box(
        box,
        make_map(intrinsics.width, out_w, intrinsics.fx),
        make_map(intrinsics.height, out_h, intrinsics.fy),
        out_w,
        out_h,
    )


def box_reverse(box: BoundingBox, intrinsics: CameraIntrinsics) -> BoundingBox:
    """Map an arc-space box back to the original plane space."""
    in_h, in_w = forward_shape(intrinsics)

    def make_map(in_extent, out_extent, focal):
        def mapper(coord):
            centered = coord - in_extent / 2.0
            return arc_to_plane(centered, focal) + out_extent / 2.0

        return mapper

    return _map_box(
        box,
        make_map(in_w, intrinsics.width, intrinsics.fx),
        make_map(in_h, intrinsics.height, intrinsics.fy),
        intrinsics.width,
        intrinsics.height,
    )


def boxes_crop(
    boxes: list[BoundingBox],
    old: CameraIntrinsics,
    new_width: int,
    min_visible: float = 0.3,
) -> list[BoundingBox]:
    """Shift boxes into a centered horizontal crop, dropping mostly-hidden ones.

    A box is kept when at least ``min_visible`` of its original area survives
    the clip; kept boxes are clipped to the crop.
    """
    if not 0.0 < min_visible <= 1.0:
        raise ValueError("min_visible must lie in (0, 1]")
    if new_width > old.width:
        raise ValueError("crop width exceeds source width")
    offset = (old.width - new_width) // 2
    out = []
    for box in boxes:
        x_min = max(box.x_min - offset, 0.0)
        x_max = min(box.x_max - offset, float(new_width))
        if x_max <= x_min:
            continue
        clipped_area = (x_max - x_min) * (box.y_max - box.y_min)
        if clipped_area < min_visible * box.area:
            continue
        out.append(replace(box, x_min=x_min, x_max=x_max))
    return out


def mask_forward(mask: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Nearest-neighbor remap of a class-index mask into arc space."""
    mask = check_mask(mask)
    return remap(mask, build_forward_lut(intrinsics, interpolation="nearest"))


def mask_reverse(mask: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Nearest-neighbor remap of an arc-space mask back to plane space."""
    mask = check_mask(mask)
    return remap(mask, build_reverse_lut(intrinsics, interpolation="nearest"))


def boxes_to_jsonl(boxes: list[BoundingBox], image_id: str, space: str) -> str:
    """Serialize boxes as JSON Lines, one object per box."""
    if space not in SPACES:
        raise ValueError(f"space must be one of {SPACES}")
    lines = []
    for box in boxes:
        record = {
            "image_id": image_id,
            "space": space,
            "class_id": box.class_id,
            "x_min": box.x_min,
            "y_min": box.y_min,
            "x_max": box.x_max,
            "y_max": box.y_max,
        }
        if box.score is not None:
            record["score"] = box.score
        lines.append(json.dumps(record))
    return "\n".join(lines) + ("\n" if lines else "")


def boxes_from_jsonl(text: str) -> list[tuple[str, str, BoundingBox]]:
    """Parse JSON Lines into (image_id, space, box) triples."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            box = BoundingBox(
                x_min=record["x_min"],
                y_min=record["y_min"],
                x_max=record["x_max"],
                y_max=record["y_max"],
                class_id=record["class_id"],
                score=record.get("score"),
            )
            space = record.get("space", "original")
            if space not in SPACES:
                raise ValueError(f"unknown space {space!r}")
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ValueError(f"bad box record on line {lineno}: {exc}") from exc
        out.append((record.get("image_id", ""), space, box))
    return out
