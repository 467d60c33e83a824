"""Separable lookup-table resampling between plane and arc image spaces.

Images are numpy arrays, ``(height, width)`` or ``(height, width, channels)``,
dtype ``uint8`` or ``float32``. The remap is separable: one 1-D lookup table
per axis, applied as two passes (rows, then columns). Bilinear interpolation
over a separable map factorizes exactly, so the two-pass result matches a
direct 2-D gather.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import (
    CameraIntrinsics,
    arc_to_plane,
    centered_to_pixel,
    fov_from_focal,
    pixel_to_centered,
    plane_to_arc,
    transformed_extent,
)

__all__ = [
    "AxisLut",
    "RemapSpec",
    "build_forward_lut",
    "build_reverse_lut",
    "remap",
    "pit_forward",
    "pit_reverse",
    "crop_to_fov",
    "forward_shape",
    "check_image",
]

VALID_DTYPES = (np.uint8, np.float32)


def check_image(image: np.ndarray) -> np.ndarray:
    """Validate raster shape and dtype; returns the array unchanged."""
    image = np.asarray(image)
    if image.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D raster, got shape {image.shape}")
    if image.ndim == 3 and image.shape[2] not in (1, 3, 4):
        raise ValueError(f"unsupported channel count {image.shape[2]}")
    if image.dtype not in VALID_DTYPES:
        raise ValueError(f"unsupported dtype {image.dtype}; use uint8 or float32")
    if image.dtype == np.float32 and not np.all(np.isfinite(image)):
        raise ValueError("float raster contains non-finite samples")
    return image


@dataclass(frozen=True)
class AxisLut:
    """Per-output-index source coordinates for one axis of a separable remap.

    ``src[i]`` is the fractional source pixel index sampled by output index
    ``i``; monotone and clamped to ``[0, in_extent - 1]``. Clamping can
    flatten a few entries at the rim for wide view angles; away from the
    clamped rim the table is strictly increasing.
    """

    in_extent: int
    out_extent: int
    src: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.src) != self.out_extent:
            raise ValueError("lut length must equal out_extent")
        if np.any(np.diff(self.src) < 0):
            raise ValueError("lut source coordinates must be non-decreasing")
        if np.any(self.src < 0) or np.any(self.src > self.in_extent - 1):
            raise ValueError("lut source coordinates out of range")


@dataclass(frozen=True)
class RemapSpec:
    """A full separable remap: one lookup table per axis plus sampling mode."""

    lut_x: AxisLut
    lut_y: AxisLut
    interpolation: str  # "bilinear" | "nearest"
    direction: str  # "forward" | "reverse"

    def __post_init__(self):
        if self.interpolation not in ("bilinear", "nearest"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @property
    def in_shape(self) -> tuple[int, int]:
        return (self.lut_y.in_extent, self.lut_x.in_extent)

    @property
    def out_shape(self) -> tuple[int, int]:
        return (self.lut_y.out_extent, self.lut_x.out_extent)


def _axis_lut_forward(in_extent: int, focal: float) -> AxisLut:
    out_extent = transformed_extent(in_extent, focal)
    arc = pixel_to_centered(np.arange(out_extent), out_extent)
    plane = arc_to_plane(arc, focal)
    src = centered_to_pixel(plane, in_extent)
    src = np.clip(src, 0.0, in_extent - 1.0)
    return AxisLut(in_extent=in_extent, out_extent=out_extent, src=src)


def _axis_lut_reverse(out_extent: int, focal: float) -> AxisLut:
    # Source space is the forward output (arc) space.
    in_extent = transformed_extent(out_extent, focal)
    plane = pixel_to_centered(np.arange(out_extent), out_extent)
    arc = plane_to_arc(plane, focal)
    src = centered_to_pixel(arc, in_extent)
    src = np.clip(src, 0.0, in_extent - 1.0)
    return AxisLut(in_extent=in_extent, out_extent=out_extent, src=src)


@lru_cache(maxsize=64)
def build_forward_lut(
    intrinsics: CameraIntrinsics, interpolation: str = "bilinear"
) -> RemapSpec:
    """Plane-to-arc remap spec for a camera; output extents shrink per axis."""
    return RemapSpec(
        lut_x=_axis_lut_forward(intrinsics.width, intrinsics.fx),
        lut_y=_axis_lut_forward(intrinsics.height, intrinsics.fy),
        interpolation=interpolation,
        direction="forward",
    )


@lru_cache(maxsize=64)
def build_reverse_lut(
    intrinsics: CameraIntrinsics, interpolation: str = "bilinear"
) -> RemapSpec:
    """Arc-to-plane remap spec; output extents are the original camera dims."""
    return RemapSpec(
        lut_x=_axis_lut_reverse(intrinsics.width, intrinsics.fx),
        lut_y=_axis_lut_reverse(intrinsics.height, intrinsics.fy),
        interpolation=interpolation,
        direction="reverse",
    )


def forward_shape(intrinsics: CameraIntrinsics) -> tuple[int, int]:
    """(height, width) of the arc-space image for a camera."""
    return (
        transformed_extent(intrinsics.height, intrinsics.fy),
        transformed_extent(intrinsics.width, intrinsics.fx),
    )


def _lerp_indices(lut: AxisLut, compute_dtype) -> tuple[np.ndarray, np.ndarray]:
    i0 = np.floor(lut.src).astype(np.intp)
    if lut.in_extent > 1:
        i0 = np.clip(i0, 0, lut.in_extent - 2)
    else:
        i0 = np.zeros_like(i0)
    frac = (lut.src - i0).astype(compute_dtype)
    return i0, frac


def _gather_cols(data: np.ndarray, lut: AxisLut, interpolation: str, compute_dtype):
    if interpolation == "nearest":
        idx = np.clip(np.floor(lut.src + 0.5).astype(np.intp), 0, lut.in_extent - 1)
        return data[:, idx]
    i0, frac = _lerp_indices(lut, compute_dtype)
    a = data[:, i0].astype(compute_dtype, copy=False)
    b = data[:, i0 + 1].astype(compute_dtype, copy=False) if lut.in_extent > 1 else a
    frac = frac[None, :, None] if data.ndim == 3 else frac[None, :]
    return a + frac * (b - a)


def _gather_rows(data: np.ndarray, lut: AxisLut, interpolation: str, compute_dtype):
    if interpolation == "nearest":
        idx = np.clip(np.floor(lut.src + 0.5).astype(np.intp), 0, lut.in_extent - 1)
        return data[idx]
    i0, frac = _lerp_indices(lut, compute_dtype)
    a = data[i0].astype(compute_dtype, copy=False)
    b = data[i0 + 1].astype(compute_dtype, copy=False) if lut.in_extent > 1 else a
    frac = frac[:, None, None] if data.ndim == 3 else frac[:, None]
    return a + frac * (b - a)


def remap(image: np.ndarray, spec: RemapSpec) -> np.ndarray:
    """Apply a separable remap to a raster; deterministic, pure.

    Bilinear mode interpolates in float32 for 8-bit inputs (error well under
    half a code) and rounds half away from zero; float inputs interpolate in
    double. Nearest mode copies samples.
    """
    image = check_image(image)
    if (image.shape[0], image.shape[1]) != spec.in_shape:
        raise ValueError(
            f"image dims {image.shape[:2]} do not match spec input {spec.in_shape}"
        )
    compute_dtype = np.float32 if image.dtype == np.uint8 else np.float64
    out = _gather_rows(image, spec.lut_y, spec.interpolation, compute_dtype)
    out = _gather_cols(out, spec.lut_x, spec.interpolation, compute_dtype)
    if spec.interpolation == "nearest":
        return np.ascontiguousarray(out)
    if image.dtype == np.uint8:
        return np.floor(out + np.float32(0.5)).astype(np.uint8)
    return np.ascontiguousarray(out.astype(np.float32))


def pit_forward(
    image: np.ndarray, intrinsics: CameraIntrinsics, interpolation: str = "bilinear"
) -> np.ndarray:
    """Resample a plane-space image into arc space."""
    _require_dims(image, intrinsics.height, intrinsics.width)
    return remap(image, build_forward_lut(intrinsics, interpolation))


def pit_reverse(
    image: np.ndarray, intrinsics: CameraIntrinsics, interpolation: str = "bilinear"
) -> np.ndarray:
    """Resample an arc-space image back to the original plane space."""
    expected = forward_shape(intrinsics)
    _require_dims(image, *expected)
    return remap(image, build_reverse_lut(intrinsics, interpolation))


def crop_to_fov(
    image: np.ndarray, intrinsics: CameraIntrinsics, target_fov_x: float
) -> tuple[np.ndarray, CameraIntrinsics]:
    """Center-crop an image to a narrower horizontal view angle.

    The focal lengths are unchanged; the returned intrinsics carry the new
    width (and therefore the recomputed horizontal view angle). Height is
    untouched.
    """
    image = check_image(image)
    _require_dims(image, intrinsics.height, intrinsics.width)
    source_fov_x = fov_from_focal(intrinsics.width, intrinsics.fx)
    if not 0.0 < target_fov_x <= source_fov_x + 1e-9:
        raise ValueError(
            f"target fov {target_fov_x} exceeds source fov {source_fov_x:.3f}"
        )
    new_width = math.floor(2.0 * intrinsics.fx * math.tan(math.radians(target_fov_x) / 2.0))
    new_width = min(new_width, intrinsics.width)
    offset = (intrinsics.width - new_width) // 2
    cropped = np.ascontiguousarray(image[:, offset : offset + new_width])
    new_intrinsics = CameraIntrinsics(
        width=new_width, height=intrinsics.height, fx=intrinsics.fx, fy=intrinsics.fy
    )
    return cropped, new_intrinsics


def _require_dims(image: np.ndarray, height: int, width: int):
    if image.shape[0] != height or image.shape[1] != width:
        raise ValueError(
            f"image dims {image.shape[:2]} do not match expected ({height}, {width})"
        )
