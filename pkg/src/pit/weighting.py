"""Pixel-wise loss re-weighting for arc-space supervision.

Each arc-space pixel covers an interval of the original plane per axis; its
weight is the area of that cell, so a weighted mean over the arc image
approximates a plain mean over the original image without resampling the
loss map back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraIntrinsics, arc_to_plane, pixel_to_centered
from .resample import forward_shape

__all__ = ["WeightMatrix", "build_weight_matrix", "weighted_reduce"]


@dataclass(frozen=True)
class WeightMatrix:
    """Per-pixel float32 weights over the arc-space frame."""

    width: int
    height: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.weights.shape != (self.height, self.width):
            raise ValueError("weight array shape must be (height, width)")

    @property
    def total(self) -> float:
        return float(np.sum(self.weights, dtype=np.float64))


def _axis_weights(out_extent: int, in_extent: int, focal: float) -> np.ndarray:
    coord = np.abs(pixel_to_centered(np.arange(out_extent), out_extent))
    half = in_extent / 2.0
    # Cell edges beyond the original frame are clamped so the cells partition it.
    near = np.minimum(arc_to_plane(coord, focal), half)
    far = np.minimum(arc_to_plane(coord + 1.0, focal), half)
    return far - near


def build_weight_matrix(intrinsics: CameraIntrinsics) -> WeightMatrix:
    """Eq.-style cell-area weights on the arc-space frame of a camera.

    Weight(U, V) is the product of the per-axis plane interval lengths
    covered by the pixel, evaluated at pixel centers and clamped to the
    original half-extents at the rim. Symmetric about both center axes.
    """
    out_h, out_w = forward_shape(intrinsics)
    wx = _axis_weights(out_w, intrinsics.width, intrinsics.fx)
    wy = _axis_weights(out_h, intrinsics.height, intrinsics.fy)
    weights = np.outer(wy, wx).astype(np.float32)
    return WeightMatrix(width=out_w, height=out_h, weights=weights)


def weighted_reduce(loss_map: np.ndarray, weights: WeightMatrix) -> float:
    """Weighted mean of a single-channel float loss map: sum(l*w) / sum(w)."""
    loss_map = np.asarray(loss_map)
    if loss_map.ndim != 2:
        raise ValueError("loss map must be single-channel 2-D")
    if loss_map.shape != (weights.height, weights.width):
        raise ValueError(
            f"loss map shape {loss_map.shape} does not match weights "
            f"({weights.height}, {weights.width})"
        )
    if not np.all(np.isfinite(loss_map)):
        raise ValueError("loss map contains non-finite values")
    w = weights.weights.astype(np.float64)
    loss = loss_map.astype(np.float64)
    # Shift by the first sample so a constant map reduces to it exactly.
    pivot = float(loss.flat[0])
    return pivot + float(np.sum((loss - pivot) * w) / np.sum(w))
