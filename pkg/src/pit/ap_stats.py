"""Foreground statistics over angular position.

Every foreground pixel contributes one count to the 1-degree bin of its
incident angles (alpha horizontal, beta vertical), rounded to the nearest
integer degree. Histograms are value objects: accumulation returns a new
histogram, and ranges grow automatically to cover the contributing camera.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from math import ceil, floor

import numpy as np

from .geometry import CameraIntrinsics, incident_angles, pixel_to_centered
from .labels import BoundingBox, check_mask

__all__ = [
    "ApHistogram",
    "empty_histogram",
    "accumulate_mask",
    "accumulate_boxes",
    "merge",
    "export_heatmap",
]


@dataclass(frozen=True)
class ApHistogram:
    """Counts of foreground pixels per integer (alpha, beta) degree bin.

    Ranges are inclusive; ``counts[i, j]`` holds the bin at
    ``alpha = alpha_lo + i``, ``beta = beta_lo + j``.
    """

    alpha_lo: int
    alpha_hi: int
    beta_lo: int
    beta_hi: int
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (self.alpha_hi - self.alpha_lo + 1, self.beta_hi - self.beta_lo + 1)
        if self.counts.shape != expected:
            raise ValueError(f"counts shape {self.counts.shape} != {expected}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))


def empty_histogram() -> ApHistogram:
    return ApHistogram(0, 0, 0, 0, np.zeros((1, 1), dtype=np.int64))


def _cover(hist: ApHistogram, intrinsics: CameraIntrinsics) -> ApHistogram:
    """Grow the bin range to cover the camera's half view angles."""
    a = ceil(intrinsics.fov_x / 2.0)
    b = ceil(intrinsics.fov_y / 2.0)
    return _expand(hist, -a, a, -b, b)


def _expand(hist, alpha_lo, alpha_hi, beta_lo, beta_hi) -> ApHistogram:
    alpha_lo = min(alpha_lo, hist.alpha_lo)
    alpha_hi = max(alpha_hi, hist.alpha_hi)
    beta_lo = min(beta_lo, hist.beta_lo)
    beta_hi = max(beta_hi, hist.beta_hi)
    counts = np.zeros(
        (alpha_hi - alpha_lo + 1, beta_hi - beta_lo + 1), dtype=np.int64
    )
    i = hist.alpha_lo - alpha_lo
    j = hist.beta_lo - beta_lo
    counts[i : i + hist.counts.shape[0], j : j + hist.counts.shape[1]] = hist.counts
    return ApHistogram(alpha_lo, alpha_hi, beta_lo, beta_hi, counts)


def _bin(angles: np.ndarray) -> np.ndarray:
    return np.floor(angles + 0.5).astype(np.int64)


def _accumulate_grid(
    hist: ApHistogram, foreground: np.ndarray, intrinsics: CameraIntrinsics
) -> ApHistogram:
    """Add one count per true pixel of a boolean grid matching the camera frame."""
    hist = _cover(hist, intrinsics)
    xs = pixel_to_centered(np.arange(intrinsics.width), intrinsics.width)
    ys = pixel_to_centered(np.arange(intrinsics.height), intrinsics.height)
    alpha, _ = incident_angles(xs, np.zeros_like(xs), intrinsics)
    _, beta = incident_angles(np.zeros_like(ys), ys, intrinsics)
    a_idx = _bin(alpha) - hist.alpha_lo  # per column
    b_idx = _bin(beta) - hist.beta_lo  # per row
    counts = hist.counts.copy()
    # Separable: count foreground pixels per (column-bin, row-bin) pair.
    n_a = counts.shape[0]
    n_b = counts.shape[1]
    flat = a_idx[None, :] * n_b + b_idx[:, None]
    add = np.bincount(flat[foreground], minlength=n_a * n_b).reshape(n_a, n_b)
    return ApHistogram(
        hist.alpha_lo, hist.alpha_hi, hist.beta_lo, hist.beta_hi, counts + add
    )


def accumulate_mask(
    hist: ApHistogram,
    mask: np.ndarray,
    foreground_classes: set[int],
    intrinsics: CameraIntrinsics,
) -> ApHistogram:
    """Count every pixel of the listed classes into its incident-angle bin."""
    mask = check_mask(mask)
    if mask.shape != (intrinsics.height, intrinsics.width):
        raise ValueError(
            f"mask shape {mask.shape} does not match camera "
            f"({intrinsics.height}, {intrinsics.width})"
        )
    foreground = np.isin(mask, sorted(foreground_classes))
    return _accumulate_grid(hist, foreground, intrinsics)


def accumulate_boxes(
    hist: ApHistogram, boxes: list[BoundingBox], intrinsics: CameraIntrinsics
) -> ApHistogram:
    """Count every pixel strictly inside each box; overlaps count once per box."""
    hist = _cover(hist, intrinsics)
    for box in boxes:
        x0 = max(int(floor(box.x_min)), 0)
        x1 = min(int(ceil(box.x_max)), intrinsics.width)
        y0 = max(int(floor(box.y_min)), 0)
        y1 = min(int(ceil(box.y_max)), intrinsics.height)
        grid = np.zeros((intrinsics.height, intrinsics.width), dtype=bool)
        # Strict interior: a pixel is inside when its center lies in the box.
        xs = np.arange(x0, x1) + 0.5
        ys = np.arange(y0, y1) + 0.5
        cols = (xs > box.x_min) & (xs < box.x_max)
        rows = (ys > box.y_min) & (ys < box.y_max)
        grid[y0:y1, x0:x1] = rows[:, None] & cols[None, :]
        hist = _accumulate_grid(hist, grid, intrinsics)
    return hist


def merge(a: ApHistogram, b: ApHistogram) -> ApHistogram:
    """Bin-wise sum over the union range."""
    out = _expand(a, b.alpha_lo, b.alpha_hi, b.beta_lo, b.beta_hi)
    counts = out.counts.copy()
    i = b.alpha_lo - out.alpha_lo
    j = b.beta_lo - out.beta_lo
    counts[i : i + b.counts.shape[0], j : j + b.counts.shape[1]] += b.counts
    return ApHistogram(out.alpha_lo, out.alpha_hi, out.beta_lo, out.beta_hi, counts)


def export_heatmap(hist: ApHistogram) -> tuple[str, np.ndarray]:
    """CSV text of (alpha, beta, count) rows plus a log-scaled 8-bit heatmap.

    The heatmap image is indexed (row = beta bin, column = alpha bin) and
    min-max normalized over log(1 + count).
    """
    buf = io.StringIO()
    buf.write("alpha,beta,count\n")
    for i in range(hist.counts.shape[0]):
        for j in range(hist.counts.shape[1]):
            buf.write(
                f"{hist.alpha_lo + i},{hist.beta_lo + j},{int(hist.counts[i, j])}\n"
            )
    log = np.log1p(hist.counts.T.astype(np.float64))
    peak = log.max()
    if peak > 0:
        image = np.floor(log / peak * 255.0 + 0.5).astype(np.uint8)
    else:
        image = np.zeros_like(log, dtype=np.uint8)
    return buf.getvalue(), image
