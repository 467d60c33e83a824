"""Pinhole/arc coordinate math.

Coordinate conventions used throughout the package:

* Centered coordinates are measured in pixels from the principal point,
  positive rightward (x) and downward (y). The principal point is fixed
  at the geometric image center.
* Integer pixel index ``i`` corresponds to the centered coordinate
  ``i + 0.5 - extent / 2`` (pixel centers, symmetric for even extents).
* Plane coordinates live on the rectilinear image plane; arc coordinates
  live on the sphere of radius ``f`` through the principal point. The two
  are related by ``x = f * tan(u / f)`` per axis.
* Angles cross API boundaries in degrees; all internal math is in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FieldOfView",
    "CameraIntrinsics",
    "focal_from_fov",
    "fov_from_focal",
    "arc_to_plane",
    "plane_to_arc",
    "incident_angles",
    "transformed_extent",
    "pixel_to_centered",
    "centered_to_pixel",
]


@dataclass(frozen=True)
class FieldOfView:
    """Full view angles of a camera, in degrees, per axis."""

    fov_x: float
    fov_y: float

    def __post_init__(self):
        for name, value in (("fov_x", self.fov_x), ("fov_y", self.fov_y)):
            if not 0.0 < value < 180.0:
                raise ValueError(f"{name} must lie in (0, 180) degrees, got {value}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Image dimensions plus per-axis focal lengths in pixel units.

    The principal point is always the image center; there is no skew.
    Instances are immutable and hashable so they can key lookup-table caches.
    """

    width: int
    height: int
    fx: float
    fy: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (math.isfinite(self.fx) and math.isfinite(self.fy)):
            raise ValueError("focal lengths must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    @classmethod
    def from_fov(cls, width: int, height: int, fov: FieldOfView) -> "CameraIntrinsics":
        return cls(
            width=width,
            height=height,
            fx=focal_from_fov(width, fov.fov_x),
            fy=focal_from_fov(height, fov.fov_y),
        )

    @property
    def fov(self) -> FieldOfView:
        return FieldOfView(
            fov_x=fov_from_focal(self.width, self.fx),
            fov_y=fov_from_focal(self.height, self.fy),
        )

    @property
    def fov_x(self) -> float:
        return fov_from_focal(self.width, self.fx)

    @property
    def fov_y(self) -> float:
        return fov_from_focal(self.height, self.fy)


def focal_from_fov(extent: float, fov: float) -> float:
    """Focal length in pixel units from an image extent and its full view angle.

    ``f = (extent / 2) / tan(fov / 2)``; a 90-degree axis gives exactly
    ``extent / 2``.
    """
    if extent <= 0:
        raise ValueError(f"extent must be positive, got {extent}")
    if not 0.0 < fov < 180.0:
        raise ValueError(f"fov must lie in (0, 180) degrees, got {fov}")
    return (extent / 2.0) / math.tan(math.radians(fov) / 2.0)


def fov_from_focal(extent: float, focal: float) -> float:
    """Full view angle in degrees subtended by ``extent`` at focal length ``focal``."""
    if extent <= 0 or focal <= 0:
        raise ValueError("extent and focal must be positive")
    return math.degrees(2.0 * math.atan((extent / 2.0) / focal))


def arc_to_plane(u, focal: float):
    """Map centered arc coordinates to centered plane coordinates.

    ``x = f * tan(u / f)``. Odd, strictly increasing, and expanding
    (``|x| >= |u|``). Accepts scalars or numpy arrays.
    """
    if focal <= 0:
        raise ValueError("focal must be positive")
    u = np.asarray(u, dtype=np.float64)
    if np.any(np.abs(u) / focal >= math.pi / 2):
        raise ValueError("arc coordinate outside the hemisphere (|u|/f >= pi/2)")
    out = focal * np.tan(u / focal)
    return float(out) if out.ndim == 0 else out


def plane_to_arc(x, focal: float):
    """Map centered plane coordinates to centered arc coordinates.

    ``u = f * atan(x / f)``; exact inverse of :func:`arc_to_plane` and a
    contraction (``|u| <= |x|``). Accepts scalars or numpy arrays.
    """
    if focal <= 0:
        raise ValueError("focal must be positive")
    x = np.asarray(x, dtype=np.float64)
    out = focal * np.arctan(x / focal)
    return float(out) if out.ndim == 0 else out


def incident_angles(x, y, intrinsics: CameraIntrinsics):
    """Incident angles (alpha, beta) in degrees for centered plane coordinates.

    alpha is measured in the horizontal plane, beta in the vertical one;
    both vanish on the principal ray.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    alpha = np.degrees(np.arctan(x / intrinsics.fx))
    beta = np.degrees(np.arctan(y / intrinsics.fy))
    if alpha.ndim == 0:
        return float(alpha), float(beta)
    return alpha, beta


def transformed_extent(extent: int, focal: float) -> int:
    """Pixel extent of one axis after the arc remap.

    Floored so that every output pixel center maps (up to clamping slack)
    inside the input frame; never exceeds the input extent. A small epsilon
    absorbs the sub-pixel deficit of atan(t) < t so the narrow-angle limit
    degenerates to the identity extent instead of losing one pixel.
    """
    if extent <= 0 or focal <= 0:
        raise ValueError("extent and focal must be positive")
    out = math.floor(2.0 * focal * math.atan((extent / 2.0) / focal) + 1e-3)
    return max(min(out, extent), 1)


def pixel_to_centered(index, extent: int):
    """Centered coordinate of the center of pixel ``index`` on an axis of ``extent`` pixels."""
    index = np.asarray(index, dtype=np.float64)
    out = index + 0.5 - extent / 2.0
    return float(out) if out.ndim == 0 else out


def centered_to_pixel(coord, extent: int):
    """Fractional pixel index whose center sits at centered coordinate ``coord``."""
    coord = np.asarray(coord, dtype=np.float64)
    out = coord + extent / 2.0 - 0.5
    return float(out) if out.ndim == 0 else out
