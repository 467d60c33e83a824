"""Scikit-learn style wrappers around the arc remap.

The transformers accept a single image (``(H, W)`` or ``(H, W, C)`` array)
or a list of images sharing one camera geometry. ``fit`` derives the camera
intrinsics from the view-angle parameters and the image dimensions, after
which ``transform`` / ``inverse_transform`` move imagery between plane and
arc space.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .geometry import CameraIntrinsics, FieldOfView
from .resample import check_image, crop_to_fov, pit_forward, pit_reverse

__all__ = ["PitImageTransformer", "FovCropper"]


def _as_image_list(X):
    if isinstance(X, np.ndarray) and X.ndim in (2, 3):
        return [X], True
    return list(X), False


class PitImageTransformer(TransformerMixin, BaseEstimator):
    """Remap images from plane space to position-invariant arc space.

    Parameters
    ----------
    fov_x, fov_y : float
        Full horizontal and vertical view angles of the source camera,
        in degrees.
    interpolation : {"bilinear", "nearest"}
        Sampling kernel; use "nearest" for categorical rasters.
    """

    def __init__(self, fov_x: float = 90.0, fov_y: float = 34.0,
                 interpolation: str = "bilinear"):
        self.fov_x = fov_x
        self.fov_y = fov_y
        self.interpolation = interpolation

    def fit(self, X, y=None):
        images, _ = _as_image_list(X)
        if not images:
            raise ValueError("need at least one image to fit")
        first = check_image(images[0])
        for img in images[1:]:
            if check_image(img).shape[:2] != first.shape[:2]:
                raise ValueError("all images must share one camera geometry")
        self.intrinsics_ = CameraIntrinsics.from_fov(
            width=first.shape[1],
            height=first.shape[0],
            fov=FieldOfView(self.fov_x, self.fov_y),
        )
        return self

    def transform(self, X):
        self._check_fitted()
        images, single = _as_image_list(X)
        out = [pit_forward(img, self.intrinsics_, self.interpolation) for img in images]
        return out[0] if single else out

    def inverse_transform(self, X):
        self._check_fitted()
        images, single = _as_image_list(X)
        out = [pit_reverse(img, self.intrinsics_, self.interpolation) for img in images]
        return out[0] if single else out

    def _check_fitted(self):
        if not hasattr(self, "intrinsics_"):
            raise NotFittedError("call fit before transform")


class FovCropper(TransformerMixin, BaseEstimator):
    """Center-crop images to a narrower horizontal view angle."""

    def __init__(self, fov_x: float = 90.0, fov_y: float = 34.0,
                 target_fov_x: float = 50.0):
        self.fov_x = fov_x
        self.fov_y = fov_y
        self.target_fov_x = target_fov_x

    def fit(self, X, y=None):
        images, _ = _as_image_list(X)
        if not images:
            raise ValueError("need at least one image to fit")
        first = check_image(images[0])
        self.intrinsics_ = CameraIntrinsics.from_fov(
            width=first.shape[1],
            height=first.shape[0],
            fov=FieldOfView(self.fov_x, self.fov_y),
        )
        _, self.cropped_intrinsics_ = crop_to_fov(
            first, self.intrinsics_, self.target_fov_x
        )
        return self

    def transform(self, X):
        if not hasattr(self, "intrinsics_"):
            raise NotFittedError("call fit before transform")
        images, single = _as_image_list(X)
        out = [crop_to_fov(img, self.intrinsics_, self.target_fov_x)[0] for img in images]
        return out[0] if single else out
