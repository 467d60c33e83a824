"""Position-invariant transform toolkit for cross-FoV image datasets."""

from .ap_stats import (
    ApHistogram,
    accumulate_boxes,
    accumulate_mask,
    empty_histogram,
    export_heatmap,
    merge,
)
from .estimators import FovCropper, PitImageTransformer
from .geometry import (
    CameraIntrinsics,
    FieldOfView,
    arc_to_plane,
    focal_from_fov,
    fov_from_focal,
    incident_angles,
    plane_to_arc,
    transformed_extent,
)
from .labels import (
    BoundingBox,
    box_forward,
    box_reverse,
    boxes_crop,
    boxes_from_jsonl,
    boxes_to_jsonl,
    mask_forward,
    mask_reverse,
)
from .resample import (
    AxisLut,
    RemapSpec,
    build_forward_lut,
    build_reverse_lut,
    crop_to_fov,
    forward_shape,
    pit_forward,
    pit_reverse,
    remap,
)
from .weighting import WeightMatrix, build_weight_matrix, weighted_reduce

__version__ = "0.1.0"

__all__ = [
    "ApHistogram",
    "AxisLut",
    "BoundingBox",
    "CameraIntrinsics",
    "FieldOfView",
    "FovCropper",
    "PitImageTransformer",
    "RemapSpec",
    "WeightMatrix",
    "accumulate_boxes",
    "accumulate_mask",
    "arc_to_plane",
    "box_forward",
    "box_reverse",
    "boxes_crop",
    "boxes_from_jsonl",
    "boxes_to_jsonl",
    "build_forward_lut",
    "build_reverse_lut",
    "build_weight_matrix",
    "crop_to_fov",
    "empty_histogram",
    "export_heatmap",
    "focal_from_fov",
    "forward_shape",
    "fov_from_focal",
    "incident_angles",
    "mask_forward",
    "mask_reverse",
    "merge",
    "pit_forward",
    "pit_reverse",
    "plane_to_arc",
    "remap",
    "transformed_extent",
    "weighted_reduce",
]
