import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pit.geometry import CameraIntrinsics, FieldOfView
from pit.labels import (
    BoundingBox,
    box_forward,
    box_reverse,
    boxes_crop,
    boxes_from_jsonl,
    boxes_to_jsonl,
    mask_forward,
    mask_reverse,
)
from pit.resample import forward_shape

from oracles import brute_force_remap

KITTI = CameraIntrinsics.from_fov(1242, 375, FieldOfView(90.0, 34.0))


def random_boxes(rng, n, width, height, margin=1.0):
    boxes = []
    for _ in range(n):
        x = np.sort(rng.uniform(margin, width - margin, 2))
        y = np.sort(rng.uniform(margin, height - margin, 2))
        if x[1] - x[0] < 1e-3 or y[1] - y[0] < 1e-3:
            continue
        boxes.append(BoundingBox(x[0], y[0], x[1], y[1], class_id=int(rng.integers(0, 8))))
    return boxes


def iou(a, b):
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union else 0.0


class TestBoxTransforms:
    def test_full_frame_box_maps_to_full_pit_frame(self):
        box = BoundingBox(0, 0, 1242, 375, class_id=0)
        out = box_forward(box, KITTI)
        assert out.x_min == pytest.approx(0, abs=1.0)
        assert out.y_min == pytest.approx(0, abs=1.0)
        assert out.x_max == pytest.approx(975, abs=1.0)
        assert out.y_max == pytest.approx(363, abs=1.0)

    def test_centered_box_stays_symmetric(self):
        box = BoundingBox(571, 137.5, 671, 237.5, class_id=1)
        out = box_forward(box, KITTI)
        assert out.x_min + out.x_max == pytest.approx(975.0)
        assert out.y_min + out.y_max == pytest.approx(363.0)

    def test_off_center_box_against_scalar_oracle(self):
        import math

        box = BoundingBox(1000, 100, 1200, 300, class_id=2)
        out = box_forward(box, KITTI)

        def fwd_x(c):
            return 621.0 * math.atan((c - 621.0) / 621.0) + 975 / 2.0

        def fwd_y(c):
            fy = KITTI.fy
            return fy * math.atan((c - 187.5) / fy) + 363 / 2.0

        assert out.x_min == pytest.approx(fwd_x(1000.0), abs=1e-9)
        assert out.x_max == pytest.approx(fwd_x(1200.0), abs=1e-9)
        assert out.y_min == pytest.approx(fwd_y(100.0), abs=1e-9)
        assert out.y_max == pytest.approx(fwd_y(300.0), abs=1e-9)
        # An equally sized centered box shrinks less.
        centered = box_forward(BoundingBox(521, 100, 721, 300, class_id=2), KITTI)
        assert (out.x_max - out.x_min) < (centered.x_max - centered.x_min)

    def test_roundtrip_1000_random_boxes(self):
        rng = np.random.default_rng(3)
        for box in random_boxes(rng, 1000, 1242, 375):
            back = box_reverse(box_forward(box, KITTI), KITTI)
            assert abs(back.x_min - box.x_min) < 1e-6
            assert abs(back.x_max - box.x_max) < 1e-6
            assert abs(back.y_min - box.y_min) < 1e-6
            assert abs(back.y_max - box.y_max) < 1e-6

    def test_nesting_preserved(self):
        rng = np.random.default_rng(4)
        for outer in random_boxes(rng, 50, 1242, 375, margin=5.0):
            inner = BoundingBox(
                outer.x_min + 1, outer.y_min + 1, outer.x_max - 1, outer.y_max - 1,
                class_id=0,
            )
            fo, fi = box_forward(outer, KITTI), box_forward(inner, KITTI)
            assert fo.x_min <= fi.x_min and fi.x_max <= fo.x_max
            assert fo.y_min <= fi.y_min and fi.y_max <= fo.y_max

    def test_iou_invariance(self):
        rng = np.random.default_rng(5)
        boxes = random_boxes(rng, 40, 1242, 375)
        moved = [box_reverse(box_forward(b, KITTI), KITTI) for b in boxes]
        for a, b, ma, mb in zip(boxes[::2], boxes[1::2], moved[::2], moved[1::2]):
            assert iou(ma, mb) == pytest.approx(iou(a, b), abs=1e-6)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            BoundingBox(10, 10, 10, 20, class_id=0)


class TestBoxesCrop:
    def test_inside_box_is_shifted(self):
        boxes = [BoundingBox(600, 100, 650, 200, class_id=0)]
        out = boxes_crop(boxes, KITTI, 579)
        assert len(out) == 1
        offset = (1242 - 579) // 2
        assert out[0].x_min == pytest.approx(600 - offset)
        assert out[0].x_max == pytest.approx(650 - offset)

    def test_margin_box_dropped(self):
        boxes = [BoundingBox(0, 0, 100, 100, class_id=0)]
        assert boxes_crop(boxes, KITTI, 579) == []

    def test_min_visible_threshold(self):
        offset = (1242 - 579) // 2  # 331
        # 40% of the box survives the left crop edge.
        box = BoundingBox(offset - 60, 10, offset + 40, 110, class_id=0)
        assert boxes_crop([box], KITTI, 579, min_visible=0.5) == []
        kept = boxes_crop([box], KITTI, 579, min_visible=0.25)
        assert len(kept) == 1
        assert kept[0].x_min == 0.0
        assert kept[0].x_max == pytest.approx(40.0)

    def test_bad_min_visible(self):
        with pytest.raises(ValueError):
            boxes_crop([], KITTI, 579, min_visible=0.0)


class TestMaskTransforms:
    def test_single_class_stays_single_class(self):
        mask = np.full((375, 1242), 7, dtype=np.uint8)
        assert set(np.unique(mask_forward(mask, KITTI))) == {7}

    def test_palette_closure_on_parity_mask(self):
        mask = (np.arange(1242)[None, :] % 2).astype(np.uint8).repeat(375, axis=0)
        out = mask_forward(mask, KITTI)
        assert set(np.unique(out)) <= {0, 1}

    def test_disk_mask_matches_brute_force_counts(self):
        intr = CameraIntrinsics.from_fov(128, 128, FieldOfView(90.0, 90.0))
        y, x = np.mgrid[0:128, 0:128]
        mask = (((x - 64) ** 2 + (y - 64) ** 2) < 40**2).astype(np.uint8)
        got = mask_forward(mask, intr)
        want = brute_force_remap(mask, intr.fx, intr.fy, interpolation="nearest")
        assert np.array_equal(got, want)

    def test_reverse_palette_closure(self):
        rng = np.random.default_rng(6)
        h, w = forward_shape(KITTI)
        mask = rng.integers(0, 5, size=(h, w), dtype=np.uint8)
        out = mask_reverse(mask, KITTI)
        assert out.shape == (375, 1242)
        assert set(np.unique(out)) <= set(np.unique(mask))

    def test_coarse_regions_roundtrip_on_interior(self):
        intr = CameraIntrinsics.from_fov(256, 128, FieldOfView(80.0, 40.0))
        mask = np.zeros((128, 256), dtype=np.uint8)
        mask[:, 128:] = 1
        mask[64:, :] += 2
        back = mask_reverse(mask_forward(mask, intr), intr)
        interior = np.s_[8:-8, 8:-8]
        diff = back[interior] != mask[interior]
        # Block edges may shift by one pixel; the bulk must be exact.
        assert diff.mean() < 0.02

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_never_invents_classes(self, seed):
        rng = np.random.default_rng(seed)
        h = int(rng.integers(8, 64))
        w = int(rng.integers(8, 64))
        intr = CameraIntrinsics.from_fov(w, h, FieldOfView(100.0, 70.0))
        mask = rng.integers(0, 6, size=(h, w), dtype=np.uint8)
        assert set(np.unique(mask_forward(mask, intr))) <= set(np.unique(mask))


class TestJsonl:
    def test_roundtrip(self):
        boxes = [
            BoundingBox(1, 2, 3, 4, class_id=5, score=0.75),
            BoundingBox(0, 0, 10, 10, class_id=1),
        ]
        text = boxes_to_jsonl(boxes, image_id="img007", space="pit")
        parsed = boxes_from_jsonl(text)
        assert [b for _, _, b in parsed] == boxes
        assert all(image_id == "img007" for image_id, _, _ in parsed)
        assert all(space == "pit" for _, space, _ in parsed)

    def test_bad_space_rejected(self):
        with pytest.raises(ValueError):
            boxes_to_jsonl([], "x", "sideways")

    def test_bad_record_reports_line(self):
        with pytest.raises(ValueError, match="line 2"):
            boxes_from_jsonl(
                '{"image_id":"a","space":"original","class_id":0,'
                '"x_min":0,"y_min":0,"x_max":1,"y_max":1}\n{"nope":1}\n'
            )
