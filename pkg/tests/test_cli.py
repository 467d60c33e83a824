import json

import numpy as np
import pytest

from pit.cli import main
from pit.geometry import CameraIntrinsics, FieldOfView
from pit.imageio import read_image, read_pfm, write_image
from pit.labels import BoundingBox, boxes_to_jsonl
from pit.resample import forward_shape


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(40)
    root = tmp_path / "data"
    (root / "images").mkdir(parents=True)
    (root / "masks").mkdir()
    (root / "boxes").mkdir()
    entries = []
    for i in range(3):
        img = rng.integers(0, 256, size=(100, 240, 3), dtype=np.uint8)
        write_image(root / "images" / f"{i}.png", img)
        mask = rng.integers(0, 4, size=(100, 240), dtype=np.uint8)
        write_image(root / "masks" / f"{i}.png", mask)
        boxes = [BoundingBox(40.0 + i, 20.0, 120.0, 60.0, class_id=1)]
        (root / "boxes" / f"{i}.jsonl").write_text(
            boxes_to_jsonl(boxes, image_id=str(i), space="original")
        )
        entries.append(
            {
                "image_path": f"images/{i}.png",
                "mask_path": f"masks/{i}.png",
                "boxes_path": f"boxes/{i}.jsonl",
            }
        )
    manifest = {"defaults": {"fov_x": 90.0, "fov_y": 40.0}, "entries": entries}
    (root / "manifest.json").write_text(json.dumps(manifest))
    return root


def run(args, capsys):
    rc = main(args)
    out = capsys.readouterr().out
    return rc, json.loads(out) if out.strip() else None


class TestForward:
    def test_three_entries(self, dataset, tmp_path, capsys):
        out_dir = tmp_path / "fwd"
        rc, report = run(
            ["forward", "--manifest", str(dataset / "manifest.json"),
             "--out-dir", str(out_dir)],
            capsys,
        )
        assert rc == 0
        assert report["images"] == 3
        assert report["masks"] == 3
        assert report["boxes"] == 3
        intr = CameraIntrinsics.from_fov(240, 100, FieldOfView(90.0, 40.0))
        h, w = forward_shape(intr)
        img = read_image(out_dir / "images" / "0.png")
        assert img.shape == (h, w, 3)
        chained = json.loads((out_dir / "manifest.json").read_text())
        assert len(chained["entries"]) == 3

    def test_deterministic_outputs(self, dataset, tmp_path, capsys):
        args = lambda d: ["forward", "--manifest", str(dataset / "manifest.json"),
                          "--out-dir", str(d)]
        run(args(tmp_path / "a"), capsys)
        run(args(tmp_path / "b"), capsys)
        a = (tmp_path / "a" / "images" / "1.png").read_bytes()
        b = (tmp_path / "b" / "images" / "1.png").read_bytes()
        assert a == b


class TestForwardReverseChain:
    def test_dims_restored(self, dataset, tmp_path, capsys):
        fwd = tmp_path / "fwd"
        rev = tmp_path / "rev"
        rc, _ = run(["forward", "--manifest", str(dataset / "manifest.json"),
                     "--out-dir", str(fwd)], capsys)
        assert rc == 0
        rc, report = run(["reverse", "--manifest", str(fwd / "manifest.json"),
                          "--out-dir", str(rev)], capsys)
        assert rc == 0
        assert report["images"] == 3
        for i in range(3):
            assert read_image(rev / "images" / f"{i}.png").shape == (100, 240, 3)
            assert read_image(rev / "masks" / f"{i}.png").shape == (100, 240)


class TestCrop:
    def test_target_fov(self, dataset, tmp_path, capsys):
        out_dir = tmp_path / "crop"
        rc, report = run(
            ["crop", "--manifest", str(dataset / "manifest.json"),
             "--out-dir", str(out_dir), "--target-fovx", "50"],
            capsys,
        )
        assert rc == 0
        # frozen from scalar oracle: floor(2 * 120 * tan(25 deg)) = 111
        img = read_image(out_dir / "images" / "0.png")
        assert img.shape[1] == 111
        chained = json.loads((out_dir / "manifest.json").read_text())
        assert chained["entries"][0]["fov_x"] == pytest.approx(50.0, abs=0.5)


class TestWeights:
    def test_deduplicated_per_intrinsics(self, dataset, tmp_path, capsys):
        out_dir = tmp_path / "w"
        rc, report = run(
            ["weights", "--manifest", str(dataset / "manifest.json"),
             "--out-dir", str(out_dir)],
            capsys,
        )
        assert rc == 0
        pfms = sorted(out_dir.glob("*.pfm"))
        assert len(pfms) == 1  # three images share one camera
        weights = read_pfm(pfms[0])
        intr = CameraIntrinsics.from_fov(240, 100, FieldOfView(90.0, 40.0))
        assert weights.shape == forward_shape(intr)
        assert len(sorted(out_dir.glob("*.pgm"))) == 1


class TestApstats:
    def test_mask_source(self, dataset, tmp_path, capsys):
        out_dir = tmp_path / "stats"
        rc, report = run(
            ["apstats", "--manifest", str(dataset / "manifest.json"),
             "--out-dir", str(out_dir), "--source", "mask", "--foreground", "1,2"],
            capsys,
        )
        assert rc == 0
        assert (out_dir / "apstats.csv").exists()
        assert (out_dir / "apstats.pgm").exists()
        assert report["total_counts"] > 0

    def test_boxes_source(self, dataset, tmp_path, capsys):
        out_dir = tmp_path / "stats"
        rc, report = run(
            ["apstats", "--manifest", str(dataset / "manifest.json"),
             "--out-dir", str(out_dir), "--source", "boxes"],
            capsys,
        )
        assert rc == 0
        assert report["boxes"] == 3


class TestBench:
    def test_reports_timings(self, dataset, capsys):
        rc, report = run(
            ["bench", "--manifest", str(dataset / "manifest.json")], capsys
        )
        assert rc == 0
        assert report["images"] == 3
        assert len(report["per_image"]) == 3
        assert all(item["seconds"] >= 0 for item in report["per_image"])
        assert report["mean_seconds"] >= 0


class TestErrors:
    def test_missing_image_fails(self, dataset, tmp_path, capsys):
        manifest = json.loads((dataset / "manifest.json").read_text())
        manifest["entries"].insert(0, {"image_path": "images/nope.png"})
        bad = dataset / "bad.json"
        bad.write_text(json.dumps(manifest))
        rc, report = run(
            ["forward", "--manifest", str(bad), "--out-dir", str(tmp_path / "o")],
            capsys,
        )
        assert rc == 1
        assert report["errors"]
        assert report["images"] == 0  # stops at first failure

    def test_keep_going(self, dataset, tmp_path, capsys):
        manifest = json.loads((dataset / "manifest.json").read_text())
        manifest["entries"].insert(0, {"image_path": "images/nope.png"})
        bad = dataset / "bad.json"
        bad.write_text(json.dumps(manifest))
        rc, report = run(
            ["forward", "--manifest", str(bad), "--out-dir", str(tmp_path / "o"),
             "--keep-going"],
            capsys,
        )
        assert rc == 1
        assert report["images"] == 3

    def test_malformed_manifest(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["forward", "--manifest", str(bad),
                     "--out-dir", str(tmp_path / "o")]) == 2

    def test_missing_intrinsics(self, dataset, tmp_path, capsys):
        manifest = json.loads((dataset / "manifest.json").read_text())
        del manifest["defaults"]
        bad = dataset / "bad.json"
        bad.write_text(json.dumps(manifest))
        rc, report = run(
            ["forward", "--manifest", str(bad), "--out-dir", str(tmp_path / "o")],
            capsys,
        )
        assert rc == 1
        assert "fov" in report["errors"][0]["error"]

    def test_per_entry_intrinsics_override(self, dataset, tmp_path, capsys):
        manifest = json.loads((dataset / "manifest.json").read_text())
        manifest["entries"][0]["fov_x"] = 50.0
        manifest["entries"][0]["fov_y"] = 26.0
        varied = dataset / "varied.json"
        varied.write_text(json.dumps(manifest))
        out_dir = tmp_path / "o"
        rc, _ = run(
            ["forward", "--manifest", str(varied), "--out-dir", str(out_dir)],
            capsys,
        )
        assert rc == 0
        narrow = CameraIntrinsics.from_fov(240, 100, FieldOfView(50.0, 26.0))
        assert read_image(out_dir / "images" / "0.png").shape[:2] == forward_shape(narrow)
