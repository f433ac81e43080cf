import math
import struct

import numpy as np
import pytest

from pseudobox.geometry import OrientedBox3D, PointCloud
from pseudobox.kitti_io import (
    MalformedFileError,
    load_frame,
    read_calib,
    read_labels,
    read_masks,
    read_point_cloud,
    write_calib,
    write_labels,
    write_masks,
    write_point_cloud,
)
from pseudobox.masks import InstanceMask
from pseudobox.seeds import CalibrationSet

# realistic calibration text with the extra keys real files carry
GOLDEN_CALIB = """\
P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P1: 7.215377e+02 0.000000e+00 6.095593e+02 -3.875744e+02 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03
P3: 7.215377e+02 0.000000e+00 6.095593e+02 -3.395242e+02 0.000000e+00 7.215377e+02 1.728540e+02 2.199936e+00 0.000000e+00 0.000000e+00 1.000000e+00 2.729905e-03
R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01
Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 1.480249e-02 7.280733e-04 -9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 1.480755e-02 -2.717806e-01
Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 -7.854027e-04 9.998898e-01 -1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 9.998881e-01 -7.997231e-01
"""


class TestPointCloudIo:
    def test_golden_bytes(self, tmp_path):
        payload = struct.pack("<8f", 1.0, 2.0, 3.0, 0.5, -4.0, 5.5, -6.25, 0.0)
        path = tmp_path / "a.bin"
        path.write_bytes(payload)
        cloud = read_point_cloud(path)
        np.testing.assert_array_equal(cloud.xyz, [[1.0, 2.0, 3.0], [-4.0, 5.5, -6.25]])
        np.testing.assert_array_equal(cloud.intensity, [0.5, 0.0])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        assert len(read_point_cloud(path)) == 0

    def test_bad_length_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x00" * 15)
        with pytest.raises(MalformedFileError):
            read_point_cloud(path)

    def test_nonfinite_rejected(self, tmp_path):
        path = tmp_path / "nan.bin"
        path.write_bytes(struct.pack("<4f", 1.0, float("nan"), 0.0, 0.0))
        with pytest.raises(MalformedFileError):
            read_point_cloud(path)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        xyz = rng.uniform(-50, 50, size=(100, 3)).astype(np.float32).astype(np.float64)
        inten = rng.random(100).astype(np.float32).astype(np.float64)
        cloud = PointCloud(xyz, inten)
        path = tmp_path / "rt.bin"
        write_point_cloud(path, cloud)
        back = read_point_cloud(path)
        np.testing.assert_array_equal(back.xyz, cloud.xyz)
        np.testing.assert_array_equal(back.intensity, cloud.intensity)


class TestCalibIo:
    def test_golden_file_parses(self, tmp_path):
        path = tmp_path / "calib.txt"
        path.write_text(GOLDEN_CALIB)
        calib = read_calib(path)
        assert calib.P[0, 0] == pytest.approx(721.5377)
        assert calib.R.shape == (3, 3) and calib.T.shape == (3, 4)
        assert calib.image_size == (375, 1242)

    def test_golden_round_trip_exact(self, tmp_path):
        path = tmp_path / "calib.txt"
        path.write_text(GOLDEN_CALIB)
        calib = read_calib(path)
        path2 = tmp_path / "calib2.txt"
        write_calib(path2, calib)
        back = read_calib(path2)
        np.testing.assert_allclose(back.P, calib.P, atol=1e-12, rtol=0)
        np.testing.assert_allclose(back.R, calib.R, atol=1e-12, rtol=0)
        np.testing.assert_allclose(back.T, calib.T, atol=1e-12, rtol=0)

    def test_missing_key_rejected(self, tmp_path):
        text = "\n".join(l for l in GOLDEN_CALIB.splitlines() if not l.startswith("R0_rect"))
        path = tmp_path / "calib.txt"
        path.write_text(text)
        with pytest.raises(MalformedFileError):
            read_calib(path)

    def test_wrong_element_count_rejected(self, tmp_path):
        path = tmp_path / "calib.txt"
        path.write_text("P2: 1 2 3\nR0_rect: " + " ".join(["0"] * 9) + "\nTr_velo_to_cam: " + " ".join(["0"] * 12))
        with pytest.raises(MalformedFileError):
            read_calib(path)

    def test_pinhole_projection_sanity(self, tmp_path):
        path = tmp_path / "calib.txt"
        f, cu, cv = 100.0, 200.0, 100.0
        path.write_text(
            f"P2: {f} 0 {cu} 0 0 {f} {cv} 0 0 0 1 0\n"
            "R0_rect: 1 0 0 0 1 0 0 0 1\n"
            "Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n"
        )
        calib = read_calib(path, image_size=(200, 400))
        cam = calib.lidar_to_camera(np.array([[0.0, 0.0, 7.0]]))
        np.testing.assert_allclose(cam, [[0.0, 0.0, 7.0]], atol=1e-12)


def identity_calib(image_size=(400, 600), f=200.0):
    h, w = image_size
    P = np.array([[f, 0, w / 2, 0], [0, f, h / 2, 0], [0, 0, 1, 0]], dtype=float)
    return CalibrationSet(P=P, R=np.eye(3), T=np.hstack([np.eye(3), np.zeros((3, 1))]), image_size=image_size)


class TestLabelIo:
    def test_identity_calibration_location_oracle(self, tmp_path):
        calib = identity_calib()
        # camera frame == LiDAR frame here, so location must equal the
        # bottom-center computed by hand
        b = OrientedBox3D((1.0, 2.0, 10.0), (3.0, 1.5, 1.5), 0.25)
        path = tmp_path / "label.txt"
        write_labels(path, [(b, "Car", 0.7)], calib)
        fields = path.read_text().split()
        loc = np.array([float(x) for x in fields[11:14]])
        np.testing.assert_allclose(loc, [1.0, 2.0, 10.0 - 0.75], atol=5e-3)

    def test_score_formatting(self, tmp_path):
        calib = identity_calib()
        b = OrientedBox3D((0.0, 0.0, 10.0), (2.0, 1.0, 1.0), 0.0)
        path = tmp_path / "label.txt"
        write_labels(path, [(b, "Car", 1.0)], calib)
        assert path.read_text().split()[-1] == "1.0000"

    def test_ground_truth_has_15_columns(self, tmp_path):
        calib = identity_calib()
        b = OrientedBox3D((0.0, 0.0, 10.0), (2.0, 1.0, 1.0), 0.0)
        path = tmp_path / "gt.txt"
        write_labels(path, [(b, "Car", None)], calib)
        assert len(path.read_text().split()) == 15

    def test_round_trip_within_rounding(self, tmp_path):
        rng = np.random.default_rng(1)
        calib = identity_calib()
        boxes = [
            OrientedBox3D(
                (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(8, 30)),
                (rng.uniform(0.5, 4.5), rng.uniform(0.5, 2), rng.uniform(0.8, 2)),
                rng.uniform(-math.pi / 2, math.pi / 2),
            )
            for _ in range(25)
        ]
        path = tmp_path / "rt.txt"
        write_labels(path, [(b, "Car", 0.5) for b in boxes], calib)
        back = read_labels(path, calib)
        assert len(back) == len(boxes)
        for (got, cls, score), want in zip(back, boxes):
            assert cls == "Car" and score == pytest.approx(0.5, abs=1e-4)
            # compare the stored quantities: bottom-center, dims, and ry all
            # round to 2 decimals independently
            got_bottom = np.asarray(got.center) - [0, 0, got.height / 2]
            want_bottom = np.asarray(want.center) - [0, 0, want.height / 2]
            np.testing.assert_allclose(got_bottom, want_bottom, atol=5.1e-3)
            np.testing.assert_allclose(got.size, want.size, atol=5.1e-3)
            dyaw = abs(got.yaw - want.yaw)
            assert min(dyaw, math.pi - dyaw) <= 5.1e-3

    def test_dontcare_skipped_and_malformed_line_number(self, tmp_path):
        calib = identity_calib()
        path = tmp_path / "mixed.txt"
        path.write_text(
            "DontCare 0.00 0 0.00 0 0 0 0 0 0 0 0 0 0 0.00\n"
            "Car 0.00 0 bad 0 0 0 0 1 1 2 0 0 10 0.00\n"
        )
        with pytest.raises(MalformedFileError, match=":2:"):
            read_labels(path, calib)

    def test_behind_camera_zero_bbox(self, tmp_path, caplog):
        calib = identity_calib()
        b = OrientedBox3D((0.0, 0.0, -20.0), (2.0, 1.0, 1.0), 0.0)
        path = tmp_path / "behind.txt"
        write_labels(path, [(b, "Car", 0.5)], calib)
        fields = path.read_text().split()
        assert fields[4:8] == ["0.00", "0.00", "0.00", "0.00"]


class TestMaskDocument:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        grids = [rng.random((40, 60)) < 0.3 for _ in range(3)]
        for g in grids:
            g[20, 30] = True
        masks = [InstanceMask(i, "Car" if i else "Pedestrian", g) for i, g in enumerate(grids)]
        path = tmp_path / "m.json"
        write_masks(path, masks, (40, 60))
        back, size = read_masks(path)
        assert size == (40, 60)
        assert [m.instance_id for m in back] == [0, 1, 2]
        for a, b in zip(back, masks):
            np.testing.assert_array_equal(a.grid, b.grid)
            assert a.class_name == b.class_name

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text(
            '{"image_size": [2, 2], "instances": ['
            '{"id": 1, "class": "Car", "rle": [0, 4]},'
            '{"id": 1, "class": "Car", "rle": [0, 4]}]}'
        )
        with pytest.raises(MalformedFileError):
            read_masks(path)

    def test_bad_counts_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"image_size": [2, 2], "instances": [{"id": 0, "class": "Car", "rle": [0, 3]}]}')
        with pytest.raises(MalformedFileError):
            read_masks(path)

    def test_missing_keys_rejected(self, tmp_path):
        path = tmp_path / "nokey.json"
        path.write_text('{"instances": []}')
        with pytest.raises(MalformedFileError):
            read_masks(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(MalformedFileError):
            read_masks(path)


class TestLoadFrame:
    def test_bundle_assembles_and_mask_size_wins(self, tmp_path):
        from pseudobox.synthetic import SynthConfig, write_dataset

        cfg = SynthConfig(seed=1, objects_per_scene=(1, 2))
        write_dataset(cfg, 2, tmp_path)
        bundle = load_frame(tmp_path, "000000", with_gt=True)
        assert bundle.calib.image_size == cfg.camera.image_size
        assert len(bundle.gt_boxes) == len(bundle.gt_classes) >= 1
        assert len(bundle.cloud) > 0
