import io
import json
import math

import numpy as np
import pytest

from unwind360.dataio import (
    FrameManifest,
    ImuSample,
    ImuTrace,
    OrientationTrace,
    load_manifest,
    orientation_at,
    parse_imu_csv,
    read_frame,
    read_orientation_jsonl,
    save_manifest,
    write_frame,
    write_imu_csv,
    write_orientation_jsonl,
)
from unwind360.equirect import EquirectFrame
from unwind360.quat import IDENTITY, UnitQuaternion, Vec3, geodesic_distance, yaw

VALID_CSV = b"""# comment line
t,gx,gy,gz,ax,ay,az
0.0,0.01,-0.02,0.3,0.0,0.0,9.81
0.01,0.011,-0.019,0.29,0.01,-0.02,9.8
"""


class TestImuCsv:
    def test_two_row_file(self):
        trace = parse_imu_csv(VALID_CSV)
        assert len(trace.samples) == 2
        s = trace.samples[0]
        assert s.t == 0.0
        assert s.gyro == Vec3(0.01, -0.02, 0.3)
        assert s.accel == Vec3(0.0, 0.0, 9.81)
        assert trace.nominal_rate == pytest.approx(100.0)

    def test_decreasing_timestamp_names_line(self):
        bad = b"t,gx,gy,gz,ax,ay,az\n1.0,0,0,0,0,0,9.8\n0.5,0,0,0,0,0,9.8\n"
        with pytest.raises(ValueError, match="line 3"):
            parse_imu_csv(bad)

    def test_malformed_number_names_line(self):
        bad = b"t,gx,gy,gz,ax,ay,az\n0.0,0,0,0,0,0,9.8\n0.01,0,zero,0,0,0,9.8\n"
        with pytest.raises(ValueError, match="line 3"):
            parse_imu_csv(bad)

    def test_wrong_field_count_names_line(self):
        bad = b"t,gx,gy,gz,ax,ay,az\n0.0,0,0,0,0,0\n"
        with pytest.raises(ValueError, match="line 2"):
            parse_imu_csv(bad)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            parse_imu_csv(b"")
        with pytest.raises(ValueError):
            parse_imu_csv(b"t,gx,gy,gz,ax,ay,az\n")

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError, match="header"):
            parse_imu_csv(b"time,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,9.8\n")

    def test_non_finite_rejected(self):
        bad = b"t,gx,gy,gz,ax,ay,az\n0.0,0,0,0,0,0,9.8\n0.01,nan,0,0,0,0,9.8\n"
        with pytest.raises(ValueError, match="line 3"):
            parse_imu_csv(bad)

    def test_round_trip_is_identity(self, tmp_path):
        rng = np.random.default_rng(3)
        samples = []
        t = 0.0
        for _ in range(50):
            samples.append(
                ImuSample(
                    t=t,
                    gyro=Vec3(*rng.normal(0, 0.3, 3)),
                    accel=Vec3(*rng.normal(0, 2.0, 3)),
                )
            )
            t += 0.01
        trace = ImuTrace(samples=tuple(samples), nominal_rate=100.0)
        path = tmp_path / "imu.csv"
        write_imu_csv(trace, path)
        back = parse_imu_csv(path)
        assert back.samples == trace.samples

    def test_gap_flagging(self):
        samples = (
            ImuSample(0.0, Vec3(0, 0, 0), Vec3(0, 0, 9.8)),
            ImuSample(0.01, Vec3(0, 0, 0), Vec3(0, 0, 9.8)),
            ImuSample(0.5, Vec3(0, 0, 0), Vec3(0, 0, 9.8)),
        )
        trace = ImuTrace(samples=samples, nominal_rate=100.0)
        assert trace.gap_indices() == [2]

    def test_text_stream_input(self):
        trace = parse_imu_csv(io.StringIO(VALID_CSV.decode()))
        assert len(trace.samples) == 2


class TestOrientationTrace:
    def test_sign_continuity_on_construction(self):
        q = yaw(0.5)
        neg = UnitQuaternion(-q.w, -q.x, -q.y, -q.z)
        trace = OrientationTrace(entries=((0.0, q), (0.1, neg)))
        assert trace.entries[1][1] == q

    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError):
            OrientationTrace(entries=((0.0, IDENTITY), (0.0, IDENTITY)))

    def test_jsonl_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        entries = []
        for k in range(40):
            v = rng.normal(size=4)
            v /= np.linalg.norm(v)
            entries.append((k * 0.1, UnitQuaternion(*v)))
        trace = OrientationTrace(entries=tuple(entries))
        path = tmp_path / "orient.jsonl"
        write_orientation_jsonl(trace, path)
        back = read_orientation_jsonl(path)
        for (t0, q0), (t1, q1) in zip(trace.entries, back.entries):
            assert t0 == t1
            assert max(abs(a - b) for a, b in zip(q0, q1)) <= 1e-15

    def test_negated_entry_flipped_on_read(self, tmp_path):
        path = tmp_path / "orient.jsonl"
        q = yaw(1.0)
        with open(path, "w") as fh:
            fh.write(json.dumps({"t": 0.0, "w": q.w, "x": 0.0, "y": 0.0, "z": q.z}) + "\n")
            fh.write(json.dumps({"t": 0.1, "w": -q.w, "x": 0.0, "y": 0.0, "z": -q.z}) + "\n")
        back = read_orientation_jsonl(path)
        d = sum(a * b for a, b in zip(back.entries[0][1], back.entries[1][1]))
        assert d > 0

    def test_non_unit_rejected(self, tmp_path):
        path = tmp_path / "orient.jsonl"
        with open(path, "w") as fh:
            fh.write('{"t": 0.0, "w": 0.9, "x": 0.0, "y": 0.0, "z": 0.0}\n')
        with pytest.raises(ValueError, match="norm"):
            read_orientation_jsonl(path)

    def test_malformed_line_number(self, tmp_path):
        path = tmp_path / "orient.jsonl"
        with open(path, "w") as fh:
            fh.write('{"t": 0.0, "w": 1.0, "x": 0.0, "y": 0.0, "z": 0.0}\n')
            fh.write("not json\n")
        with pytest.raises(ValueError, match="line 2"):
            read_orientation_jsonl(path)


class TestOrientationAt:
    def trace(self):
        return OrientationTrace(
            entries=((0.0, IDENTITY), (1.0, yaw(math.pi / 2.0)))
        )

    def test_exact_entry(self):
        assert orientation_at(self.trace(), 1.0) == yaw(math.pi / 2.0)

    def test_midpoint_is_half_yaw(self):
        q = orientation_at(self.trace(), 0.5)
        assert geodesic_distance(q, yaw(math.pi / 4.0)) < 1e-12

    def test_clamp_before_first_within_margin(self):
        assert orientation_at(self.trace(), -0.5) == IDENTITY

    def test_error_beyond_margin(self):
        with pytest.raises(ValueError):
            orientation_at(self.trace(), 2.5)

    def test_single_entry_is_constant(self):
        trace = OrientationTrace(entries=((3.0, yaw(0.3)),))
        assert orientation_at(trace, -100.0) == yaw(0.3)
        assert orientation_at(trace, 100.0) == yaw(0.3)

    def test_continuity(self):
        trace = self.trace()
        for eps in (1e-3, 1e-6, 1e-9):
            d = geodesic_distance(
                orientation_at(trace, 0.5), orientation_at(trace, 0.5 + eps)
            )
            assert d < 2.0 * eps * (math.pi / 2.0) + 1e-12


def make_dataset_dir(tmp_path, n_frames=3):
    frames = []
    for k in range(n_frames):
        name = f"frames/{k:06d}.png"
        (tmp_path / "frames").mkdir(exist_ok=True)
        img = np.full((4, 8, 3), k * 10, dtype=np.uint8)
        write_frame(EquirectFrame(pixels=img), tmp_path / name)
        frames.append(name)
    write_imu_csv(parse_imu_csv(VALID_CSV), tmp_path / "imu.csv")
    write_orientation_jsonl(
        OrientationTrace(entries=((0.0, IDENTITY), (1.0, yaw(0.1)))),
        tmp_path / "orientations.jsonl",
    )
    return FrameManifest(
        width=8,
        height=4,
        fps=10.0,
        t0=0.0,
        frames=tuple(frames),
        imu="imu.csv",
        orientations="orientations.jsonl",
        base_dir=tmp_path,
    )


class TestManifest:
    def test_save_load_round_trip(self, tmp_path):
        manifest = make_dataset_dir(tmp_path)
        save_manifest(manifest, tmp_path / "manifest.json")
        back = load_manifest(tmp_path / "manifest.json")
        assert back.width == 8 and back.height == 4
        assert back.fps == 10.0
        assert back.frames == manifest.frames
        assert back.imu == "imu.csv"
        assert back.base_dir == tmp_path

    def test_exact_json_fields(self, tmp_path):
        manifest = make_dataset_dir(tmp_path)
        save_manifest(manifest, tmp_path / "manifest.json")
        doc = json.loads((tmp_path / "manifest.json").read_text())
        assert set(doc) == {
            "width", "height", "fps", "t0", "frames",
            "imu", "orientations", "ground_truth", "convention",
        }

    def test_missing_frame_file_rejected(self, tmp_path):
        manifest = make_dataset_dir(tmp_path)
        (tmp_path / manifest.frames[1]).unlink()
        save_manifest(manifest, tmp_path / "manifest.json")
        with pytest.raises(FileNotFoundError):
            load_manifest(tmp_path / "manifest.json")

    def test_invalid_json_rejected(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{nope")
        with pytest.raises(ValueError):
            load_manifest(tmp_path / "manifest.json")

    def test_frame_times(self, tmp_path):
        manifest = make_dataset_dir(tmp_path)
        assert manifest.frame_time(0) == 0.0
        assert manifest.frame_time(7) == pytest.approx(0.7)

    def test_validation(self):
        with pytest.raises(ValueError):
            FrameManifest(width=8, height=4, fps=0.0, t0=0.0, frames=("a.png",))
        with pytest.raises(ValueError):
            FrameManifest(width=8, height=4, fps=10.0, t0=0.0, frames=())
        with pytest.raises(ValueError):
            FrameManifest(width=9, height=4, fps=10.0, t0=0.0, frames=("a.png",))


class TestFramePng:
    def test_png_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, size=(32, 64, 3), dtype=np.uint8)
        frame = EquirectFrame(pixels=img, timestamp=1.5)
        path = tmp_path / "f.png"
        write_frame(frame, path)
        back = read_frame(path, timestamp=1.5)
        assert np.array_equal(back.pixels, frame.pixels)
        assert back.timestamp == 1.5
