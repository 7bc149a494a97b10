import json
import math

import numpy as np
import pytest

from unwind360.dataio import (
    OrientationTrace,
    load_manifest,
    read_frame,
    read_orientation_jsonl,
)
from unwind360.equirect import ViewerPose, ViewportSpec, direction_to_pixel
from unwind360.quat import (
    IDENTITY,
    Vec3,
    from_axis_angle,
    geodesic_distance,
    multiply,
    normalized,
    vec_sub,
    yaw,
)
from unwind360.sim import (
    NO_NOISE,
    Marker,
    SceneSpec,
    Trajectory,
    TrajectorySpec,
    Waypoint,
    cardinal_scene,
    generate_dataset,
)
from unwind360.unwind import (
    DriftReport,
    UnwindState,
    compute_drift,
    couple,
    iter_unwound_frames,
    render_session,
    residual,
    save_drift_report,
    unwind_frames,
    unwind_step,
)

import oracles


class TestUnwindStep:
    def test_ground_truth_estimate_cancels_exactly(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            q = oracles.random_unit_quaternion(rng)
            state = couple(UnwindState(), q)
            state = unwind_step(state, q)
            assert geodesic_distance(state.q_u, IDENTITY) < 1e-12

    def test_identity_camera_identity_estimate(self):
        state = unwind_step(couple(UnwindState(), IDENTITY), IDENTITY)
        assert state.q_u == IDENTITY

    def test_ten_degree_residual(self):
        q_cam = yaw(math.radians(90.0))
        q_est = yaw(math.radians(80.0))
        state = unwind_step(couple(UnwindState(), q_cam), q_est)
        assert geodesic_distance(state.q_u, IDENTITY) == pytest.approx(
            math.radians(10.0), abs=1e-12
        )
        closed = residual(q_cam, q_est)
        assert max(abs(a - b) for a, b in zip(closed, state.q_u)) <= 1e-15

    def test_step_counts(self):
        state = UnwindState()
        assert state.k == 0
        state = unwind_step(state, yaw(0.1))
        state = unwind_step(state, yaw(0.1))
        assert state.k == 2


def static_dataset(tmp_path, seconds=2.0, fps=2.0, width=128, height=64):
    wps = (
        Waypoint(Vec3(0, 0, 0), IDENTITY, pause=seconds / 2),
        Waypoint(Vec3(0, 0, 0), IDENTITY, pause=seconds / 2),
    )
    spec = TrajectorySpec(waypoints=wps, sample_rate=50.0)
    return generate_dataset(
        spec, cardinal_scene(), NO_NOISE, tmp_path, width=width, height=height, fps=fps
    )


def rotating_dataset(tmp_path, width=128, height=64, fps=5.0):
    s2 = 1.0 / math.sqrt(2.0)
    wps = (
        Waypoint(Vec3(0.0, 0.0, 0.0), IDENTITY, pause=1.0),
        Waypoint(Vec3(0.0, 0.0, 0.0), from_axis_angle(Vec3(s2, s2, 0.0), 2.0), pause=1.0),
    )
    spec = TrajectorySpec(waypoints=wps)  # 1 + 4 + 1 = 6 s at 0.5 rad/s
    return generate_dataset(
        spec, cardinal_scene(), NO_NOISE, tmp_path, width=width, height=height, fps=fps
    )


class TestUnwindFrames:
    def test_identity_trace_is_bit_identical(self, tmp_path):
        manifest, _ = static_dataset(tmp_path / "ds")
        idq = OrientationTrace(entries=((0.0, IDENTITY), (10.0, IDENTITY)))
        out = unwind_frames(manifest, idq, tmp_path / "out")
        assert len(out.frames) == len(manifest.frames)
        for k in range(len(out.frames)):
            a = read_frame(manifest.frame_file(k))
            b = read_frame(out.frame_file(k))
            assert np.array_equal(a.pixels, b.pixels)

    def test_pure_rotation_with_truth_is_world_stable(self, tmp_path):
        manifest, truth = rotating_dataset(tmp_path / "ds")
        frames = [f for _, f in iter_unwound_frames(manifest, truth)]
        ref = frames[0].pixels.astype(np.int16)
        for frame in frames[1:]:
            diff = np.abs(frame.pixels.astype(np.int16) - ref)
            assert diff.mean() < 2.0

    def test_coverage_gap_names_frame(self, tmp_path):
        manifest, _ = static_dataset(tmp_path / "ds")
        short = OrientationTrace(entries=((0.0, IDENTITY), (0.1, IDENTITY)))
        with pytest.raises(ValueError, match="frame 1"):
            list(iter_unwound_frames(manifest, short))

    def test_translation_shows_as_parallax_only(self, tmp_path):
        # camera translates along +X while yawing; unwound frames must show
        # the marker at its analytic world bearing from each camera position
        marker = Marker(
            color=(255, 40, 40), position=Vec3(2.0, 1.0, 0.0), physical_radius=0.15
        )
        scene = SceneSpec(pattern="cardinal_markers", markers=(marker,))
        wps = (
            Waypoint(Vec3(0.0, 0.0, 0.0), IDENTITY),
            Waypoint(Vec3(1.0, 0.0, 0.0), yaw(1.0)),
        )
        spec = TrajectorySpec(waypoints=wps)
        manifest, truth = generate_dataset(
            spec, scene, NO_NOISE, tmp_path / "ds", width=640, height=320, fps=1.0
        )
        traj = Trajectory(spec)
        for k, frame in iter_unwound_frames(manifest, truth):
            pos, _ = traj.pose_at(manifest.frame_time(k))
            bearing = normalized(vec_sub(marker.position, pos))
            u, v = direction_to_pixel(bearing, 640, 320)
            mask = np.all(frame.pixels == (255, 40, 40), axis=2)
            cols = np.argwhere(mask)[:, 1]
            rows = np.argwhere(mask)[:, 0]
            assert cols.mean() == pytest.approx(u, abs=2.0)
            assert rows.mean() == pytest.approx(v, abs=2.0)


class TestRenderSession:
    def test_ur_static_head_is_stable(self, tmp_path):
        manifest, truth = rotating_dataset(tmp_path / "ds", width=256, height=128)
        spec = ViewportSpec(64, 64)
        views = [v for _, v in render_session(manifest, truth, ViewerPose(), spec, "UR")]
        ref = views[0].astype(np.int16)
        for view in views[1:]:
            assert np.abs(view.astype(np.int16) - ref).mean() < 2.0

    def test_cr_moves_while_ur_holds(self, tmp_path):
        manifest, truth = rotating_dataset(tmp_path / "ds", width=256, height=128)
        spec = ViewportSpec(64, 64)
        ur = [v for _, v in render_session(manifest, truth, ViewerPose(), spec, "UR")]
        cr = [v for _, v in render_session(manifest, truth, ViewerPose(), spec, "CR")]
        ur_change = np.mean(
            [np.abs(b.astype(np.int16) - a.astype(np.int16)).mean() for a, b in zip(ur, ur[1:])]
        )
        cr_change = np.mean(
            [np.abs(b.astype(np.int16) - a.astype(np.int16)).mean() for a, b in zip(cr, cr[1:])]
        )
        assert ur_change < 2.0
        assert cr_change > 5.0 * max(ur_change, 0.1)

    def test_identity_trace_modes_agree_bit_exactly(self, tmp_path):
        manifest, _ = static_dataset(tmp_path / "ds")
        idq = OrientationTrace(entries=((0.0, IDENTITY), (10.0, IDENTITY)))
        pose = ViewerPose(q_head=from_axis_angle(Vec3(0.1, 0.8, 0.2), 0.9))
        spec = ViewportSpec(48, 48)
        ur = [v for _, v in render_session(manifest, idq, pose, spec, "UR")]
        cr = [v for _, v in render_session(manifest, idq, pose, spec, "CR")]
        for a, b in zip(cr, ur):
            assert np.array_equal(a, b)

    def test_short_head_trace_rejected(self, tmp_path):
        manifest, truth = static_dataset(tmp_path / "ds")
        with pytest.raises(ValueError, match="head trace"):
            list(render_session(manifest, truth, [ViewerPose()], ViewportSpec(8, 8)))


class TestComputeDrift:
    def trace(self, offset=None, n=50):
        entries = []
        est_entries = []
        for k in range(n):
            t = k * 0.1
            q = yaw(0.3 * math.sin(t))
            entries.append((t, q))
            est_entries.append((t, q if offset is None else multiply(offset, q)))
        return OrientationTrace(entries=tuple(est_entries)), OrientationTrace(
            entries=tuple(entries)
        )

    def test_equal_traces_zero_report(self):
        est, truth = self.trace()
        report = compute_drift(est, truth)
        assert report.mean == 0.0
        assert report.max == 0.0
        assert report.final == 0.0
        assert len(report.series) == 50

    def test_constant_offset(self):
        est, truth = self.trace(offset=yaw(0.14))
        report = compute_drift(est, truth)
        for _, e in report.series:
            assert e == pytest.approx(0.14, abs=1e-9)
        assert report.mean == pytest.approx(0.14, abs=1e-9)

    def test_global_frame_change_invariance(self):
        est, truth = self.trace(offset=yaw(0.05))
        g = from_axis_angle(Vec3(0.4, -0.2, 0.9), 1.3)
        est2 = OrientationTrace(entries=tuple((t, multiply(g, q)) for t, q in est.entries))
        truth2 = OrientationTrace(entries=tuple((t, multiply(g, q)) for t, q in truth.entries))
        a = compute_drift(est, truth)
        b = compute_drift(est2, truth2)
        assert a.mean == pytest.approx(b.mean, abs=1e-9)
        assert a.max == pytest.approx(b.max, abs=1e-9)

    def test_coverage_gap_rejected(self):
        est = OrientationTrace(entries=((0.0, IDENTITY), (100.0, IDENTITY)))
        truth = OrientationTrace(entries=((0.0, IDENTITY), (1.0, IDENTITY)))
        with pytest.raises(ValueError, match="cover"):
            compute_drift(est, truth)

    def test_json_round_trip(self, tmp_path):
        est, truth = self.trace(offset=yaw(0.1))
        report = compute_drift(est, truth)
        path = tmp_path / "drift.json"
        save_drift_report(report, path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"mean", "max", "final", "series"}
        back = DriftReport.from_json(path.read_text())
        assert back == report
