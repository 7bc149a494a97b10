"""Synthetic ground truth: waypoint trajectories with trapezoidal speed
profiles, IMU synthesis with seeded noise, and analytic equirectangular
test scenes.

Everything here is an oracle for the rest of the pipeline, so the math is
kept closed-form: straight-line segments, exact trapezoid ramps, slerped
orientation at constant angular rate, and gyro readings derived from the
quaternion logarithm so that noise-free integration reproduces the
trajectory exactly.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dataio import (
    CONVENTION,
    FrameManifest,
    ImuSample,
    ImuTrace,
    OrientationTrace,
    save_manifest,
    write_frame,
    write_imu_csv,
    write_orientation_jsonl,
)
from .equirect import EquirectFrame, _equirect_tables
from .mahony import STANDARD_GRAVITY
from .quat import (
    IDENTITY,
    UnitQuaternion,
    Vec3,
    from_axis_angle,
    geodesic_distance,
    inverse,
    multiply,
    norm,
    slerp,
    to_axis_angle,
    to_rotation_matrix,
    vec_sub,
    yaw,
)


@dataclass(frozen=True)
class Waypoint:
    position: Vec3
    orientation: UnitQuaternion = IDENTITY
    pause: float = 0.0

    def __post_init__(self) -> None:
        if self.pause < 0.0:
            raise ValueError("pause must be non-negative")


@dataclass(frozen=True)
class TrajectorySpec:
    """Waypoint path with motion limits.

    ``angular_rate`` bounds how fast orientation may slerp between
    waypoints; it sets the duration of otherwise zero-length segments
    (pure rotations in place) and stretches nothing else — translation
    timing follows the trapezoid profile alone whenever it is the slower
    of the two.
    """

    waypoints: tuple[Waypoint, ...]
    speed: float = 0.1
    accel_limit: float = 0.05
    sample_rate: float = 100.0
    angular_rate: float = 0.5

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("need at least 2 waypoints")
        if self.speed <= 0.0 or self.accel_limit <= 0.0:
            raise ValueError("speed and accel_limit must be positive")
        if self.sample_rate <= 0.0 or self.angular_rate <= 0.0:
            raise ValueError("sample_rate and angular_rate must be positive")


@dataclass(frozen=True)
class NoiseModel:
    """Seeded sensor corruption. ``gyro_bias=None`` draws a constant bias
    uniformly from ±0.002 rad/s per axis using ``seed``."""

    gyro_sigma: float = 0.005
    gyro_bias: Vec3 | None = None
    accel_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gyro_sigma < 0.0 or self.accel_sigma < 0.0:
            raise ValueError("noise sigmas must be non-negative")


NO_NOISE = NoiseModel(gyro_sigma=0.0, gyro_bias=Vec3(0.0, 0.0, 0.0), accel_sigma=0.0)

PATTERNS = ("latlong_grid", "cardinal_markers", "stripes")

STRIPE_COLORS = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
)


@dataclass(frozen=True)
class Marker:
    """A colored disc on the sphere, fixed either by world direction
    (``angular_radius`` radians) or by world position, in which case its
    apparent angular radius is ``physical_radius / distance`` — the
    small-angle size rule, exact enough at desk scale and trivially
    checkable (half the distance, twice the apparent radius)."""

    color: tuple[int, int, int]
    direction: Vec3 | None = None
    position: Vec3 | None = None
    angular_radius: float = 0.25
    physical_radius: float = 0.1

    def __post_init__(self) -> None:
        if (self.direction is None) == (self.position is None):
            raise ValueError("set exactly one of direction or position")
        if self.direction is not None and abs(norm(self.direction) - 1.0) > 1e-6:
            raise ValueError("marker direction must be unit length")
        if self.angular_radius <= 0.0 or self.physical_radius <= 0.0:
            raise ValueError("marker radii must be positive")


@dataclass(frozen=True)
class SceneSpec:
    pattern: str = "latlong_grid"
    markers: tuple[Marker, ...] = ()

    def __post_init__(self) -> None:
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        colors = [m.color for m in self.markers]
        if len(set(colors)) != len(colors):
            raise ValueError("marker colors must be distinct")


def cardinal_scene(angular_radius: float = 0.25) -> SceneSpec:
    """Gray background with a uniquely colored marker on each world axis."""
    dirs = {
        Vec3(1.0, 0.0, 0.0): (230, 25, 75),
        Vec3(-1.0, 0.0, 0.0): (70, 240, 240),
        Vec3(0.0, 1.0, 0.0): (60, 180, 75),
        Vec3(0.0, -1.0, 0.0): (240, 50, 230),
        Vec3(0.0, 0.0, 1.0): (255, 225, 25),
        Vec3(0.0, 0.0, -1.0): (0, 130, 200),
    }
    return SceneSpec(
        pattern="cardinal_markers",
        markers=tuple(
            Marker(color=c, direction=d, angular_radius=angular_radius)
            for d, c in dirs.items()
        ),
    )


@dataclass(frozen=True)
class PoseSample:
    t: float
    position: Vec3
    orientation: UnitQuaternion


@dataclass(frozen=True)
class PoseTrace:
    samples: tuple[PoseSample, ...]
    rate: float


def _trapezoid_time(distance: float, speed: float, accel: float) -> float:
    if distance <= 0.0:
        return 0.0
    if distance >= speed * speed / accel:
        return speed / accel + distance / speed
    return 2.0 * math.sqrt(distance / accel)


def _trapezoid_pos(tau: float, distance: float, speed: float, accel: float) -> float:
    """Arc length after ``tau`` seconds of the rest-to-rest profile."""
    total = _trapezoid_time(distance, speed, accel)
    if tau <= 0.0:
        return 0.0
    if tau >= total:
        return distance
    if distance >= speed * speed / accel:
        ramp = speed / accel
        if tau < ramp:
            return 0.5 * accel * tau * tau
        if tau <= total - ramp:
            return 0.5 * accel * ramp * ramp + speed * (tau - ramp)
        rem = total - tau
        return distance - 0.5 * accel * rem * rem
    peak = 0.5 * total
    if tau < peak:
        return 0.5 * accel * tau * tau
    rem = total - tau
    return distance - 0.5 * accel * rem * rem


@dataclass(frozen=True)
class _Piece:
    t_start: float
    t_end: float
    start: Waypoint
    end: Waypoint
    distance: float


class Trajectory:
    """Closed-form pose evaluator for a planned waypoint path."""

    def __init__(self, spec: TrajectorySpec):
        self.spec = spec
        pieces: list[_Piece] = []
        t = 0.0
        wps = spec.waypoints
        for i, wp in enumerate(wps):
            if wp.pause > 0.0:
                pieces.append(_Piece(t, t + wp.pause, wp, wp, 0.0))
                t += wp.pause
            if i + 1 < len(wps):
                nxt = wps[i + 1]
                dist = norm(vec_sub(nxt.position, wp.position))
                t_lin = _trapezoid_time(dist, spec.speed, spec.accel_limit)
                t_rot = geodesic_distance(wp.orientation, nxt.orientation) / spec.angular_rate
                t_move = max(t_lin, t_rot)
                if t_move > 0.0:
                    pieces.append(_Piece(t, t + t_move, wp, nxt, dist))
                    t += t_move
        self.pieces = pieces
        self.total_time = t
        self._starts = [p.t_start for p in pieces]

    def pose_at(self, t: float) -> tuple[Vec3, UnitQuaternion]:
        t = min(max(t, 0.0), self.total_time)
        if not self.pieces:
            wp = self.spec.waypoints[0]
            return wp.position, wp.orientation
        i = min(bisect_right(self._starts, t) - 1, len(self.pieces) - 1)
        i = max(i, 0)
        p = self.pieces[i]
        tau = t - p.t_start
        if p.distance == 0.0 and p.start.orientation == p.end.orientation:
            return p.start.position, p.start.orientation
        span = p.t_end - p.t_start
        q = slerp(p.start.orientation, p.end.orientation, tau / span)
        if p.distance == 0.0:
            return p.start.position, q
        s = _trapezoid_pos(tau, p.distance, self.spec.speed, self.spec.accel_limit)
        f = s / p.distance
        a, b = p.start.position, p.end.position
        pos = Vec3(
            a.x + (b.x - a.x) * f,
            a.y + (b.y - a.y) * f,
            a.z + (b.z - a.z) * f,
        )
        return pos, q


def generate_trajectory(spec: TrajectorySpec, duration: float | None = None) -> PoseTrace:
    """Sample the planned path at ``spec.sample_rate``.

    ``duration=None`` uses the path's own length; longer durations hold
    the final pose; shorter ones are an error.
    """
    traj = Trajectory(spec)
    if duration is None:
        duration = traj.total_time
    elif duration < traj.total_time - 1e-9:
        raise ValueError(
            f"duration {duration} s is shorter than the minimum traversal "
            f"({traj.total_time:.3f} s)"
        )
    n = int(round(duration * spec.sample_rate))
    samples = []
    for k in range(n + 1):
        t = k / spec.sample_rate
        pos, q = traj.pose_at(t)
        samples.append(PoseSample(t=t, position=pos, orientation=q))
    return PoseTrace(samples=tuple(samples), rate=spec.sample_rate)


def demo_trajectory_spec() -> TrajectorySpec:
    """Six-waypoint reference path: 5 s dwell at each waypoint, 4.8 m
    segments at 0.1 m/s with 0.05 m/s² ramps — 280 s in total — passing
    through one waypoint turned upside down (a half turn about a
    horizontal axis)."""
    h = 4.8 * math.sqrt(3.0) / 2.0
    s3 = 1.0 / math.sqrt(3.0)
    wps = (
        Waypoint(Vec3(0.0, 0.0, 0.0), IDENTITY, pause=5.0),
        Waypoint(Vec3(4.8, 0.0, 0.0), yaw(math.pi / 2.0), pause=5.0),
        Waypoint(
            Vec3(4.8, h, 2.4),
            from_axis_angle(Vec3(1.0, 0.0, 0.0), math.pi),
            pause=5.0,
        ),
        Waypoint(
            Vec3(0.0, h, 2.4),
            from_axis_angle(Vec3(0.0, 1.0, 0.0), math.pi / 2.0),
            pause=5.0,
        ),
        Waypoint(
            Vec3(0.0, h, -2.4),
            from_axis_angle(Vec3(s3, s3, s3), 2.0 * math.pi / 3.0),
            pause=5.0,
        ),
        Waypoint(Vec3(4.8, h, -2.4), yaw(-math.pi / 2.0), pause=5.0),
    )
    return TrajectorySpec(waypoints=wps)


def pure_rotation_spec() -> TrajectorySpec:
    """Camera pinned at the origin, rotating through all three axes —
    including past upside down — with short dwells; roughly 30 s."""
    s2 = 1.0 / math.sqrt(2.0)
    s3 = 1.0 / math.sqrt(3.0)
    wps = (
        Waypoint(Vec3(0.0, 0.0, 0.0), IDENTITY, pause=1.0),
        Waypoint(Vec3(0.0, 0.0, 0.0), yaw(2.5), pause=1.0),
        Waypoint(Vec3(0.0, 0.0, 0.0), from_axis_angle(Vec3(s2, s2, 0.0), 2.8), pause=1.0),
        Waypoint(Vec3(0.0, 0.0, 0.0), from_axis_angle(Vec3(0.0, 1.0, 0.0), -1.5), pause=1.0),
        Waypoint(Vec3(0.0, 0.0, 0.0), from_axis_angle(Vec3(s3, -s3, s3), 3.0), pause=1.0),
    )
    return TrajectorySpec(waypoints=wps)


def synthesize_imu(trace: PoseTrace, noise: NoiseModel | None = None) -> ImuTrace:
    """Invert the trajectory into sensor readings.

    The gyro value at sample k is the constant body rate that carries the
    pose from k-1 to k (quaternion log of the relative rotation over the
    step), so integrating the noise-free stream reproduces the orientation
    sequence exactly. Sample 0 copies sample 1's rate. Accelerometer
    readings are body-frame specific force: world acceleration (central
    second differences, zero at the ends) minus gravity (0,0,-g).
    """
    if noise is None:
        noise = NoiseModel()
    samples = trace.samples
    if len(samples) < 2:
        raise ValueError("pose trace too short to differentiate")
    rng = np.random.default_rng(noise.seed)
    if noise.gyro_bias is None:
        bias = Vec3(*rng.uniform(-0.002, 0.002, size=3))
    else:
        bias = noise.gyro_bias

    g = STANDARD_GRAVITY
    n = len(samples)
    rates: list[Vec3] = [Vec3(0.0, 0.0, 0.0)] * n
    for k in range(1, n):
        dt = samples[k].t - samples[k - 1].t
        rel = multiply(inverse(samples[k - 1].orientation), samples[k].orientation)
        axis, angle = to_axis_angle(rel)
        w = angle / dt
        rates[k] = Vec3(axis.x * w, axis.y * w, axis.z * w)
    rates[0] = rates[1]

    out = []
    for k in range(n):
        if 0 < k < n - 1:
            dt_prev = samples[k].t - samples[k - 1].t
            prv, cur, nxt = (
                samples[k - 1].position,
                samples[k].position,
                samples[k + 1].position,
            )
            inv_dt2 = 1.0 / (dt_prev * dt_prev)
            a_world = Vec3(
                (nxt.x - 2.0 * cur.x + prv.x) * inv_dt2,
                (nxt.y - 2.0 * cur.y + prv.y) * inv_dt2,
                (nxt.z - 2.0 * cur.z + prv.z) * inv_dt2,
            )
        else:
            a_world = Vec3(0.0, 0.0, 0.0)
        m = to_rotation_matrix(samples[k].orientation)
        fx = a_world.x
        fy = a_world.y
        fz = a_world.z + g
        accel = Vec3(
            m[0][0] * fx + m[1][0] * fy + m[2][0] * fz,
            m[0][1] * fx + m[1][1] * fy + m[2][1] * fz,
            m[0][2] * fx + m[1][2] * fy + m[2][2] * fz,
        )
        eg = rng.standard_normal(3)
        ea = rng.standard_normal(3)
        gyro = Vec3(
            rates[k].x + bias.x + noise.gyro_sigma * eg[0],
            rates[k].y + bias.y + noise.gyro_sigma * eg[1],
            rates[k].z + bias.z + noise.gyro_sigma * eg[2],
        )
        accel = Vec3(
            accel.x + noise.accel_sigma * ea[0],
            accel.y + noise.accel_sigma * ea[1],
            accel.z + noise.accel_sigma * ea[2],
        )
        out.append(ImuSample(t=samples[k].t, gyro=gyro, accel=accel))
    return ImuTrace(samples=tuple(out), nominal_rate=trace.rate)


def ground_truth_trace(trace: PoseTrace) -> OrientationTrace:
    return OrientationTrace(
        entries=tuple((s.t, s.orientation) for s in trace.samples)
    )


@lru_cache(maxsize=8)
def _local_dirs(width: int, height: int) -> np.ndarray:
    coslon, sinlon, coslat, sinlat = _equirect_tables(width, height)
    dirs = np.empty((height, width, 3), dtype=np.float64)
    dirs[:, :, 0] = coslat[:, None] * coslon[None, :]
    dirs[:, :, 1] = coslat[:, None] * sinlon[None, :]
    dirs[:, :, 2] = sinlat[:, None]
    dirs.setflags(write=False)
    return dirs


def render_scene(scene: SceneSpec, pose: PoseSample, width: int, height: int) -> EquirectFrame:
    """Analytic panorama of the scene as seen from ``pose``.

    Pure: identical inputs produce bit-identical frames.
    """
    m = np.array(to_rotation_matrix(pose.orientation))
    d_world = _local_dirs(width, height) @ m.T

    if scene.pattern == "latlong_grid":
        lam = np.arctan2(d_world[:, :, 1], d_world[:, :, 0])
        phi = np.arcsin(np.clip(d_world[:, :, 2], -1.0, 1.0))
        img = np.empty((height, width, 3), dtype=np.float64)
        img[:, :, 0] = 128.0 + 70.0 * np.sin(3.0 * lam) * np.cos(phi)
        img[:, :, 1] = 128.0 + 70.0 * np.sin(3.0 * phi)
        img[:, :, 2] = 128.0 + 70.0 * np.cos(2.0 * lam) * np.cos(phi)
    elif scene.pattern == "stripes":
        lam = np.arctan2(d_world[:, :, 1], d_world[:, :, 0])
        band = np.floor((lam + np.pi) / (2.0 * np.pi) * 8.0).astype(np.int64) % 8
        img = np.asarray(STRIPE_COLORS, dtype=np.float64)[band]
    else:  # cardinal_markers: flat backdrop, markers carry the content
        img = np.full((height, width, 3), 96.0, dtype=np.float64)

    for marker in scene.markers:
        if marker.direction is not None:
            target = np.asarray(marker.direction, dtype=np.float64)
            cos_limit = math.cos(marker.angular_radius)
        else:
            rel = vec_sub(marker.position, pose.position)
            dist = norm(rel)
            if dist <= 1e-12:
                continue
            target = np.asarray(rel, dtype=np.float64) / dist
            cos_limit = math.cos(min(marker.physical_radius / dist, math.pi))
        mask = d_world @ target >= cos_limit
        img[mask] = marker.color

    pixels = (np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)
    return EquirectFrame(pixels=pixels, timestamp=pose.t)


def load_trajectory_spec(source) -> TrajectorySpec:
    """TrajectorySpec from a JSON file path, JSON string, or dict."""
    doc = _load_json(source)
    known = {"waypoints", "speed", "accel_limit", "sample_rate", "angular_rate"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown trajectory fields: {sorted(unknown)}")
    if "waypoints" not in doc:
        raise ValueError("trajectory spec needs a waypoints list")
    wps = []
    for w in doc["waypoints"]:
        q = w.get("orientation", [1.0, 0.0, 0.0, 0.0])
        wps.append(
            Waypoint(
                position=Vec3(*(float(c) for c in w["position"])),
                orientation=UnitQuaternion(*(float(c) for c in q)),
                pause=float(w.get("pause", 0.0)),
            )
        )
    kwargs = {k: float(v) for k, v in doc.items() if k != "waypoints"}
    return TrajectorySpec(waypoints=tuple(wps), **kwargs)


def load_scene_spec(source) -> SceneSpec:
    doc = _load_json(source)
    unknown = set(doc) - {"pattern", "markers"}
    if unknown:
        raise ValueError(f"unknown scene fields: {sorted(unknown)}")
    markers = []
    for m in doc.get("markers", []):
        kwargs = {"color": tuple(int(c) for c in m["color"])}
        if "direction" in m:
            kwargs["direction"] = Vec3(*(float(c) for c in m["direction"]))
        if "position" in m:
            kwargs["position"] = Vec3(*(float(c) for c in m["position"]))
        for key in ("angular_radius", "physical_radius"):
            if key in m:
                kwargs[key] = float(m[key])
        markers.append(Marker(**kwargs))
    return SceneSpec(pattern=doc.get("pattern", "latlong_grid"), markers=tuple(markers))


def load_noise_model(source) -> NoiseModel:
    doc = _load_json(source)
    unknown = set(doc) - {"gyro_sigma", "gyro_bias", "accel_sigma", "seed"}
    if unknown:
        raise ValueError(f"unknown noise fields: {sorted(unknown)}")
    kwargs = {}
    for key in ("gyro_sigma", "accel_sigma"):
        if key in doc:
            kwargs[key] = float(doc[key])
    if "gyro_bias" in doc and doc["gyro_bias"] is not None:
        kwargs["gyro_bias"] = Vec3(*(float(c) for c in doc["gyro_bias"]))
    if "seed" in doc:
        kwargs["seed"] = int(doc["seed"])
    return NoiseModel(**kwargs)


def _load_json(source):
    if isinstance(source, dict):
        return dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, "r", encoding="utf-8") as fh:
            return json.load(fh)
    return json.loads(source)


def generate_dataset(
    spec: TrajectorySpec,
    scene: SceneSpec,
    noise: NoiseModel,
    out_dir,
    width: int = 640,
    height: int = 320,
    fps: float = 10.0,
    duration: float | None = None,
) -> tuple[FrameManifest, OrientationTrace]:
    """Write a complete dataset: PNG frames, IMU CSV, ground-truth JSONL,
    and the manifest tying them together. Returns the manifest and the
    ground-truth orientation trace."""
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)

    traj = Trajectory(spec)
    pose_trace = generate_trajectory(spec, duration)
    total = pose_trace.samples[-1].t

    imu = synthesize_imu(pose_trace, noise)
    write_imu_csv(imu, out_dir / "imu.csv")
    truth = ground_truth_trace(pose_trace)
    write_orientation_jsonl(truth, out_dir / "ground_truth.jsonl")

    frame_names = []
    n_frames = int(math.floor(total * fps)) + 1
    for k in range(n_frames):
        t = k / fps
        pos, q = traj.pose_at(t)
        frame = render_scene(scene, PoseSample(t=t, position=pos, orientation=q), width, height)
        name = f"frames/{k:06d}.png"
        write_frame(frame, out_dir / name)
        frame_names.append(name)

    manifest = FrameManifest(
        width=width,
        height=height,
        fps=fps,
        t0=0.0,
        frames=tuple(frame_names),
        imu="imu.csv",
        orientations=None,
        ground_truth="ground_truth.jsonl",
        convention=CONVENTION,
        base_dir=out_dir,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest, truth
