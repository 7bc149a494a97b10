"""Dataset model and file formats: IMU CSV traces, orientation JSONL traces,
and the frame manifest that ties PNG frame sequences to their sensor files.

All timestamps are seconds on one shared clock (floats). The accelerometer
convention: a resting, level sensor reads +g along body +Z. The manifest
stores file locations relative to its own directory.
"""

from __future__ import annotations

import io
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .equirect import EquirectFrame
from .quat import UnitQuaternion, Vec3, slerp

IMU_CSV_HEADER = "t,gx,gy,gz,ax,ay,az"

# One descriptor string stamped into every trace/manifest this toolkit writes.
CONVENTION = (
    "world:right-handed,z-up; camera:+x-forward; "
    "equirect:lon=2pi*(u+0.5)/W-pi,lat=pi/2-pi*(v+0.5)/H; "
    "quat:wxyz,active; accel-at-rest:+g-on-body-z"
)


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro: Vec3
    accel: Vec3

    def __post_init__(self) -> None:
        for x in (self.t, *self.gyro, *self.accel):
            if not math.isfinite(x):
                raise ValueError(f"non-finite IMU sample at t={self.t!r}")


@dataclass(frozen=True)
class ImuTrace:
    """Ordered IMU samples plus their nominal sampling rate in Hz."""

    samples: tuple[ImuSample, ...]
    nominal_rate: float

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise ValueError("an IMU trace needs at least 2 samples")
        if self.nominal_rate <= 0:
            raise ValueError("nominal_rate must be positive")
        for a, b in zip(self.samples, self.samples[1:]):
            if b.t <= a.t:
                raise ValueError(
                    f"timestamps must strictly increase ({a.t} then {b.t})"
                )

    def gap_indices(self) -> list[int]:
        """Indices i where the step from sample i-1 to i exceeds 10 nominal
        periods; such gaps are flagged here and rejected by the filter."""
        limit = 10.0 / self.nominal_rate
        return [
            i
            for i in range(1, len(self.samples))
            if self.samples[i].t - self.samples[i - 1].t > limit
        ]

    @property
    def duration(self) -> float:
        return self.samples[-1].t - self.samples[0].t


def parse_imu_csv(source) -> ImuTrace:
    """Parse `t,gx,gy,gz,ax,ay,az` CSV (``#`` lines are comments).

    ``source`` may be a path, a text stream, or a byte stream. Malformed
    rows and non-monotonic timestamps are reported with their line number.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_imu_csv(fh)
    if isinstance(source, (bytes, bytearray)):
        return parse_imu_csv(io.StringIO(source.decode("utf-8")))
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)):
        source = io.TextIOWrapper(source, encoding="utf-8")

    samples: list[ImuSample] = []
    header_seen = False
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != IMU_CSV_HEADER:
                raise ValueError(
                    f"line {lineno}: expected header {IMU_CSV_HEADER!r}, got {line!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed number in {line!r}") from None
        t = values[0]
        if samples and t <= samples[-1].t:
            raise ValueError(
                f"line {lineno}: timestamp {t} does not increase past {samples[-1].t}"
            )
        try:
            samples.append(
                ImuSample(t=t, gyro=Vec3(*values[1:4]), accel=Vec3(*values[4:7]))
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not header_seen:
        raise ValueError("empty IMU CSV (no header)")
    if len(samples) < 2:
        raise ValueError("IMU CSV contains fewer than 2 samples")
    dts = sorted(b.t - a.t for a, b in zip(samples, samples[1:]))
    nominal_rate = 1.0 / dts[len(dts) // 2]
    return ImuTrace(samples=tuple(samples), nominal_rate=nominal_rate)


def write_imu_csv(trace: ImuTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# units: s, rad/s, m/s^2; accel at rest reads +g on body +Z\n")
        fh.write(IMU_CSV_HEADER + "\n")
        for s in trace.samples:
            fields = (s.t, *s.gyro, *s.accel)
            fh.write(",".join(repr(float(x)) for x in fields) + "\n")


@dataclass(frozen=True)
class OrientationTrace:
    """Timestamped orientations, sign-continuous (consecutive dots >= 0)."""

    entries: tuple[tuple[float, UnitQuaternion], ...]
    frame_convention: str = CONVENTION

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("orientation trace is empty")
        fixed = [self.entries[0]]
        for t, q in self.entries[1:]:
            if t <= fixed[-1][0]:
                raise ValueError(
                    f"timestamps must strictly increase ({fixed[-1][0]} then {t})"
                )
            prev = fixed[-1][1]
            if sum(a * b for a, b in zip(prev, q)) < 0.0:
                q = UnitQuaternion(-q[0], -q[1], -q[2], -q[3])
            fixed.append((t, q))
        object.__setattr__(self, "entries", tuple(fixed))
        times = tuple(t for t, _ in fixed)
        object.__setattr__(self, "_times", times)
        if len(times) < 2:
            period = math.inf
        else:
            dts = sorted(b - a for a, b in zip(times, times[1:]))
            period = dts[len(dts) // 2]
        object.__setattr__(self, "_period", period)

    @property
    def t_first(self) -> float:
        return self.entries[0][0]

    @property
    def t_last(self) -> float:
        return self.entries[-1][0]

    def nominal_period(self) -> float:
        return self._period


def write_orientation_jsonl(trace: OrientationTrace, path) -> None:
    """One ``{"t", "w", "x", "y", "z"}`` object per line; float repr keeps
    the round trip lossless."""
    with open(path, "w", encoding="utf-8") as fh:
        for t, q in trace.entries:
            fh.write(
                json.dumps({"t": t, "w": q.w, "x": q.x, "y": q.y, "z": q.z}) + "\n"
            )


def read_orientation_jsonl(path) -> OrientationTrace:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                t = float(obj["t"])
                w, x, y, z = (float(obj[k]) for k in ("w", "x", "y", "z"))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ValueError(f"{path}: line {lineno}: malformed entry") from None
            n = math.sqrt(w * w + x * x + y * y + z * z)
            if abs(n - 1.0) > 1e-6:
                raise ValueError(
                    f"{path}: line {lineno}: quaternion norm {n} is not unit"
                )
            entries.append((t, UnitQuaternion(w, x, y, z)))
    if not entries:
        raise ValueError(f"{path}: empty orientation trace")
    return OrientationTrace(entries=tuple(entries))


def orientation_at(trace: OrientationTrace, t: float) -> UnitQuaternion:
    """Orientation at time ``t``: slerp between bracketing entries, clamped
    to the endpoints when ``t`` lies within one nominal period outside the
    covered range. A single-entry trace is treated as constant."""
    entries = trace.entries
    if len(entries) == 1:
        return entries[0][1]
    margin = trace.nominal_period()
    if t < entries[0][0] - margin or t > entries[-1][0] + margin:
        raise ValueError(
            f"t={t} outside orientation trace [{entries[0][0]}, {entries[-1][0]}] "
            f"by more than one period ({margin})"
        )
    times = trace._times
    i = bisect_left(times, t)
    if i < len(times) and times[i] == t:
        return entries[i][1]
    if i == 0:
        return entries[0][1]
    if i == len(times):
        return entries[-1][1]
    t0, q0 = entries[i - 1]
    t1, q1 = entries[i]
    return slerp(q0, q1, (t - t0) / (t1 - t0))


@dataclass(frozen=True)
class FrameManifest:
    """Index of a dataset: frame files, timing, and companion traces.

    Paths are stored as written in the JSON (relative to ``base_dir``).
    """

    width: int
    height: int
    fps: float
    t0: float
    frames: tuple[str, ...]
    imu: str | None = None
    orientations: str | None = None
    ground_truth: str | None = None
    convention: str = CONVENTION
    base_dir: Path = field(default_factory=Path, compare=False)

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("manifest lists no frames")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.width != 2 * self.height:
            raise ValueError("manifest frames must be 2:1 equirectangular")

    def frame_time(self, k: int) -> float:
        return self.t0 + k / self.fps

    def frame_file(self, k: int) -> Path:
        return self.base_dir / self.frames[k]

    def resolve(self, name: str | None) -> Path | None:
        return None if name is None else self.base_dir / name

    @property
    def duration(self) -> float:
        return len(self.frames) / self.fps


def save_manifest(manifest: FrameManifest, path) -> None:
    doc = {
        "width": manifest.width,
        "height": manifest.height,
        "fps": manifest.fps,
        "t0": manifest.t0,
        "frames": list(manifest.frames),
        "imu": manifest.imu,
        "orientations": manifest.orientations,
        "ground_truth": manifest.ground_truth,
        "convention": manifest.convention,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_manifest(path) -> FrameManifest:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid manifest JSON: {exc}") from None
    try:
        manifest = FrameManifest(
            width=int(doc["width"]),
            height=int(doc["height"]),
            fps=float(doc["fps"]),
            t0=float(doc["t0"]),
            frames=tuple(doc["frames"]),
            imu=doc.get("imu"),
            orientations=doc.get("orientations"),
            ground_truth=doc.get("ground_truth"),
            convention=doc.get("convention", CONVENTION),
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise ValueError(f"{path}: manifest missing field {exc}") from None
    missing = [
        str(p)
        for p in [
            *(manifest.frame_file(k) for k in range(len(manifest.frames))),
            manifest.resolve(manifest.imu),
            manifest.resolve(manifest.orientations),
            manifest.resolve(manifest.ground_truth),
        ]
        if p is not None and not Path(p).exists()
    ]
    if missing:
        raise FileNotFoundError(
            f"{path}: manifest references missing files: {', '.join(missing[:5])}"
        )
    return manifest


def read_frame(path, timestamp: float = 0.0) -> EquirectFrame:
    with Image.open(path) as im:
        pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return EquirectFrame(pixels=pixels, timestamp=timestamp)


def write_frame(frame: EquirectFrame | np.ndarray, path) -> None:
    pixels = frame.pixels if isinstance(frame, EquirectFrame) else frame
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
