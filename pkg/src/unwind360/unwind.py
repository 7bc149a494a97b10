"""Rotation unwinding: cancel estimated camera rotation so that only
viewer-initiated rotation remains visible.

The unwound-frame state starts coupled to the camera (it inherits every
rotation the camera undergoes) and is corrected by composing with the
inverse of the estimated camera orientation. With a perfect estimate the
two cancel and the state is the identity at every step; with a real
estimate the state carries exactly the residual estimation error.

Image-space application is ``rotate_frame(frame_k, q_est(t_k))``: the
rotate operation itself resamples the input at the inversely rotated
direction, which is precisely the cancellation above, so the estimate is
passed directly (composing an extra inverse here would re-wind the frames
instead of unwinding them — see the world-stability tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .dataio import (
    FrameManifest,
    OrientationTrace,
    orientation_at,
    read_frame,
    save_manifest,
    write_frame,
)
from .equirect import (
    EquirectFrame,
    ViewerPose,
    ViewportSpec,
    extract_viewport,
    rotate_frame,
)
from .quat import IDENTITY, UnitQuaternion, geodesic_distance, inverse, multiply


@dataclass(frozen=True)
class UnwindState:
    q_u: UnitQuaternion = IDENTITY
    k: int = 0


def couple(state: UnwindState, q_cam: UnitQuaternion) -> UnwindState:
    """Let the camera's rotation reach the unwound frame (the default
    coupling: whatever rotates the camera rotates the view)."""
    return UnwindState(q_u=UnitQuaternion(*q_cam), k=state.k)


def unwind_step(state: UnwindState, q_cam_est: UnitQuaternion) -> UnwindState:
    """Compose the coupled state with the inverse orientation estimate.

    With a perfect estimate the result is the identity; otherwise it is the
    residual error rotation.
    """
    q = multiply(state.q_u, inverse(UnitQuaternion(*q_cam_est)))
    return UnwindState(q_u=q, k=state.k + 1)


def residual(q_cam: UnitQuaternion, q_cam_est: UnitQuaternion) -> UnitQuaternion:
    """Closed form of couple-then-unwind for one step."""
    return multiply(q_cam, inverse(q_cam_est))


def _frame_orientation(
    orientations: OrientationTrace, t: float, k: int
) -> UnitQuaternion:
    try:
        return orientation_at(orientations, t)
    except ValueError as exc:
        raise ValueError(f"frame {k}: {exc}") from None


def iter_unwound_frames(
    manifest: FrameManifest,
    orientations: OrientationTrace,
    threads: int | None = None,
) -> Iterator[tuple[int, EquirectFrame]]:
    """Yield (index, unwound frame) for every frame in the manifest."""
    for k in range(len(manifest.frames)):
        t = manifest.frame_time(k)
        q = _frame_orientation(orientations, t, k)
        frame = read_frame(manifest.frame_file(k), timestamp=t)
        yield k, rotate_frame(frame, q, threads=threads)


def unwind_frames(
    manifest: FrameManifest,
    orientations: OrientationTrace,
    out_dir,
    threads: int | None = None,
) -> FrameManifest:
    """Write the unwound dataset next to a fresh manifest and return it."""
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)
    names = []
    for k, frame in iter_unwound_frames(manifest, orientations, threads=threads):
        name = f"frames/{k:06d}.png"
        write_frame(frame, out_dir / name)
        names.append(name)
    out = FrameManifest(
        width=manifest.width,
        height=manifest.height,
        fps=manifest.fps,
        t0=manifest.t0,
        frames=tuple(names),
        convention=manifest.convention,
        base_dir=out_dir,
    )
    save_manifest(out, out_dir / "manifest.json")
    return out


def render_session(
    manifest: FrameManifest,
    orientations: OrientationTrace | None,
    head: ViewerPose | Sequence[ViewerPose],
    spec: ViewportSpec,
    mode: str = "UR",
    threads: int | None = None,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield per-frame viewports for a viewer head trace.

    ``head`` may be a single pose (held for the whole session) or one pose
    per frame. Mode "CR" leaves camera rotation in the view; "UR" cancels
    it using the orientation trace.
    """
    n = len(manifest.frames)
    if isinstance(head, ViewerPose):
        poses: Sequence[ViewerPose] = [head] * n
    else:
        poses = head
        if len(poses) < n:
            raise ValueError(
                f"head trace has {len(poses)} poses for {n} frames"
            )
    for k in range(n):
        t = manifest.frame_time(k)
        q_cam = IDENTITY
        if mode == "UR":
            if orientations is None:
                raise ValueError("mode 'UR' requires an orientation trace")
            q_cam = _frame_orientation(orientations, t, k)
        frame = read_frame(manifest.frame_file(k), timestamp=t)
        view = extract_viewport(
            frame, poses[k], spec, mode=mode, q_cam=q_cam, threads=threads
        )
        yield k, view


@dataclass(frozen=True)
class DriftReport:
    """Geodesic error between an estimated and a reference orientation
    trace, per entry and aggregated."""

    mean: float
    max: float
    final: float
    series: tuple[tuple[float, float], ...]

    def to_json(self) -> str:
        doc = {
            "mean": self.mean,
            "max": self.max,
            "final": self.final,
            "series": [{"t": t, "e": e} for t, e in self.series],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DriftReport":
        doc = json.loads(text)
        return cls(
            mean=float(doc["mean"]),
            max=float(doc["max"]),
            final=float(doc["final"]),
            series=tuple((float(p["t"]), float(p["e"])) for p in doc["series"]),
        )


def compute_drift(
    estimated: OrientationTrace, truth: OrientationTrace
) -> DriftReport:
    """Per-entry geodesic error of ``estimated`` against ``truth``
    (interpolated at the estimated timestamps)."""
    series = []
    for t, q in estimated.entries:
        try:
            q_true = orientation_at(truth, t)
        except ValueError as exc:
            raise ValueError(f"truth trace does not cover t={t}: {exc}") from None
        series.append((t, geodesic_distance(q, q_true)))
    errors = [e for _, e in series]
    return DriftReport(
        mean=sum(errors) / len(errors),
        max=max(errors),
        final=errors[-1],
        series=tuple(series),
    )


def save_drift_report(report: DriftReport, path) -> None:
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")
