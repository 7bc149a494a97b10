#!/usr/bin/env python3
"""Regenerate the viewer test fixtures from the unwind360 pipeline.

    python3 frontend/scripts/make_fixtures.py

Two fixture sets land in frontend/tests/fixtures/:

* static/ — a complete miniature dataset (64x32, camera parked at the
  origin) with an exact-identity orientation trace wired into the
  manifest. Session tests load it through a stubbed fetch, and the
  mode-toggle test uses it to show UR == CR when the camera never moved.

* agreement/ — sampled frames from the demo trajectory rendered at
  640x320, the Mahony estimate of the camera path (decimated to 10 Hz),
  and cases.json: (frame, pose, mode) triples with the center-pixel color
  the reference renderer produces for each. The viewer must reproduce
  those colors within 4/255 per channel.

* rotation/ — six 64x32 frames of a camera spinning in place over a
  smooth gradient, with its exact orientation trace. With the mouse
  untouched, UR must hold the view still while CR visibly spins.

The demo render takes ~10 s; everything is deterministic (zero sensor
noise, seeded pose sampling), so reruns are byte-identical.
"""

from __future__ import annotations

import json
import math
import random
import shutil
import tempfile
from dataclasses import replace
from pathlib import Path

from unwind360.dataio import (
    OrientationTrace,
    orientation_at,
    parse_imu_csv,
    read_frame,
    save_manifest,
    write_orientation_jsonl,
)
from unwind360.equirect import ViewerPose, ViewportSpec, extract_viewport
from unwind360.mahony import run as run_filter
from unwind360.quat import IDENTITY, Vec3, from_axis_angle, multiply
from unwind360.quat import yaw as yaw_quat
from unwind360.sim import (
    NO_NOISE,
    SceneSpec,
    TrajectorySpec,
    Waypoint,
    cardinal_scene,
    demo_trajectory_spec,
    generate_dataset,
    pure_rotation_spec,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

VIEWPORT = 65  # odd, so the center pixel looks exactly along the view axis
CENTER = VIEWPORT // 2

FRAME_INDICES = (0, 23, 47, 71, 95, 119, 143, 167, 191, 215, 239, 280)
HFOVS = (math.radians(60.0), math.radians(90.0), math.radians(110.0))


def _fresh(path: Path) -> Path:
    shutil.rmtree(path, ignore_errors=True)
    path.mkdir(parents=True)
    return path


def make_static() -> None:
    out = _fresh(FIXTURES / "static")
    origin = Vec3(0.0, 0.0, 0.0)
    spec = TrajectorySpec(
        waypoints=(
            Waypoint(origin, IDENTITY, pause=1.0),
            Waypoint(origin, IDENTITY, pause=1.0),
        )
    )
    manifest, _ = generate_dataset(
        spec, cardinal_scene(), NO_NOISE, out, width=64, height=32, fps=2.0
    )
    identity = OrientationTrace(
        entries=tuple((k * 0.5, IDENTITY) for k in range(5))
    )
    write_orientation_jsonl(identity, out / "orientations.jsonl")
    save_manifest(
        replace(manifest, orientations="orientations.jsonl"),
        out / "manifest.json",
    )
    print(f"static: {len(manifest.frames)} frames -> {out}")


def make_rotation() -> None:
    out = _fresh(FIXTURES / "rotation")
    (out / "frames").mkdir()
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp = Path(tmpdir)
        # fps 0.2 lands one frame on each dwell/mid-rotation of the ~25 s path
        manifest, truth = generate_dataset(
            pure_rotation_spec(), SceneSpec(pattern="latlong_grid"), NO_NOISE,
            tmp, width=64, height=32, fps=0.2,
        )
        for name in manifest.frames:
            shutil.copy2(tmp / name, out / name)
        write_orientation_jsonl(
            OrientationTrace(entries=truth.entries[::10]),
            out / "orientations.jsonl",
        )
        save_manifest(
            replace(
                manifest,
                imu=None,
                ground_truth=None,
                orientations="orientations.jsonl",
            ),
            out / "manifest.json",
        )
    print(f"rotation: {len(manifest.frames)} frames -> {out}")


def make_agreement() -> None:
    out = _fresh(FIXTURES / "agreement")
    (out / "frames").mkdir()
    scene = SceneSpec(pattern="latlong_grid", markers=cardinal_scene().markers)

    with tempfile.TemporaryDirectory() as tmpdir:
        tmp = Path(tmpdir)
        generate_dataset(
            demo_trajectory_spec(), scene, NO_NOISE, tmp,
            width=640, height=320, fps=1.0,
        )
        estimate = run_filter(parse_imu_csv(tmp / "imu.csv"))
        trace = OrientationTrace(entries=estimate.entries[::10])
        write_orientation_jsonl(trace, out / "orientations.jsonl")

        rng = random.Random(20260823)
        cases = []
        for i, k in enumerate(FRAME_INDICES):
            name = f"frames/{k:06d}.png"
            shutil.copy2(tmp / name, out / name)
            frame = read_frame(tmp / name)
            for j in range(2):
                yaw = rng.uniform(-math.pi, math.pi)
                pitch = rng.uniform(-1.2, 1.2)
                hfov = rng.choice(HFOVS)
                mode = "CR" if (i + j) % 2 == 0 else "UR"
                t = float(k)
                q_head = multiply(
                    yaw_quat(yaw), from_axis_angle(Vec3(0.0, 1.0, 0.0), -pitch)
                )
                q_cam = orientation_at(trace, t) if mode == "UR" else IDENTITY
                view = extract_viewport(
                    frame,
                    ViewerPose(q_head=q_head),
                    ViewportSpec(VIEWPORT, VIEWPORT, hfov),
                    mode,
                    q_cam,
                )
                cases.append(
                    {
                        "frame": name,
                        "t": t,
                        "yaw": yaw,
                        "pitch": pitch,
                        "hfov": hfov,
                        "mode": mode,
                        "expected": [int(c) for c in view[CENTER, CENTER]],
                    }
                )

    doc = {
        "source": "demo trajectory at 640x320, 1 fps; filter output at 10 Hz",
        "width": 640,
        "height": 320,
        "fps": 1.0,
        "t0": 0.0,
        "viewport": VIEWPORT,
        "orientations": "orientations.jsonl",
        "cases": cases,
    }
    (out / "cases.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(f"agreement: {len(cases)} cases over {len(FRAME_INDICES)} frames -> {out}")


if __name__ == "__main__":
    make_static()
    make_rotation()
    make_agreement()
