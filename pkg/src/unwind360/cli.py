"""Operator command line tying the pipeline stages together.

Each subcommand runs one stage over files on disk so stages compose:
``simulate`` writes a synthetic dataset (frames, IMU log, ground truth,
manifest), ``filter`` turns the IMU log into an orientation JSONL,
``unwind`` re-renders frames with the estimated camera rotation removed,
``view`` renders pinhole viewport sequences in CR or UR mode, ``drift``
scores an estimated trace against a reference, and ``serve`` exposes a
dataset directory to browser clients over read-only HTTP.

User mistakes (missing files, bad JSON, busy ports) exit with status 2;
status 0 means all outputs were fully written.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import replace
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence

from .dataio import (
    FrameManifest,
    OrientationTrace,
    load_manifest,
    orientation_at,
    parse_imu_csv,
    read_orientation_jsonl,
    save_manifest,
    write_frame,
    write_orientation_jsonl,
)
from .equirect import ViewerPose, ViewportSpec
from .mahony import FilterConfig, load_filter_config
from .mahony import run as run_filter
from .quat import IDENTITY, Vec3
from .sim import (
    NoiseModel,
    SceneSpec,
    TrajectorySpec,
    Waypoint,
    cardinal_scene,
    demo_trajectory_spec,
    generate_dataset,
    load_noise_model,
    load_scene_spec,
    load_trajectory_spec,
)
from .unwind import compute_drift, render_session, save_drift_report, unwind_frames

log = logging.getLogger("unwind360.cli")


class CliError(Exception):
    """User-facing failure; the process exits with status 2."""


def _manifest_path(arg: str) -> Path:
    """Accept either a dataset directory or a manifest file path."""
    p = Path(arg)
    return p / "manifest.json" if p.is_dir() else p


def _load_orientations(
    manifest: FrameManifest, arg: str | None
) -> OrientationTrace | None:
    """Orientation trace from an explicit path, else the manifest's, else None."""
    if arg is not None:
        return read_orientation_jsonl(arg)
    path = manifest.resolve(manifest.orientations)
    if path is None:
        return None
    return read_orientation_jsonl(path)


def _static_spec() -> TrajectorySpec:
    origin = Waypoint(Vec3(0.0, 0.0, 0.0), IDENTITY, pause=1.0)
    return TrajectorySpec(waypoints=(origin, origin))


def _demo_scene() -> SceneSpec:
    return SceneSpec(pattern="latlong_grid", markers=cardinal_scene().markers)


def cmd_simulate(args: argparse.Namespace) -> None:
    if args.static:
        spec = _static_spec()
    elif args.config:
        spec = load_trajectory_spec(args.config)
    else:
        spec = demo_trajectory_spec()
    scene = load_scene_spec(args.scene) if args.scene else _demo_scene()
    noise = load_noise_model(args.noise) if args.noise else NoiseModel()
    if args.seed is not None:
        noise = replace(noise, seed=args.seed)

    t_start = time.perf_counter()
    manifest, truth = generate_dataset(
        spec,
        scene,
        noise,
        args.out,
        width=args.width,
        height=args.height,
        fps=args.fps,
        duration=args.duration,
    )
    log.info(
        "simulate: %d frames + %s in %.2f s",
        len(manifest.frames),
        manifest.imu,
        time.perf_counter() - t_start,
    )
    print(
        f"dataset: {len(manifest.frames)} frames, {truth.t_last:.1f} s at "
        f"{manifest.fps:g} fps, {manifest.width}x{manifest.height} -> {args.out}"
    )


def cmd_filter(args: argparse.Namespace) -> None:
    manifest = load_manifest(_manifest_path(args.manifest))
    imu_path = manifest.resolve(manifest.imu)
    if imu_path is None:
        raise CliError(f"{args.manifest}: manifest lists no IMU log to filter")
    trace = parse_imu_csv(imu_path)
    config = load_filter_config(args.config) if args.config else FilterConfig()

    t_start = time.perf_counter()
    estimate = run_filter(trace, config)
    log.info(
        "filter: %d samples in %.2f s",
        len(trace.samples),
        time.perf_counter() - t_start,
    )

    out = Path(args.out) if args.out else manifest.base_dir / "orientations.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_orientation_jsonl(estimate, out)
    if out.resolve().parent == manifest.base_dir.resolve():
        save_manifest(
            replace(manifest, orientations=out.name),
            manifest.base_dir / "manifest.json",
        )
        log.info("filter: recorded %s in the dataset manifest", out.name)
    span = estimate.t_last - estimate.t_first
    print(f"orientations: {len(estimate.entries)} entries spanning {span:.1f} s -> {out}")


def cmd_unwind(args: argparse.Namespace) -> None:
    manifest = load_manifest(_manifest_path(args.manifest))
    orientations = _load_orientations(manifest, args.orientations)
    if orientations is None:
        raise CliError(
            "no orientation trace: pass one explicitly or run `filter` first"
        )
    t_start = time.perf_counter()
    out_manifest = unwind_frames(manifest, orientations, args.out, threads=args.threads)
    elapsed = time.perf_counter() - t_start
    n = len(out_manifest.frames)
    log.info("unwind: %d frames in %.2f s (%.1f ms/frame)", n, elapsed, 1e3 * elapsed / n)
    print(f"unwound: {n} frames -> {args.out}")


def cmd_view(args: argparse.Namespace) -> None:
    manifest = load_manifest(_manifest_path(args.manifest))
    orientations = _load_orientations(manifest, args.orientations)
    if args.mode == "UR" and orientations is None:
        raise CliError(
            "mode 'UR' needs an orientation trace: pass one or run `filter` first"
        )
    spec = ViewportSpec(
        width=args.view_width,
        height=args.view_height,
        horizontal_fov=math.radians(args.hfov),
    )
    head: ViewerPose | list[ViewerPose]
    if args.head:
        head_trace = read_orientation_jsonl(args.head)
        head = [
            ViewerPose(
                q_head=orientation_at(head_trace, manifest.frame_time(k)),
                timestamp=manifest.frame_time(k),
            )
            for k in range(len(manifest.frames))
        ]
    else:
        head = ViewerPose()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    n = 0
    for k, view in render_session(
        manifest, orientations, head, spec, mode=args.mode, threads=args.threads
    ):
        write_frame(view, out_dir / f"{k:06d}.png")
        n += 1
        if k % 25 == 0:
            log.debug("view: frame %d/%d", k, len(manifest.frames))
    elapsed = time.perf_counter() - t_start
    log.info("view: %d viewports in %.2f s (%.1f ms/frame)", n, elapsed, 1e3 * elapsed / n)
    print(
        f"viewports: {n} frames ({args.view_width}x{args.view_height}, "
        f"{args.mode}) -> {out_dir}"
    )


def cmd_drift(args: argparse.Namespace) -> None:
    estimated = read_orientation_jsonl(args.estimated)
    truth = read_orientation_jsonl(args.truth)
    report = compute_drift(estimated, truth)
    if args.out:
        save_drift_report(report, args.out)
        log.info("drift: report -> %s", args.out)
    span = estimated.t_last - estimated.t_first
    print(
        f"drift over {len(report.series)} entries spanning {span:.1f} s: "
        f"mean {report.mean:.4f} rad, max {report.max:.4f} rad, "
        f"final {report.final:.4f} rad"
    )


class DatasetRequestHandler(SimpleHTTPRequestHandler):
    """Read-only static file handler with CORS open to browser clients."""

    extensions_map = {
        **SimpleHTTPRequestHandler.extensions_map,
        ".json": "application/json",
        ".jsonl": "application/x-ndjson",
        ".png": "image/png",
        ".csv": "text/csv",
    }

    def end_headers(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        super().end_headers()

    def log_message(self, format: str, *args) -> None:
        log.debug("%s %s", self.address_string(), format % args)


def make_server(directory, host: str = "127.0.0.1", port: int = 8000) -> ThreadingHTTPServer:
    """Bind a GET-only dataset server; CliError if the port is taken or
    the directory holds no manifest."""
    root = Path(directory)
    if not (root / "manifest.json").is_file():
        raise CliError(f"{root}: no manifest.json to serve")
    handler = partial(DatasetRequestHandler, directory=str(root))
    try:
        return ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise CliError(f"cannot bind {host}:{port}: {exc}") from None


def cmd_serve(args: argparse.Namespace) -> None:
    server = make_server(args.directory, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    print(f"serving {args.directory} at http://{host}:{port}/ (GET only, Ctrl-C stops)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        log.info("serve: interrupted, shutting down")
    finally:
        server.server_close()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unwind360",
        description="Simulate, filter, unwind, view, score, and serve "
        "equirectangular datasets.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        choices=("debug", "info", "warning", "error"),
        default="info",
        help="logging verbosity (default: info)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic dataset")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--config", help="trajectory spec JSON (default: demo path)")
    source.add_argument(
        "--static", action="store_true", help="fixed pose at the origin instead"
    )
    p.add_argument("--scene", help="scene spec JSON (default: grid plus axis markers)")
    p.add_argument("--noise", help="noise model JSON (default: moderate noise)")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--out", required=True, help="dataset directory to create")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=320)
    p.add_argument("--fps", type=float, default=10.0)
    p.add_argument(
        "--duration", type=float, help="trim or hold the path to this many seconds"
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "filter", parents=[common], help="estimate orientations from the IMU log"
    )
    p.add_argument("manifest", help="dataset directory or manifest path")
    p.add_argument("--config", help="filter gain JSON")
    p.add_argument("--out", help="output JSONL (default: <dataset>/orientations.jsonl)")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser(
        "unwind", parents=[common], help="re-render frames with camera rotation removed"
    )
    p.add_argument("manifest", help="dataset directory or manifest path")
    p.add_argument(
        "orientations",
        nargs="?",
        help="orientation JSONL (default: the one the manifest names)",
    )
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.set_defaults(func=cmd_unwind)

    p = sub.add_parser(
        "view", parents=[common], help="render a pinhole viewport sequence"
    )
    p.add_argument("manifest", help="dataset directory or manifest path")
    p.add_argument(
        "orientations",
        nargs="?",
        help="orientation JSONL (default: the one the manifest names)",
    )
    p.add_argument("--mode", choices=("UR", "CR"), default="UR")
    p.add_argument("--head", help="viewer head orientation JSONL (default: identity)")
    p.add_argument("--out", required=True, help="directory for viewport PNGs")
    p.add_argument("--view-width", type=int, default=1280)
    p.add_argument("--view-height", type=int, default=720)
    p.add_argument("--hfov", type=float, default=90.0, help="horizontal FOV in degrees")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.set_defaults(func=cmd_view)

    p = sub.add_parser(
        "drift", parents=[common], help="score an estimated trace against a reference"
    )
    p.add_argument("estimated", help="estimated orientation JSONL")
    p.add_argument("truth", help="reference orientation JSONL")
    p.add_argument("--out", help="write the full report JSON here")
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser(
        "serve", parents=[common], help="serve a dataset directory over HTTP"
    )
    p.add_argument("directory", help="dataset directory containing manifest.json")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    level = getattr(logging, args.log_level.upper())
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
