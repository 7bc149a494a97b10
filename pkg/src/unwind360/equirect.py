"""Equirectangular panorama geometry: direction/pixel mapping, full-frame
rotation, and pinhole viewport extraction.

Pixel convention (fixed for the whole toolkit):

    longitude  lam = 2*pi*(u + 0.5)/W - pi      (u = column)
    latitude   phi = pi/2 - pi*(v + 0.5)/H      (v = row)
    direction  d   = (cos phi * cos lam, cos phi * sin lam, sin phi)

so +X looks at the image center, +Y at u = 3W/4 - 0.5, and +Z at the top
row. Horizontal indexing wraps at the seam; vertical indexing clamps at the
poles. Viewports are pinhole cameras with forward = +X, up = +Z (screen
left = +Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .quat import IDENTITY, UnitQuaternion, Vec3, to_rotation_matrix

_worker_threads: int | None = None


def set_worker_threads(threads: int | None) -> None:
    """Set the default worker count for frame warps (None = all available)."""
    global _worker_threads
    if threads is not None and threads < 1:
        raise ValueError("threads must be >= 1")
    _worker_threads = threads


def get_worker_threads() -> int:
    return kernels.resolve_threads(_worker_threads)


@dataclass(frozen=True)
class EquirectFrame:
    """A 2:1 equirectangular RGB8 panorama plus its capture time."""

    pixels: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("pixels must be an HxWx3 array")
        if px.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        if px.shape[1] != 2 * px.shape[0]:
            raise ValueError(
                f"width must be twice height, got {px.shape[1]}x{px.shape[0]}"
            )
        if not px.flags.c_contiguous:
            object.__setattr__(self, "pixels", np.ascontiguousarray(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ViewportSpec:
    """Pinhole viewport: size in pixels and horizontal field of view."""

    width: int
    height: int
    horizontal_fov: float = math.radians(90.0)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("viewport must be at least 1x1")
        if not 0.0 < self.horizontal_fov < math.pi:
            raise ValueError("horizontal_fov must be in (0, pi)")

    @property
    def focal_px(self) -> float:
        return (self.width / 2.0) / math.tan(self.horizontal_fov / 2.0)


@dataclass(frozen=True)
class ViewerPose:
    """Viewer head orientation relative to the seat frame."""

    q_head: UnitQuaternion = IDENTITY
    timestamp: float = 0.0


def pixel_to_direction(u: float, v: float, width: int, height: int) -> Vec3:
    """Unit direction seen by pixel (u, v) of a width x height panorama."""
    lam = 2.0 * math.pi * (u + 0.5) / width - math.pi
    phi = math.pi / 2.0 - math.pi * (v + 0.5) / height
    cphi = math.cos(phi)
    return Vec3(cphi * math.cos(lam), cphi * math.sin(lam), math.sin(phi))


def direction_to_pixel(d: Vec3, width: int, height: int) -> tuple[float, float]:
    """Fractional pixel coordinates looking along ``d``.

    u lies in [-0.5, width - 0.5) (seam wrap), v in [-0.5, height - 0.5].
    """
    n = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if n == 0.0:
        raise ValueError("direction must be non-zero")
    z = d[2] / n
    lam = math.atan2(d[1], d[0])
    phi = math.asin(min(1.0, max(-1.0, z)))
    u = (lam + math.pi) * width / (2.0 * math.pi) - 0.5
    if u >= width - 0.5:
        u -= width
    v = (0.5 - phi / math.pi) * height - 0.5
    return u, v


def sample_bilinear(frame: EquirectFrame, u: float, v: float) -> tuple[float, float, float]:
    """Bilinear RGB sample at fractional (u, v); wraps in u, clamps in v.

    Returns unquantized floats so blend weights are exact; the compiled
    warp kernels apply the same arithmetic and round to uint8.
    """
    px = frame.pixels
    h, w = px.shape[0], px.shape[1]
    u0 = math.floor(u)
    v0 = math.floor(v)
    fu = u - u0
    fv = v - v0
    c0 = int(u0) % w
    c1 = (int(u0) + 1) % w
    r0 = min(max(int(v0), 0), h - 1)
    r1 = min(max(int(v0) + 1, 0), h - 1)
    w00 = (1.0 - fu) * (1.0 - fv)
    w10 = fu * (1.0 - fv)
    w01 = (1.0 - fu) * fv
    w11 = fu * fv
    out = []
    for ch in range(3):
        out.append(
            w00 * float(px[r0, c0, ch])
            + w10 * float(px[r0, c1, ch])
            + w01 * float(px[r1, c0, ch])
            + w11 * float(px[r1, c1, ch])
        )
    return out[0], out[1], out[2]


@lru_cache(maxsize=8)
def _equirect_tables(width: int, height: int):
    """Per-column cos/sin longitude and per-row cos/sin latitude tables."""
    u = np.arange(width, dtype=np.float64)
    v = np.arange(height, dtype=np.float64)
    lam = 2.0 * np.pi * (u + 0.5) / width - np.pi
    phi = np.pi / 2.0 - np.pi * (v + 0.5) / height
    tables = (np.cos(lam), np.sin(lam), np.cos(phi), np.sin(phi))
    for t in tables:
        t.setflags(write=False)
    return tables


@lru_cache(maxsize=8)
def _viewport_directions(width: int, height: int, horizontal_fov: float) -> np.ndarray:
    """Canonical (pre-rotation) unit view ray per viewport pixel."""
    f = (width / 2.0) / math.tan(horizontal_fov / 2.0)
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    i = np.arange(width, dtype=np.float64)
    j = np.arange(height, dtype=np.float64)
    dirs = np.empty((height, width, 3), dtype=np.float64)
    dirs[:, :, 0] = f
    dirs[:, :, 1] = (cx - i)[None, :]
    dirs[:, :, 2] = (cy - j)[:, None]
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    dirs.setflags(write=False)
    return dirs


def _matrix(q: UnitQuaternion) -> np.ndarray:
    return np.array(to_rotation_matrix(q), dtype=np.float64)


def rotate_frame(
    frame: EquirectFrame, q: UnitQuaternion, threads: int | None = None
) -> EquirectFrame:
    """Rotate panorama content by ``q``: the output pixel looking along a
    world direction d shows what the input saw along rotate_vector(q^-1, d).

    Feeding each frame of a shaky sequence its own camera orientation
    therefore yields a world-stable sequence.
    """
    h, w = frame.height, frame.width
    coslon, sinlon, coslat, sinlat = _equirect_tables(w, h)
    m = np.ascontiguousarray(_matrix(q).T)
    out = np.empty_like(frame.pixels)
    nthreads = kernels.resolve_threads(threads if threads is not None else _worker_threads)
    kernels.run_equirect_warp(
        frame.pixels, coslon, sinlon, coslat, sinlat, m, out, nthreads
    )
    return EquirectFrame(pixels=out, timestamp=frame.timestamp)


MODES = ("CR", "UR")


def extract_viewport(
    frame: EquirectFrame,
    pose: ViewerPose,
    spec: ViewportSpec,
    mode: str = "CR",
    q_cam: UnitQuaternion = IDENTITY,
    threads: int | None = None,
) -> np.ndarray:
    """Render a pinhole view of ``frame`` for a viewer with ``pose``.

    mode "CR" couples the viewer to the recorded frame: rays are rotated by
    q_head only, so camera rotation baked into the frames reaches the
    viewer. Mode "UR" additionally applies the inverse of the camera
    orientation ``q_cam``, cancelling camera rotation so the viewer turns
    only when the head does. With q_cam = identity the two modes agree
    bit-exactly.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    dirs = _viewport_directions(spec.width, spec.height, spec.horizontal_fov)
    m = _matrix(pose.q_head)
    if mode == "UR":
        m = np.ascontiguousarray(_matrix(q_cam).T @ m)
    out = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    nthreads = kernels.resolve_threads(threads if threads is not None else _worker_threads)
    kernels.run_directions_warp(frame.pixels, dirs, m, out, nthreads)
    return out
