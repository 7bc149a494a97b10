"""Compiled resampling kernels shared by frame rotation and viewport extraction.

Each kernel exists in a parallel and a sequential variant compiled from the
same source function, so the per-pixel float operation sequence is identical
and parallel output is bit-identical to sequential output. Rows of the
output are independent; no reductions cross rows.
"""

from __future__ import annotations

import math
import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba
import numpy as np
from numba import njit, prange


def _warp_equirect(img, coslon, sinlon, coslat, sinlat, m, out):
    # out pixel direction d from the lon/lat tables, source direction m @ d,
    # then bilinear sample with horizontal wrap and vertical clamp
    hi, wi = img.shape[0], img.shape[1]
    ho, wo = out.shape[0], out.shape[1]
    m00, m01, m02 = m[0, 0], m[0, 1], m[0, 2]
    m10, m11, m12 = m[1, 0], m[1, 1], m[1, 2]
    m20, m21, m22 = m[2, 0], m[2, 1], m[2, 2]
    for row in prange(ho):
        clat = coslat[row]
        slat = sinlat[row]
        for col in range(wo):
            dx = clat * coslon[col]
            dy = clat * sinlon[col]
            dz = slat
            x = m00 * dx + m01 * dy + m02 * dz
            y = m10 * dx + m11 * dy + m12 * dz
            z = m20 * dx + m21 * dy + m22 * dz
            lon = math.atan2(y, x)
            if z > 1.0:
                z = 1.0
            elif z < -1.0:
                z = -1.0
            lat = math.asin(z)
            uf = (lon + math.pi) * wi / (2.0 * math.pi) - 0.5
            vf = (0.5 - lat / math.pi) * hi - 0.5
            u0 = int(math.floor(uf))
            v0 = int(math.floor(vf))
            fu = uf - u0
            fv = vf - v0
            c0 = u0 % wi
            c1 = (u0 + 1) % wi
            r0 = v0
            if r0 < 0:
                r0 = 0
            elif r0 > hi - 1:
                r0 = hi - 1
            r1 = v0 + 1
            if r1 < 0:
                r1 = 0
            elif r1 > hi - 1:
                r1 = hi - 1
            w00 = (1.0 - fu) * (1.0 - fv)
            w10 = fu * (1.0 - fv)
            w01 = (1.0 - fu) * fv
            w11 = fu * fv
            for ch in range(3):
                val = (
                    w00 * img[r0, c0, ch]
                    + w10 * img[r0, c1, ch]
                    + w01 * img[r1, c0, ch]
                    + w11 * img[r1, c1, ch]
                )
                out[row, col, ch] = np.uint8(val + 0.5)


def _warp_directions(img, dirs, m, out):
    # same sampling rule, but output directions come from a per-pixel table
    # (pinhole viewport rays)
    hi, wi = img.shape[0], img.shape[1]
    ho, wo = out.shape[0], out.shape[1]
    m00, m01, m02 = m[0, 0], m[0, 1], m[0, 2]
    m10, m11, m12 = m[1, 0], m[1, 1], m[1, 2]
    m20, m21, m22 = m[2, 0], m[2, 1], m[2, 2]
    for row in prange(ho):
        for col in range(wo):
            dx = dirs[row, col, 0]
            dy = dirs[row, col, 1]
            dz = dirs[row, col, 2]
            x = m00 * dx + m01 * dy + m02 * dz
            y = m10 * dx + m11 * dy + m12 * dz
            z = m20 * dx + m21 * dy + m22 * dz
            lon = math.atan2(y, x)
            if z > 1.0:
                z = 1.0
            elif z < -1.0:
                z = -1.0
            lat = math.asin(z)
            uf = (lon + math.pi) * wi / (2.0 * math.pi) - 0.5
            vf = (0.5 - lat / math.pi) * hi - 0.5
            u0 = int(math.floor(uf))
            v0 = int(math.floor(vf))
            fu = uf - u0
            fv = vf - v0
            c0 = u0 % wi
            c1 = (u0 + 1) % wi
            r0 = v0
            if r0 < 0:
                r0 = 0
            elif r0 > hi - 1:
                r0 = hi - 1
            r1 = v0 + 1
            if r1 < 0:
                r1 = 0
            elif r1 > hi - 1:
                r1 = hi - 1
            w00 = (1.0 - fu) * (1.0 - fv)
            w10 = fu * (1.0 - fv)
            w01 = (1.0 - fu) * fv
            w11 = fu * fv
            for ch in range(3):
                val = (
                    w00 * img[r0, c0, ch]
                    + w10 * img[r0, c1, ch]
                    + w01 * img[r1, c0, ch]
                    + w11 * img[r1, c1, ch]
                )
                out[row, col, ch] = np.uint8(val + 0.5)


warp_equirect_parallel = njit(parallel=True, nogil=True, cache=True)(_warp_equirect)
warp_equirect_serial = njit(parallel=False, nogil=True, cache=True)(_warp_equirect)
warp_directions_parallel = njit(parallel=True, nogil=True, cache=True)(_warp_directions)
warp_directions_serial = njit(parallel=False, nogil=True, cache=True)(_warp_directions)

MAX_THREADS = numba.config.NUMBA_NUM_THREADS


def resolve_threads(threads: int | None) -> int:
    """Clamp a requested worker count to what the runtime supports."""
    if threads is None:
        return MAX_THREADS
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return min(threads, MAX_THREADS)


def run_equirect_warp(img, coslon, sinlon, coslat, sinlat, m, out, threads):
    if threads == 1:
        warp_equirect_serial(img, coslon, sinlon, coslat, sinlat, m, out)
    else:
        numba.set_num_threads(threads)
        warp_equirect_parallel(img, coslon, sinlon, coslat, sinlat, m, out)


def run_directions_warp(img, dirs, m, out, threads):
    if threads == 1:
        warp_directions_serial(img, dirs, m, out)
    else:
        numba.set_num_threads(threads)
        warp_directions_parallel(img, dirs, m, out)
