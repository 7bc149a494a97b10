/**
 * CPU equirectangular sampling — the client-side twin of the server
 * renderer. Pixel centers sit at half-integer offsets: longitude
 * lambda = 2*pi*(u+0.5)/W - pi (so +X is the image center), latitude
 * phi = pi/2 - pi*(v+0.5)/H (north pole above row 0). Bilinear taps wrap
 * horizontally and clamp vertically, and results round as uint8(v + 0.5).
 */

import {
  IDENTITY,
  Mat3,
  Quat,
  Vec3,
  matTMat,
  matVec,
  rotationMatrix,
} from "./math.js";

/** Decoded RGBA image (browser ImageData or pngjs output). */
export interface Frame {
  width: number;
  height: number;
  data: Uint8Array | Uint8ClampedArray;
}

export type Mode = "CR" | "UR";

export interface ViewportSpec {
  width: number;
  height: number;
  /** Horizontal field of view in radians; must be < pi for a pinhole. */
  hfov: number;
}

export function pixelToDirection(
  u: number,
  v: number,
  width: number,
  height: number,
): Vec3 {
  const lon = (2 * Math.PI * (u + 0.5)) / width - Math.PI;
  const lat = Math.PI / 2 - (Math.PI * (v + 0.5)) / height;
  const c = Math.cos(lat);
  return [c * Math.cos(lon), c * Math.sin(lon), Math.sin(lat)];
}

export function directionToPixel(
  d: Vec3,
  width: number,
  height: number,
): [number, number] {
  const lon = Math.atan2(d[1], d[0]);
  const n = Math.hypot(d[0], d[1], d[2]);
  if (n < 1e-12) {
    throw new Error("zero direction has no pixel");
  }
  const lat = Math.asin(Math.max(-1, Math.min(1, d[2] / n)));
  let u = ((lon + Math.PI) * width) / (2 * Math.PI) - 0.5;
  const v = (0.5 - lat / Math.PI) * height - 0.5;
  if (u >= width - 0.5) {
    u -= width;
  }
  return [u, v];
}

/** Unquantized bilinear RGB sample; u wraps, v clamps. */
export function sampleBilinear(
  frame: Frame,
  u: number,
  v: number,
): [number, number, number] {
  const { width: w, height: h, data } = frame;
  const u0 = Math.floor(u);
  const v0 = Math.floor(v);
  const fu = u - u0;
  const fv = v - v0;
  const c0 = ((u0 % w) + w) % w;
  const c1 = (((u0 + 1) % w) + w) % w;
  const r0 = Math.min(Math.max(v0, 0), h - 1);
  const r1 = Math.min(Math.max(v0 + 1, 0), h - 1);
  const w00 = (1 - fu) * (1 - fv);
  const w10 = fu * (1 - fv);
  const w01 = (1 - fu) * fv;
  const w11 = fu * fv;
  const i00 = (r0 * w + c0) * 4;
  const i10 = (r0 * w + c1) * 4;
  const i01 = (r1 * w + c0) * 4;
  const i11 = (r1 * w + c1) * 4;
  return [
    w00 * data[i00] + w10 * data[i10] + w01 * data[i01] + w11 * data[i11],
    w00 * data[i00 + 1] + w10 * data[i10 + 1] + w01 * data[i01 + 1] + w11 * data[i11 + 1],
    w00 * data[i00 + 2] + w10 * data[i10 + 2] + w01 * data[i01 + 2] + w11 * data[i11 + 2],
  ];
}

/** Canonical (pre-rotation) view ray of viewport pixel (i, j): forward +X,
 * +Y to screen-left, +Z up, principal point at the pixel-grid center. */
export function viewportRay(i: number, j: number, spec: ViewportSpec): Vec3 {
  const f = spec.width / 2 / Math.tan(spec.hfov / 2);
  const cx = (spec.width - 1) / 2;
  const cy = (spec.height - 1) / 2;
  const x = f;
  const y = cx - i;
  const z = cy - j;
  const n = Math.hypot(x, y, z);
  return [x / n, y / n, z / n];
}

/** World-from-view rotation for a head pose in the given mode. In UR the
 * camera's estimated rotation is cancelled by its inverse. */
export function viewMatrix(qHead: Quat, mode: Mode, qCam: Quat = IDENTITY): Mat3 {
  const head = rotationMatrix(qHead);
  if (mode === "CR") {
    return head;
  }
  return matTMat(rotationMatrix(qCam), head);
}

/**
 * Render a pinhole viewport from an equirect frame into an RGBA buffer
 * (alpha forced opaque). Same per-pixel math as the server renderer so
 * the two agree to within resampling error.
 */
export function renderViewport(
  frame: Frame,
  qHead: Quat,
  spec: ViewportSpec,
  mode: Mode = "CR",
  qCam: Quat = IDENTITY,
  out?: Uint8ClampedArray<ArrayBuffer>,
): Uint8ClampedArray<ArrayBuffer> {
  if (frame.width !== 2 * frame.height) {
    throw new Error(`frame must be 2:1 equirect, got ${frame.width}x${frame.height}`);
  }
  const buf = out ?? new Uint8ClampedArray(spec.width * spec.height * 4);
  const m = viewMatrix(qHead, mode, qCam);
  let o = 0;
  for (let j = 0; j < spec.height; j++) {
    for (let i = 0; i < spec.width; i++) {
      const ray = viewportRay(i, j, spec);
      const d = matVec(m, ray);
      const [u, v] = directionToPixel(d, frame.width, frame.height);
      const rgb = sampleBilinear(frame, u, v);
      buf[o] = Math.min(255, Math.floor(rgb[0] + 0.5));
      buf[o + 1] = Math.min(255, Math.floor(rgb[1] + 0.5));
      buf[o + 2] = Math.min(255, Math.floor(rgb[2] + 0.5));
      buf[o + 3] = 255;
      o += 4;
    }
  }
  return buf;
}
