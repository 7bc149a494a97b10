/**
 * Quaternion and small-vector math mirroring the Python renderer:
 * scalar-first Hamilton products, active rotations, right-handed Z-up
 * world. Agreement with the server-side renderer depends on these
 * formulas matching, so keep them boring.
 */

export interface Quat {
  w: number;
  x: number;
  y: number;
  z: number;
}

export type Vec3 = [number, number, number];

/** Row-major 3x3 matrix as a flat length-9 array. */
export type Mat3 = Float64Array;

export const IDENTITY: Quat = { w: 1, x: 0, y: 0, z: 0 };

export function normalize(q: Quat): Quat {
  const n = Math.hypot(q.w, q.x, q.y, q.z);
  if (n < 1e-12) {
    throw new Error("cannot normalize a zero quaternion");
  }
  return { w: q.w / n, x: q.x / n, y: q.y / n, z: q.z / n };
}

export function multiply(a: Quat, b: Quat): Quat {
  return {
    w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
    x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
    y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
    z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

/** Inverse of a unit quaternion (its conjugate). */
export function inverse(q: Quat): Quat {
  return { w: q.w, x: -q.x, y: -q.y, z: -q.z };
}

export function fromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  if (n < 1e-12) {
    throw new Error("rotation axis must be non-zero");
  }
  const half = 0.5 * angle;
  const s = Math.sin(half) / n;
  return { w: Math.cos(half), x: axis[0] * s, y: axis[1] * s, z: axis[2] * s };
}

/** Rotation about world +Z. */
export function yawQuat(angle: number): Quat {
  const half = 0.5 * angle;
  return { w: Math.cos(half), x: 0, y: 0, z: Math.sin(half) };
}

/**
 * Head orientation from mouse-look angles: yaw about +Z, then pitch about
 * the viewer's left axis (+Y) so positive pitch looks up. Forward is +X.
 */
export function lookQuat(yaw: number, pitch: number): Quat {
  return multiply(yawQuat(yaw), fromAxisAngle([0, 1, 0], -pitch));
}

export function rotationMatrix(q: Quat): Mat3 {
  const { w, x, y, z } = q;
  return Float64Array.of(
    1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
    2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
    2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
  );
}

/** m^T a, i.e. multiply by the transpose without forming it. */
export function matTVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
    m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
    m[2] * v[0] + m[5] * v[1] + m[8] * v[2],
  ];
}

export function matVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

/** a^T b for row-major 3x3 matrices. */
export function matTMat(a: Mat3, b: Mat3): Mat3 {
  const out = new Float64Array(9);
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[3 * i + j] =
        a[i] * b[j] + a[3 + i] * b[3 + j] + a[6 + i] * b[6 + j];
    }
  }
  return out;
}

export function rotateVector(q: Quat, v: Vec3): Vec3 {
  return matVec(rotationMatrix(q), v);
}

/** Shortest-path spherical interpolation from `a` (t=0) to `b` (t=1). */
export function slerp(a: Quat, b: Quat, t: number): Quat {
  let { w: bw, x: bx, y: by, z: bz } = b;
  let d = a.w * bw + a.x * bx + a.y * by + a.z * bz;
  if (d < 0) {
    bw = -bw; bx = -bx; by = -by; bz = -bz;
    d = -d;
  }
  if (d > 1 - 1e-9) {
    // nearly aligned: nlerp avoids a 0/0 in the sine ratio
    return normalize({
      w: a.w + t * (bw - a.w),
      x: a.x + t * (bx - a.x),
      y: a.y + t * (by - a.y),
      z: a.z + t * (bz - a.z),
    });
  }
  const theta = Math.acos(d);
  const sinTheta = Math.sin(theta);
  const ka = Math.sin((1 - t) * theta) / sinTheta;
  const kb = Math.sin(t * theta) / sinTheta;
  return {
    w: ka * a.w + kb * bw,
    x: ka * a.x + kb * bx,
    y: ka * a.y + kb * by,
    z: ka * a.z + kb * bz,
  };
}

/** Angle in radians between two orientations, sign-invariant. */
export function geodesic(a: Quat, b: Quat): number {
  const d = Math.abs(a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z);
  return 2 * Math.acos(Math.min(1, d));
}
