/**
 * Viewer session state and dataset access. A session points at a served
 * dataset directory (manifest + PNG frames + optional orientation trace)
 * and carries everything the render loop needs: current frame, look
 * angles, CR/UR mode, and playback state.
 */

import { IDENTITY, Quat, lookQuat, slerp } from "./math.js";
import { Mode } from "./projection.js";

export interface Manifest {
  width: number;
  height: number;
  fps: number;
  t0: number;
  frames: string[];
  imu: string | null;
  orientations: string | null;
  ground_truth: string | null;
  convention: string;
}

export interface TraceEntry {
  t: number;
  q: Quat;
}

/** Pitch stops just short of the poles so the view never flips over. */
export const PITCH_LIMIT = Math.PI / 2 - 1e-3;

/** Radians of look rotation per dragged pixel. */
export const DRAG_SENSITIVITY = 0.005;

export class ViewerSession {
  frameIndex = 0;
  playing = false;
  yaw = 0;
  pitch = 0;
  mode: Mode = "CR";
  fov = Math.PI / 2;

  constructor(
    readonly baseUrl: string,
    readonly manifest: Manifest,
    readonly trace: TraceEntry[] | null,
  ) {}

  get urAvailable(): boolean {
    return this.trace !== null;
  }

  get frameCount(): number {
    return this.manifest.frames.length;
  }

  frameTime(k: number): number {
    return this.manifest.t0 + k / this.manifest.fps;
  }

  frameUrl(k: number): string {
    return `${this.baseUrl}/${this.manifest.frames[k]}`;
  }

  headQuat(): Quat {
    return lookQuat(this.yaw, this.pitch);
  }

  /** Camera orientation to cancel for the current frame (UR mode). */
  cameraQuat(): Quat {
    if (this.mode !== "UR" || this.trace === null) {
      return IDENTITY;
    }
    return orientationAt(this.trace, this.frameTime(this.frameIndex));
  }
}

function parseManifest(doc: unknown): Manifest {
  const m = doc as Record<string, unknown>;
  if (typeof m !== "object" || m === null || !Array.isArray(m.frames)) {
    throw new Error("manifest is not an object with a frames list");
  }
  const width = Number(m.width);
  const height = Number(m.height);
  const fps = Number(m.fps);
  if (!Number.isFinite(width) || !Number.isFinite(height) || width !== 2 * height) {
    throw new Error(`manifest frames must be 2:1, got ${m.width}x${m.height}`);
  }
  if (!(fps > 0) || m.frames.length === 0) {
    throw new Error("manifest needs fps > 0 and at least one frame");
  }
  return {
    width,
    height,
    fps,
    t0: Number(m.t0 ?? 0),
    frames: m.frames.map(String),
    imu: (m.imu as string | null) ?? null,
    orientations: (m.orientations as string | null) ?? null,
    ground_truth: (m.ground_truth as string | null) ?? null,
    convention: String(m.convention ?? ""),
  };
}

export function parseTrace(text: string): TraceEntry[] {
  const entries: TraceEntry[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") {
      continue;
    }
    let obj: Record<string, number>;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`trace line ${i + 1}: not JSON`);
    }
    const { t, w, x, y, z } = obj;
    if (![t, w, x, y, z].every(Number.isFinite)) {
      throw new Error(`trace line ${i + 1}: missing t/w/x/y/z`);
    }
    const n = Math.hypot(w, x, y, z);
    if (Math.abs(n - 1) > 1e-6) {
      throw new Error(`trace line ${i + 1}: quaternion norm ${n} is not unit`);
    }
    if (entries.length > 0 && t <= entries[entries.length - 1].t) {
      throw new Error(`trace line ${i + 1}: timestamps must increase`);
    }
    entries.push({ t, q: { w, x, y, z } });
  }
  if (entries.length === 0) {
    throw new Error("orientation trace is empty");
  }
  return entries;
}

function nominalPeriod(trace: TraceEntry[]): number {
  if (trace.length < 2) {
    return Infinity;
  }
  const dts = trace.slice(1).map((e, i) => e.t - trace[i].t).sort((a, b) => a - b);
  return dts[Math.floor(dts.length / 2)];
}

/**
 * Orientation at time t: slerp between bracketing entries, clamped to the
 * endpoints when t lies within one nominal sample period outside the
 * covered range (frame timestamps can overhang the trace by half a tick).
 */
export function orientationAt(trace: TraceEntry[], t: number): Quat {
  if (trace.length === 1) {
    return trace[0].q;
  }
  const margin = nominalPeriod(trace);
  const first = trace[0].t;
  const last = trace[trace.length - 1].t;
  if (t < first - margin || t > last + margin) {
    throw new Error(`t=${t} outside orientation trace [${first}, ${last}]`);
  }
  let lo = 0;
  let hi = trace.length; // bisect for the first entry with time >= t
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (trace[mid].t < t) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < trace.length && trace[lo].t === t) {
    return trace[lo].q;
  }
  if (lo === 0) {
    return trace[0].q;
  }
  if (lo === trace.length) {
    return trace[trace.length - 1].q;
  }
  const a = trace[lo - 1];
  const b = trace[lo];
  return slerp(a.q, b.q, (t - a.t) / (b.t - a.t));
}

/** Fetch and validate a served dataset; resolves to a session at frame 0. */
export async function loadDataset(
  url: string,
  fetchFn: typeof fetch = fetch,
): Promise<ViewerSession> {
  const base = url.replace(/\/+$/, "");
  const resp = await fetchFn(`${base}/manifest.json`);
  if (!resp.ok) {
    throw new Error(`manifest fetch failed: HTTP ${resp.status}`);
  }
  const manifest = parseManifest(await resp.json());
  let trace: TraceEntry[] | null = null;
  if (manifest.orientations !== null) {
    const tResp = await fetchFn(`${base}/${manifest.orientations}`);
    if (!tResp.ok) {
      throw new Error(`orientation fetch failed: HTTP ${tResp.status}`);
    }
    trace = parseTrace(await tResp.text());
  }
  return new ViewerSession(base, manifest, trace);
}

/** Mouse-look: dragging right reduces yaw; pitch clamps short of the poles. */
export function handleDrag(session: ViewerSession, dxPx: number, dyPx: number): void {
  session.yaw -= dxPx * DRAG_SENSITIVITY;
  session.pitch = Math.min(
    PITCH_LIMIT,
    Math.max(-PITCH_LIMIT, session.pitch + dyPx * DRAG_SENSITIVITY),
  );
}

/** Switch CR<->UR when a trace is present; report whether the mode changed. */
export function toggleMode(session: ViewerSession): boolean {
  if (!session.urAvailable) {
    return false;
  }
  session.mode = session.mode === "CR" ? "UR" : "CR";
  return true;
}

/** Seek to frame k (clamped); landing on the last frame stops playback. */
export function scrub(session: ViewerSession, k: number): void {
  const last = session.frameCount - 1;
  session.frameIndex = Math.min(Math.max(Math.round(k), 0), last);
  if (session.frameIndex === last) {
    session.playing = false;
  }
}

/** Advance one frame during playback; stops at the end of the dataset. */
export function tick(session: ViewerSession): void {
  if (!session.playing) {
    return;
  }
  scrub(session, session.frameIndex + 1);
}
