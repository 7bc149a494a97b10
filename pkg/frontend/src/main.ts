/**
 * Browser wiring: loads the dataset named by the `?dataset=` query
 * parameter, renders the current viewport to a canvas, and maps input
 * (drag to look, space to play, arrows to step, wheel to zoom) onto the
 * session. Rendering is CPU-side per pixel — resolution is kept modest so
 * scrubbing stays interactive.
 */

import { Frame, renderViewport, ViewportSpec } from "./projection.js";
import {
  ViewerSession,
  handleDrag,
  loadDataset,
  scrub,
  tick,
  toggleMode,
} from "./session.js";

const VIEW: ViewportSpec = { width: 640, height: 360, hfov: Math.PI / 2 };
const PREFETCH = 8;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const status = document.getElementById("status")!;
const modeButton = document.getElementById("mode") as HTMLButtonElement;
const playButton = document.getElementById("play") as HTMLButtonElement;
const slider = document.getElementById("scrub") as HTMLInputElement;

canvas.width = VIEW.width;
canvas.height = VIEW.height;

const frameCache = new Map<number, Frame>();
let session: ViewerSession | null = null;
let lastTick = 0;

function note(text: string): void {
  status.textContent = text;
}

async function fetchFrame(s: ViewerSession, k: number): Promise<Frame> {
  const cached = frameCache.get(k);
  if (cached) {
    return cached;
  }
  const resp = await fetch(s.frameUrl(k));
  if (!resp.ok) {
    throw new Error(`frame ${k}: HTTP ${resp.status}`);
  }
  const bitmap = await createImageBitmap(await resp.blob());
  const off = document.createElement("canvas");
  off.width = bitmap.width;
  off.height = bitmap.height;
  const offCtx = off.getContext("2d")!;
  offCtx.drawImage(bitmap, 0, 0);
  const img = offCtx.getImageData(0, 0, bitmap.width, bitmap.height);
  const frame: Frame = { width: img.width, height: img.height, data: img.data };
  frameCache.set(k, frame);
  return frame;
}

function prefetch(s: ViewerSession): void {
  for (let k = s.frameIndex + 1; k <= s.frameIndex + PREFETCH; k++) {
    if (k < s.frameCount && !frameCache.has(k)) {
      fetchFrame(s, k).catch(() => undefined); // retried on display
    }
  }
}

function draw(s: ViewerSession, frame: Frame): void {
  const rgba = renderViewport(
    frame,
    s.headQuat(),
    VIEW,
    s.mode,
    s.cameraQuat(),
  );
  ctx.putImageData(new ImageData(rgba, VIEW.width, VIEW.height), 0, 0);
  slider.value = String(s.frameIndex);
  modeButton.textContent = `mode: ${s.mode}`;
  playButton.textContent = s.playing ? "pause" : "play";
  note(
    `frame ${s.frameIndex + 1}/${s.frameCount}  t=${s.frameTime(s.frameIndex).toFixed(2)}s` +
      (s.urAvailable ? "" : "  (no orientation trace: UR unavailable)"),
  );
}

async function renderLoop(timestamp: number): Promise<void> {
  const s = session;
  if (s) {
    if (s.playing && timestamp - lastTick >= 1000 / s.manifest.fps) {
      tick(s);
      lastTick = timestamp;
    }
    try {
      draw(s, await fetchFrame(s, s.frameIndex));
      prefetch(s);
    } catch (err) {
      note(String(err)); // skip frames that have not arrived yet
    }
  }
  requestAnimationFrame(renderLoop);
}

function wireInput(): void {
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (dragging && session) {
      handleDrag(session, ev.clientX - lastX, ev.clientY - lastY);
      lastX = ev.clientX;
      lastY = ev.clientY;
    }
  });
  canvas.addEventListener("pointerup", () => (dragging = false));
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    VIEW.hfov = Math.min(
      (Math.PI * 2) / 3,
      Math.max(Math.PI / 6, VIEW.hfov * (ev.deltaY > 0 ? 1.05 : 1 / 1.05)),
    );
  });
  window.addEventListener("keydown", (ev) => {
    if (!session) {
      return;
    }
    const step = 0.05;
    if (ev.key === "ArrowLeft") session.yaw += step;
    else if (ev.key === "ArrowRight") session.yaw -= step;
    else if (ev.key === "ArrowUp") handleDrag(session, 0, step / 0.005);
    else if (ev.key === "ArrowDown") handleDrag(session, 0, -step / 0.005);
    else if (ev.key === " ") {
      ev.preventDefault();
      session.playing = !session.playing;
    }
  });
  modeButton.addEventListener("click", () => {
    if (session && !toggleMode(session)) {
      note("this dataset has no orientation trace; run the filter stage first");
    }
  });
  playButton.addEventListener("click", () => {
    if (session) {
      session.playing = !session.playing;
    }
  });
  slider.addEventListener("input", () => {
    if (session) {
      session.playing = false;
      scrub(session, Number(slider.value));
    }
  });
}

async function start(): Promise<void> {
  const url = new URLSearchParams(window.location.search).get("dataset");
  if (!url) {
    note("append ?dataset=http://127.0.0.1:8000 (an `unwind360 serve` URL)");
    return;
  }
  note(`loading ${url} ...`);
  try {
    session = await loadDataset(url);
  } catch (err) {
    note(`failed to load dataset: ${err}`);
    return;
  }
  slider.max = String(session.frameCount - 1);
  modeButton.disabled = !session.urAvailable;
  note("loaded; drag to look around");
}

wireInput();
start();
requestAnimationFrame(renderLoop);
