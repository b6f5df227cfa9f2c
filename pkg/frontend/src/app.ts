// Application wiring: upload, heatmap, constraint drawing, run/poll,
// before/after comparison. Overlays update only from confirmed service
// responses.

import { ApiClient, ConstraintBody, ServiceError, Tile, TrackResult } from "./api.js";
import { ConstraintDrawer } from "./constraints.js";
import { AxisInfo, CanvasSize, Region } from "./coords.js";
import {
  axisFromTile,
  renderAxes,
  renderHeatmap,
  renderRegion,
  renderTraces,
  TRACE_COLORS,
} from "./heatmap.js";
import { formatDeltas, traceDeltas } from "./diff.js";

const api = new ApiClient("");

interface AppState {
  jobId: string | null;
  tile: Tile | null;
  axis: AxisInfo | null;
  result: TrackResult | null;
  previous: TrackResult | null;
  pending: ConstraintBody[];
  preview: Region | null;
  running: boolean;
}

const state: AppState = {
  jobId: null,
  tile: null,
  axis: null,
  result: null,
  previous: null,
  pending: [],
  preview: null,
  running: false,
};

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function setStatus(text: string, isError = false): void {
  const node = el<HTMLSpanElement>("status");
  node.textContent = text;
  node.className = isError ? "status error" : "status";
}

function canvasSize(canvas: HTMLCanvasElement): CanvasSize {
  return { width: canvas.width, height: canvas.height };
}

// Traces and constraints live on the full-resolution grid; the tile may
// be max-pooled, so conversions go through the pooling block sizes.
function binBlock(tile: Tile): number {
  return Math.max(1, Math.round(tile.values.length
    ? tile.full_bins / tile.values.length : 1));
}

function frameBlock(tile: Tile): number {
  const frames = tile.values[0]?.length ?? 1;
  return Math.max(1, Math.round(tile.full_frames / frames));
}

function tileRegionToFull(region: Region, tile: Tile): ConstraintBody {
  const bb = binBlock(tile);
  const fb = frameBlock(tile);
  const iteration = Number(el<HTMLSelectElement>("iteration").value) || 1;
  return {
    frames: [
      Math.max(0, Math.floor(region.frames[0] * fb)),
      Math.min(tile.full_frames - 1, Math.ceil((region.frames[1] + 1) * fb - 1)),
    ],
    bins: [
      Math.max(0, Math.floor(region.bins[0] * bb)),
      Math.min(tile.full_bins - 1, Math.ceil((region.bins[1] + 1) * bb - 1)),
    ],
    iteration,
  };
}

function fullRegionToTile(body: ConstraintBody, tile: Tile): Region {
  const bb = binBlock(tile);
  const fb = frameBlock(tile);
  return {
    frames: [Math.floor(body.frames[0] / fb), Math.floor(body.frames[1] / fb)],
    bins: [Math.floor(body.bins[0] / bb), Math.floor(body.bins[1] / bb)],
  };
}

function redraw(): void {
  const canvas = el<HTMLCanvasElement>("heatmap");
  const ctx = canvas.getContext("2d")!;
  const size = canvasSize(canvas);
  ctx.clearRect(0, 0, size.width, size.height);
  if (!state.tile || !state.axis) return;
  renderHeatmap(ctx, state.tile, size);
  renderAxes(ctx, state.axis, size);
  if (state.result) {
    const scale = binBlock(state.tile);
    const offset = (state.tile.f0 - state.result.freq_axis.f0)
      / state.result.freq_axis.df;
    renderTraces(ctx, state.result, state.axis, size, scale, offset);
  }
  for (const body of state.pending) {
    renderRegion(ctx, fullRegionToTile(body, state.tile), state.axis, size);
  }
  if (state.preview) {
    renderRegion(ctx, state.preview, state.axis, size);
  }
}

function updateLegend(): void {
  const legend = el<HTMLDivElement>("legend");
  legend.innerHTML = "";
  if (!state.result) return;
  state.result.traces.forEach((_, i) => {
    const item = document.createElement("span");
    item.className = "legend-item";
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = TRACE_COLORS[i % TRACE_COLORS.length];
    item.appendChild(swatch);
    const rer = state.result!.mean_rer[i];
    item.appendChild(document.createTextNode(
      ` trace ${i + 1} (mean RER ${rer.toFixed(2)})`));
    legend.appendChild(item);
  });
}

function updateConstraintList(): void {
  const list = el<HTMLUListElement>("constraint-list");
  list.innerHTML = "";
  state.pending.forEach((body, index) => {
    const item = document.createElement("li");
    item.textContent = `iter ${body.iteration ?? 1}: frames ${body.frames[0]}-` +
      `${body.frames[1]}, bins ${body.bins[0]}-${body.bins[1]} `;
    const remove = document.createElement("button");
    remove.textContent = "remove";
    remove.onclick = () => {
      state.pending.splice(index, 1);
      updateConstraintList();
      redraw();
    };
    item.appendChild(remove);
    list.appendChild(item);
  });
}

async function loadJob(jobId: string): Promise<void> {
  state.jobId = jobId;
  state.tile = await api.spectrogram(jobId, 900, 450);
  state.axis = axisFromTile(state.tile);
  state.result = null;
  state.previous = null;
  state.pending = [];
  setStatus(`job ${jobId.slice(0, 8)}: spectrogram loaded `
    + `(${state.tile.full_bins} bins x ${state.tile.full_frames} frames)`);
  updateConstraintList();
  updateLegend();
  redraw();
}

async function onUpload(): Promise<void> {
  const input = el<HTMLInputElement>("file");
  const file = input.files?.[0];
  if (!file) {
    setStatus("choose a file first", true);
    return;
  }
  const config = el<HTMLTextAreaElement>("config").value.trim();
  try {
    setStatus("uploading...");
    const jobId = await api.createJob(file, file.name, config || undefined);
    await loadJob(jobId);
  } catch (err) {
    setStatus(`upload failed: ${(err as Error).message}`, true);
  }
}

async function onRun(): Promise<void> {
  if (!state.jobId || state.running) return;
  const nTraces = Number(el<HTMLInputElement>("ntraces").value) || 1;
  state.running = true;
  el<HTMLButtonElement>("run").disabled = true;
  try {
    setStatus(state.pending.length
      ? `re-estimating with ${state.pending.length} constraint(s)...`
      : "tracking...");
    await api.startTracking(state.jobId, nTraces, state.pending);
    const result = await api.pollResult(state.jobId, 1000);
    state.previous = state.result;
    state.result = result;
    const delta = state.previous
      ? ` — ${formatDeltas(traceDeltas(state.previous, result))}`
      : "";
    setStatus(`done: ${result.traces.length} trace(s)${delta}`);
    updateLegend();
    redraw();
  } catch (err) {
    if (err instanceof ServiceError && err.status === 422) {
      setStatus(`constraint unsatisfiable: ${err.message}`, true);
    } else {
      setStatus(`run failed: ${(err as Error).message}`, true);
    }
  } finally {
    state.running = false;
    el<HTMLButtonElement>("run").disabled = false;
  }
}

function wireCanvas(): void {
  const canvas = el<HTMLCanvasElement>("heatmap");
  const drawer = new ConstraintDrawer();
  const point = (event: MouseEvent) => {
    const rect = canvas.getBoundingClientRect();
    return {
      x: ((event.clientX - rect.left) / rect.width) * canvas.width,
      y: ((event.clientY - rect.top) / rect.height) * canvas.height,
    };
  };
  canvas.addEventListener("mousedown", (event) => {
    if (!state.axis) return;
    drawer.begin(point(event));
  });
  canvas.addEventListener("mousemove", (event) => {
    if (!state.axis || !drawer.active) return;
    state.preview = drawer.preview(point(event), state.axis, canvasSize(canvas));
    redraw();
  });
  canvas.addEventListener("mouseup", (event) => {
    if (!state.axis || !state.tile) return;
    const { region, rejected } = drawer.finish(point(event), state.axis,
                                               canvasSize(canvas));
    state.preview = null;
    if (rejected) {
      setStatus("drag a rectangle to add a constraint (clicks are ignored)");
    } else if (region) {
      state.pending.push(tileRegionToFull(region, state.tile));
      updateConstraintList();
    }
    redraw();
  });
  canvas.addEventListener("mouseleave", () => {
    drawer.cancel();
    state.preview = null;
    redraw();
  });
}

export function start(): void {
  el<HTMLButtonElement>("upload").onclick = () => void onUpload();
  el<HTMLButtonElement>("run").onclick = () => void onRun();
  wireCanvas();
  setStatus("upload a WAV / CSV recording or a spectrogram CSV to begin");
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", start);
}
