// Canvas rendering: spectrogram heatmap, physical axis labels, trace
// overlays (dashed where unvoiced), and the pending constraint rectangle.

import { Tile, TrackResult } from "./api.js";
import { AxisInfo, CanvasSize, Region, dataToScreen, freqOfBin, timeOfFrame } from "./coords.js";

export const TRACE_COLORS = ["#2f9e44", "#1971c2", "#e8590c", "#9c36b5"];

export function axisFromTile(tile: Tile): AxisInfo {
  return {
    f0: tile.f0,
    df: tile.df,
    t0: tile.t0,
    dt: tile.dt,
    nBins: tile.values.length,
    nFrames: tile.values[0]?.length ?? 0,
  };
}

function heatColor(v: number): [number, number, number] {
  // dark blue -> cyan -> yellow ramp
  const r = Math.round(255 * Math.min(1, Math.max(0, 2 * v - 1)));
  const g = Math.round(255 * Math.min(1, Math.max(0, 1.6 * v)));
  const b = Math.round(90 + 120 * (1 - v));
  return [r, g, b];
}

export function renderHeatmap(ctx: CanvasRenderingContext2D, tile: Tile,
                              size: CanvasSize): void {
  const nBins = tile.values.length;
  const nFrames = tile.values[0]?.length ?? 0;
  if (!nBins || !nFrames) return;
  let max = 0;
  for (const row of tile.values) {
    for (const v of row) max = Math.max(max, v);
  }
  const image = ctx.createImageData(nFrames, nBins);
  for (let b = 0; b < nBins; b++) {
    const row = tile.values[b];
    const y = nBins - 1 - b; // bin 0 at the bottom
    for (let f = 0; f < nFrames; f++) {
      const v = max > 0 ? row[f] / max : 0;
      const [r, g, bl] = heatColor(v);
      const o = 4 * (y * nFrames + f);
      image.data[o] = r;
      image.data[o + 1] = g;
      image.data[o + 2] = bl;
      image.data[o + 3] = 255;
    }
  }
  const off = new OffscreenCanvas(nFrames, nBins);
  const offCtx = off.getContext("2d")!;
  offCtx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, size.width, size.height);
  ctx.drawImage(off, 0, 0, size.width, size.height);
}

export function renderAxes(ctx: CanvasRenderingContext2D, axis: AxisInfo,
                           size: CanvasSize): void {
  ctx.save();
  ctx.fillStyle = "rgba(255,255,255,0.9)";
  ctx.font = "11px sans-serif";
  const ticks = 5;
  for (let i = 0; i <= ticks; i++) {
    const bin = Math.round(((axis.nBins - 1) * i) / ticks);
    const p = dataToScreen({ frame: 0, bin }, axis, size);
    ctx.fillText(freqOfBin(bin, axis).toFixed(2), 4, p.y - 2);
    const frame = Math.round(((axis.nFrames - 1) * i) / ticks);
    const q = dataToScreen({ frame, bin: 0 }, axis, size);
    ctx.fillText(timeOfFrame(frame, axis).toFixed(1) + "s",
                 Math.min(q.x, size.width - 40), size.height - 4);
  }
  ctx.restore();
}

export function renderTraces(ctx: CanvasRenderingContext2D, result: TrackResult,
                             axis: AxisInfo, size: CanvasSize,
                             binScale = 1, binOffset = 0): void {
  result.traces.forEach((trace, layer) => {
    const mask = result.masks[layer] ?? trace.map(() => 1);
    ctx.save();
    ctx.strokeStyle = TRACE_COLORS[layer % TRACE_COLORS.length];
    ctx.lineWidth = 2;
    let segment: { voiced: boolean } | null = null;
    ctx.beginPath();
    for (let n = 0; n < trace.length; n++) {
      const voiced = mask[n] !== 0;
      const tileBin = (trace[n] - binOffset) / binScale;
      const tileFrame = n / (result.traces[0].length / axis.nFrames);
      const p = dataToScreen({ frame: tileFrame, bin: tileBin }, axis, size);
      if (segment === null || segment.voiced !== voiced) {
        if (segment !== null) ctx.stroke();
        ctx.beginPath();
        ctx.setLineDash(voiced ? [] : [4, 4]); // dashed = unvoiced
        ctx.moveTo(p.x, p.y);
        segment = { voiced };
      } else {
        ctx.lineTo(p.x, p.y);
      }
    }
    ctx.stroke();
    ctx.restore();
  });
}

export function renderRegion(ctx: CanvasRenderingContext2D, region: Region,
                             axis: AxisInfo, size: CanvasSize): void {
  const a = dataToScreen({ frame: region.frames[0] - 0.5, bin: region.bins[1] + 0.5 },
                         axis, size);
  const b = dataToScreen({ frame: region.frames[1] + 0.5, bin: region.bins[0] - 0.5 },
                         axis, size);
  ctx.save();
  ctx.fillStyle = "rgba(255,255,255,0.25)";
  ctx.strokeStyle = "rgba(255,255,255,0.8)";
  ctx.fillRect(a.x, a.y, b.x - a.x, b.y - a.y);
  ctx.strokeRect(a.x, a.y, b.x - a.x, b.y - a.y);
  ctx.restore();
}
