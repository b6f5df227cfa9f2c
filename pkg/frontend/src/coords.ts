// Coordinate mapping between spectrogram data (bin/frame with physical
// axes) and canvas pixels. The heatmap is drawn with frame 0 at the left
// and bin 0 at the bottom.

export interface AxisInfo {
  f0: number;
  df: number;
  t0: number;
  dt: number;
  nBins: number;
  nFrames: number;
}

export interface CanvasSize {
  width: number;
  height: number;
}

export interface DataPoint {
  frame: number; // fractional frame index
  bin: number;   // fractional bin index
}

export interface ScreenPoint {
  x: number;
  y: number;
}

export interface Region {
  frames: [number, number];
  bins: [number, number];
}

export function dataToScreen(p: DataPoint, axis: AxisInfo, size: CanvasSize): ScreenPoint {
  const x = ((p.frame + 0.5) / axis.nFrames) * size.width;
  const y = size.height - ((p.bin + 0.5) / axis.nBins) * size.height;
  return { x, y };
}

export function screenToData(p: ScreenPoint, axis: AxisInfo, size: CanvasSize): DataPoint {
  const frame = (p.x / size.width) * axis.nFrames - 0.5;
  const bin = ((size.height - p.y) / size.height) * axis.nBins - 0.5;
  return { frame, bin };
}

export function freqOfBin(bin: number, axis: AxisInfo): number {
  return axis.f0 + axis.df * bin;
}

export function timeOfFrame(frame: number, axis: AxisInfo): number {
  return axis.t0 + axis.dt * frame;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

// A dragged screen rectangle becomes a data-space region; fractional
// edges are rounded outward so every touched cell is included.
export function rectToRegion(
  a: ScreenPoint,
  b: ScreenPoint,
  axis: AxisInfo,
  size: CanvasSize,
): Region | null {
  if (a.x === b.x || a.y === b.y) {
    return null; // zero-area drag carries no information
  }
  const p = screenToData(a, axis, size);
  const q = screenToData(b, axis, size);
  const frameLo = clamp(Math.floor(Math.min(p.frame, q.frame)), 0, axis.nFrames - 1);
  const frameHi = clamp(Math.ceil(Math.max(p.frame, q.frame)), 0, axis.nFrames - 1);
  const binLo = clamp(Math.floor(Math.min(p.bin, q.bin)), 0, axis.nBins - 1);
  const binHi = clamp(Math.ceil(Math.max(p.bin, q.bin)), 0, axis.nBins - 1);
  return { frames: [frameLo, frameHi], bins: [binLo, binHi] };
}
