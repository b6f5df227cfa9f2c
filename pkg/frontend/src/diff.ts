// Before/after comparison of tracking runs.

import { TrackResult } from "./api.js";

export interface TraceDelta {
  framesChanged: number;
  meanAbsDelta: number; // mean |bin difference| over changed frames
}

export function traceDeltas(before: TrackResult, after: TrackResult): TraceDelta[] {
  const count = Math.min(before.traces.length, after.traces.length);
  const deltas: TraceDelta[] = [];
  for (let layer = 0; layer < count; layer++) {
    const a = before.traces[layer];
    const b = after.traces[layer];
    const n = Math.min(a.length, b.length);
    let changed = 0;
    let sum = 0;
    for (let i = 0; i < n; i++) {
      const d = Math.abs(a[i] - b[i]);
      if (d > 0) {
        changed += 1;
        sum += d;
      }
    }
    deltas.push({
      framesChanged: changed,
      meanAbsDelta: changed ? sum / changed : 0,
    });
  }
  return deltas;
}

export function formatDeltas(deltas: TraceDelta[]): string {
  if (deltas.every((d) => d.framesChanged === 0)) {
    return "no change";
  }
  return deltas
    .map((d, i) =>
      `trace ${i + 1}: ${d.framesChanged} frames changed` +
      (d.framesChanged ? `, mean |Δbin| ${d.meanAbsDelta.toFixed(2)}` : ""))
    .join(" · ");
}
