// Drag-to-rectangle state machine; emits regions in data coordinates.

import { AxisInfo, CanvasSize, Region, ScreenPoint, rectToRegion } from "./coords.js";

export interface DragResult {
  region: Region | null;
  rejected: boolean; // true for a zero-area click
}

export class ConstraintDrawer {
  private start: ScreenPoint | null = null;

  begin(p: ScreenPoint): void {
    this.start = p;
  }

  preview(p: ScreenPoint, axis: AxisInfo, size: CanvasSize): Region | null {
    if (!this.start) return null;
    return rectToRegion(this.start, p, axis, size);
  }

  finish(p: ScreenPoint, axis: AxisInfo, size: CanvasSize): DragResult {
    if (!this.start) return { region: null, rejected: false };
    const region = rectToRegion(this.start, p, axis, size);
    this.start = null;
    return { region, rejected: region === null };
  }

  cancel(): void {
    this.start = null;
  }

  get active(): boolean {
    return this.start !== null;
  }
}
