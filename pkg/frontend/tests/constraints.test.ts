import { describe, expect, it } from "vitest";

import { ConstraintDrawer } from "../src/constraints.js";
import { AxisInfo, CanvasSize } from "../src/coords.js";

const axis: AxisInfo = { f0: 0, df: 1, t0: 0, dt: 1, nBins: 50, nFrames: 100 };
const size: CanvasSize = { width: 500, height: 250 };

describe("ConstraintDrawer", () => {
  it("drag produces a region and resets", () => {
    const drawer = new ConstraintDrawer();
    drawer.begin({ x: 50, y: 200 });
    expect(drawer.active).toBe(true);
    const preview = drawer.preview({ x: 150, y: 100 }, axis, size);
    expect(preview).not.toBeNull();
    const { region, rejected } = drawer.finish({ x: 150, y: 100 }, axis, size);
    expect(rejected).toBe(false);
    expect(region!.frames[0]).toBeLessThan(region!.frames[1]);
    expect(region!.bins[0]).toBeLessThan(region!.bins[1]);
    expect(drawer.active).toBe(false);
  });

  it("zero-area click is rejected with no region", () => {
    const drawer = new ConstraintDrawer();
    drawer.begin({ x: 80, y: 80 });
    const { region, rejected } = drawer.finish({ x: 80, y: 80 }, axis, size);
    expect(region).toBeNull();
    expect(rejected).toBe(true);
  });

  it("cancel discards the gesture", () => {
    const drawer = new ConstraintDrawer();
    drawer.begin({ x: 10, y: 10 });
    drawer.cancel();
    expect(drawer.active).toBe(false);
    const { region, rejected } = drawer.finish({ x: 90, y: 90 }, axis, size);
    expect(region).toBeNull();
    expect(rejected).toBe(false);
  });
});
