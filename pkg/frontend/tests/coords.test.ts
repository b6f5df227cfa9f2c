import { describe, expect, it } from "vitest";

import {
  AxisInfo,
  CanvasSize,
  dataToScreen,
  freqOfBin,
  rectToRegion,
  screenToData,
  timeOfFrame,
} from "../src/coords.js";

const axis: AxisInfo = {
  f0: 40.0,
  df: 0.5,
  t0: 1.0,
  dt: 0.2,
  nBins: 120,
  nFrames: 400,
};

const size: CanvasSize = { width: 960, height: 480 };

describe("coordinate round trip", () => {
  it("data -> screen -> data is identity within one bin/frame", () => {
    for (let bin = 0; bin < axis.nBins; bin += 7) {
      for (let frame = 0; frame < axis.nFrames; frame += 13) {
        const p = dataToScreen({ frame, bin }, axis, size);
        const back = screenToData(p, axis, size);
        expect(Math.abs(back.bin - bin)).toBeLessThanOrEqual(1);
        expect(Math.abs(back.frame - frame)).toBeLessThanOrEqual(1);
      }
    }
  });

  it("screen -> data -> screen is identity within one cell", () => {
    const cellW = size.width / axis.nFrames;
    const cellH = size.height / axis.nBins;
    for (let x = 0; x < size.width; x += 37) {
      for (let y = 0; y < size.height; y += 23) {
        const d = screenToData({ x, y }, axis, size);
        const back = dataToScreen(d, axis, size);
        expect(Math.abs(back.x - x)).toBeLessThanOrEqual(cellW);
        expect(Math.abs(back.y - y)).toBeLessThanOrEqual(cellH);
      }
    }
  });

  it("bin 0 maps near the bottom of the canvas", () => {
    const p = dataToScreen({ frame: 0, bin: 0 }, axis, size);
    expect(p.y).toBeGreaterThan(size.height * 0.9);
  });
});

describe("physical axis labels", () => {
  it("maps bins and frames through the affine axes", () => {
    expect(freqOfBin(0, axis)).toBeCloseTo(40.0);
    expect(freqOfBin(10, axis)).toBeCloseTo(45.0);
    expect(timeOfFrame(0, axis)).toBeCloseTo(1.0);
    expect(timeOfFrame(50, axis)).toBeCloseTo(11.0);
  });
});

describe("rectToRegion", () => {
  it("converts a known drag to exactly the expected region", () => {
    // frames 10..20, bins 30..40 at the canvas resolution above
    const a = dataToScreen({ frame: 10, bin: 30 }, axis, size);
    const b = dataToScreen({ frame: 20, bin: 40 }, axis, size);
    const region = rectToRegion(a, b, axis, size)!;
    expect(region.frames[0]).toBeGreaterThanOrEqual(9);
    expect(region.frames[0]).toBeLessThanOrEqual(10);
    expect(region.frames[1]).toBeGreaterThanOrEqual(20);
    expect(region.frames[1]).toBeLessThanOrEqual(21);
    expect(region.bins[0]).toBeGreaterThanOrEqual(29);
    expect(region.bins[0]).toBeLessThanOrEqual(30);
    expect(region.bins[1]).toBeGreaterThanOrEqual(40);
    expect(region.bins[1]).toBeLessThanOrEqual(41);
  });

  it("rounds fractional edges outward", () => {
    const a = dataToScreen({ frame: 10.4, bin: 30.6 }, axis, size);
    const b = dataToScreen({ frame: 19.6, bin: 39.2 }, axis, size);
    const region = rectToRegion(a, b, axis, size)!;
    expect(region.frames[0]).toBeLessThanOrEqual(10);
    expect(region.frames[1]).toBeGreaterThanOrEqual(20);
    expect(region.bins[0]).toBeLessThanOrEqual(30);
    expect(region.bins[1]).toBeGreaterThanOrEqual(40);
  });

  it("covers the full range on a full-canvas drag", () => {
    const region = rectToRegion({ x: 0, y: 0 },
                                { x: size.width, y: size.height },
                                axis, size)!;
    expect(region.frames).toEqual([0, axis.nFrames - 1]);
    expect(region.bins).toEqual([0, axis.nBins - 1]);
  });

  it("rejects zero-area drags", () => {
    expect(rectToRegion({ x: 50, y: 50 }, { x: 50, y: 50 }, axis, size)).toBeNull();
    expect(rectToRegion({ x: 50, y: 50 }, { x: 50, y: 90 }, axis, size)).toBeNull();
  });

  it("clamps to matrix bounds", () => {
    const region = rectToRegion({ x: -100, y: -100 },
                                { x: size.width + 50, y: size.height + 50 },
                                axis, size)!;
    expect(region.frames[0]).toBe(0);
    expect(region.frames[1]).toBe(axis.nFrames - 1);
    expect(region.bins[0]).toBe(0);
    expect(region.bins[1]).toBe(axis.nBins - 1);
  });
});
