import { describe, expect, it } from "vitest";
import { parsePointBuffer } from "../src/api.js";

function makeBuffer(points: number[][]): ArrayBuffer {
  const buf = new ArrayBuffer(4 + 12 * points.length);
  const dv = new DataView(buf);
  dv.setUint32(0, points.length, true);
  const f = new Float32Array(buf, 4);
  points.forEach((p, i) => f.set(p, i * 3));
  return buf;
}

describe("binary point transport", () => {
  it("parses count and coordinates", () => {
    const buf = makeBuffer([[1, 2, 3], [4, 5, 6]]);
    const xyz = parsePointBuffer(buf);
    expect(xyz.length).toBe(6);
    expect(Array.from(xyz)).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it("accepts an empty cloud", () => {
    const xyz = parsePointBuffer(makeBuffer([]));
    expect(xyz.length).toBe(0);
  });

  it("rejects length mismatches", () => {
    const buf = makeBuffer([[1, 2, 3]]);
    const truncated = buf.slice(0, buf.byteLength - 4);
    expect(() => parsePointBuffer(truncated)).toThrow(/mismatch/);
  });

  it("rejects short buffers", () => {
    expect(() => parsePointBuffer(new ArrayBuffer(2))).toThrow(/too short/);
  });

  it("wire length is 4 + 12 * count", () => {
    for (const n of [0, 1, 7, 100]) {
      const pts = Array.from({ length: n }, (_, i) => [i, 0, 0]);
      expect(makeBuffer(pts).byteLength).toBe(4 + 12 * n);
    }
  });
});
