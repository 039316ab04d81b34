import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import {
  FormatError,
  ValidationError,
  makeMatrix,
  matrixFromBytes,
  matrixToBytes,
  readMatrix,
  writeMatrix,
} from "../src/index.js";

const dir = mkdtempSync(join(tmpdir(), "sketchmm-matrix-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

function sample(rows: number, cols: number): Float64Array {
  const data = new Float64Array(rows * cols);
  for (let k = 0; k < data.length; k++) {
    data[k] = Math.sin(k + 1) * 1e3;
  }
  return data;
}

describe("makeMatrix", () => {
  it("keeps shape and data", () => {
    const m = makeMatrix(2, 3, sample(2, 3));
    expect(m.rows).toBe(2);
    expect(m.cols).toBe(3);
    expect(m.data.length).toBe(6);
  });

  it("rejects non-double storage", () => {
    expect(() =>
      makeMatrix(2, 2, new Float32Array(4) as unknown as Float64Array),
    ).toThrow(TypeError);
    expect(() =>
      makeMatrix(2, 2, [1, 2, 3, 4] as unknown as Float64Array),
    ).toThrow(TypeError);
  });

  it("rejects shape and length mismatches", () => {
    expect(() => makeMatrix(2, 2, new Float64Array(3))).toThrow(ValidationError);
    expect(() => makeMatrix(0, 2, new Float64Array(0))).toThrow(ValidationError);
    expect(() => makeMatrix(2, -1, new Float64Array(2))).toThrow(ValidationError);
    expect(() => makeMatrix(1.5, 2, new Float64Array(3))).toThrow(ValidationError);
  });
});

describe("matrix container codec", () => {
  it("round trips values exactly, signed zeros included", () => {
    const data = Float64Array.from([1.5, -0, 0, -2.25e-308, 1e300, -7]);
    const back = matrixFromBytes(matrixToBytes(makeMatrix(2, 3, data)));
    expect(back.rows).toBe(2);
    expect(back.cols).toBe(3);
    for (let k = 0; k < data.length; k++) {
      expect(Object.is(back.data[k], data[k])).toBe(true);
    }
  });

  it("lays out the documented header", () => {
    const bytes = matrixToBytes(makeMatrix(3, 5, sample(3, 5)));
    expect(bytes.length).toBe(24 + 8 * 15);
    expect(String.fromCharCode(...bytes.subarray(0, 4))).toBe("DMAT");
    const view = new DataView(bytes.buffer);
    expect(view.getUint32(4, true)).toBe(1);
    expect(view.getBigUint64(8, true)).toBe(3n);
    expect(view.getBigUint64(16, true)).toBe(5n);
  });

  it("rejects truncation, bad magic, and bad version", () => {
    const bytes = matrixToBytes(makeMatrix(2, 2, sample(2, 2)));
    expect(() => matrixFromBytes(bytes.subarray(0, 10))).toThrow(FormatError);
    expect(() => matrixFromBytes(bytes.subarray(0, bytes.length - 8))).toThrow(
      FormatError,
    );
    const badMagic = bytes.slice();
    badMagic[0] = 0x58;
    expect(() => matrixFromBytes(badMagic)).toThrow(FormatError);
    const badVersion = bytes.slice();
    new DataView(badVersion.buffer).setUint32(4, 9, true);
    expect(() => matrixFromBytes(badVersion)).toThrow(FormatError);
  });

  it("parses from a nonzero buffer offset", () => {
    const bytes = matrixToBytes(makeMatrix(2, 2, sample(2, 2)));
    const padded = new Uint8Array(bytes.length + 16);
    padded.set(bytes, 16);
    const m = matrixFromBytes(padded.subarray(16));
    expect(m.rows).toBe(2);
    expect(Array.from(m.data)).toEqual(Array.from(sample(2, 2)));
  });
});

describe("matrix files", () => {
  it("write then read is exact", () => {
    const path = join(dir, "roundtrip.dmat");
    const m = makeMatrix(4, 4, sample(4, 4));
    writeMatrix(path, m);
    const back = readMatrix(path);
    expect(back.rows).toBe(4);
    expect(back.cols).toBe(4);
    expect(Array.from(back.data)).toEqual(Array.from(m.data));
  });

  it("rejects a tampered file", () => {
    const path = join(dir, "tampered.dmat");
    const bytes = matrixToBytes(makeMatrix(2, 2, sample(2, 2)));
    writeFileSync(path, bytes.subarray(0, bytes.length - 1));
    expect(() => readMatrix(path)).toThrow(FormatError);
  });
});
