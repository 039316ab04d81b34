import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import type { Matrix, Transform } from "../src/index.js";
import {
  CliError,
  SketchHandle,
  ValidationError,
  compress,
  makeMatrix,
  readMatrix,
  readSketch,
  writeMatrix,
} from "../src/index.js";

const CLI = process.env.SKETCHMM_CLI ?? "sketchmm";
const BUCKETS = 512;
const DEPTH = 7;
const SEED = 7;

const dir = mkdtempSync(join(tmpdir(), "sketchmm-parity-"));
const parityLines: string[] = [];
afterAll(() => {
  rmSync(dir, { recursive: true, force: true });
  if (parityLines.length > 0) {
    const ok = parityLines.every((line) => line.endsWith("ok"));
    console.log(
      `[criterion 10] bindings parity: ${ok ? "PASS" : "FAIL"} (${parityLines.join(", ")})`,
    );
  }
});

function xorshift32(seed: number): () => number {
  let s = seed >>> 0 || 1;
  return () => {
    s ^= (s << 13) >>> 0;
    s ^= s >>> 17;
    s ^= (s << 5) >>> 0;
    s >>>= 0;
    return s / 4294967296 - 0.5;
  };
}

function randomSquare(n: number, seed: number): Float64Array {
  const next = xorshift32(seed);
  const data = new Float64Array(n * n);
  for (let k = 0; k < data.length; k++) data[k] = next();
  return data;
}

function bytesOf(values: Float64Array): Buffer {
  return Buffer.from(values.buffer, values.byteOffset, values.byteLength);
}

/** Run the native CLI once, keeping both the sketch and its decompressed matrix. */
function runNative(
  tag: string,
  n: number,
  transform: Transform,
  a: Float64Array,
  b: Float64Array,
): { handle: SketchHandle; est: Matrix; rawSketch: Buffer } {
  const aPath = join(dir, `${tag}-a.dmat`);
  const bPath = join(dir, `${tag}-b.dmat`);
  const estPath = join(dir, `${tag}-est.dmat`);
  const skPath = join(dir, `${tag}.skch`);
  writeMatrix(aPath, makeMatrix(n, n, a));
  writeMatrix(bPath, makeMatrix(n, n, b));
  execFileSync(
    CLI,
    [
      "--seed", String(SEED), "--threads", "1", "--transform", transform,
      "multiply", aPath, bPath, "-o", estPath, "--save-sketch", skPath,
      "-b", String(BUCKETS), "-d", String(DEPTH),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  return {
    handle: readSketch(skPath),
    est: readMatrix(estPath),
    rawSketch: readFileSync(skPath),
  };
}

describe("native parity", () => {
  for (const n of [64, 256]) {
    for (const transform of ["fwht", "fft"] as const) {
      it(`reproduces every estimate bit for bit at n=${n} ${transform}`, () => {
        const a = randomSquare(n, 11 * n + 1);
        const b = randomSquare(n, 13 * n + 2);
        const { handle, est, rawSketch } = runNative(`p${n}-${transform}`, n, transform, a, b);
        expect(handle.n).toBe(n);
        expect(handle.b).toBe(BUCKETS);
        expect(handle.d).toBe(DEPTH);
        expect(handle.transform).toBe(transform);
        expect(handle.seed).toBe(BigInt(SEED));

        const mine = handle.estimateAll();
        const same = bytesOf(mine).equals(bytesOf(est.data));
        parityLines.push(`n=${n} ${transform} ${same ? "ok" : "MISMATCH"}`);
        expect(same).toBe(true);

        for (const [i, j] of [[0, 0], [3, 17], [n - 1, n - 1]] as const) {
          expect(Object.is(handle.estimate(i, j), mine[i * n + j])).toBe(true);
        }
        expect(Buffer.from(handle.toBytes()).equals(rawSketch)).toBe(true);
      });
    }
  }

  it("compress() matches a direct CLI invocation at the same seed", () => {
    const n = 64;
    const a = randomSquare(n, 901);
    const b = randomSquare(n, 902);
    const { est } = runNative("wrap", n, "fwht", a, b);
    const handle = compress(makeMatrix(n, n, a), b, n, {
      buckets: BUCKETS,
      depth: DEPTH,
      transform: "fwht",
      seed: SEED,
      threads: 1,
      cli: CLI,
    });
    expect(bytesOf(handle.estimateAll()).equals(bytesOf(est.data))).toBe(true);
  });

  it("estimates exactly zero for zero operands", () => {
    const n = 64;
    const handle = compress(new Float64Array(n * n), new Float64Array(n * n), n, {
      buckets: 64,
      depth: 3,
      transform: "fwht",
      seed: 1,
      threads: 1,
      cli: CLI,
    });
    const all = handle.estimateAll();
    for (let k = 0; k < all.length; k++) {
      expect(Math.abs(all[k] as number)).toBe(0);
    }
  });
});

describe("compress validation", () => {
  const n = 8;
  const good = new Float64Array(n * n);
  const opts = { buckets: 16, depth: 3, cli: CLI } as const;

  it("rejects non-double operands before spawning anything", () => {
    expect(() =>
      compress(new Float32Array(n * n) as unknown as Float64Array, good, n, opts),
    ).toThrow(TypeError);
    expect(() =>
      compress([0, 1] as unknown as Float64Array, good, n, opts),
    ).toThrow(TypeError);
  });

  it("rejects shape mismatches", () => {
    expect(() => compress(new Float64Array(n * n - 1), good, n, opts)).toThrow(
      ValidationError,
    );
    expect(() => compress(makeMatrix(n, n - 1, new Float64Array(n * (n - 1))), good, n, opts)).toThrow(
      ValidationError,
    );
    expect(() => compress(good, good, 0, opts)).toThrow(ValidationError);
    expect(() => compress(good, good, 8.5, opts)).toThrow(ValidationError);
  });

  it("requires exactly one parameter group", () => {
    expect(() => compress(good, good, n, { cli: CLI })).toThrow(ValidationError);
    expect(() =>
      compress(good, good, n, { buckets: 16, depth: 3, cd: 1, cb: 4, cli: CLI }),
    ).toThrow(ValidationError);
    expect(() => compress(good, good, n, { buckets: 16, cli: CLI })).toThrow(
      ValidationError,
    );
    expect(() => compress(good, good, n, { cd: 1, cli: CLI })).toThrow(
      ValidationError,
    );
  });

  it("rejects seeds outside the unsigned 64-bit range", () => {
    expect(() =>
      compress(good, good, n, { ...opts, seed: 1n << 64n }),
    ).toThrow(ValidationError);
    expect(() => compress(good, good, n, { ...opts, seed: -1 })).toThrow(
      ValidationError,
    );
  });

  it("wraps CLI failures with their stderr", () => {
    expect(() =>
      compress(good, good, n, { buckets: 96, depth: 3, cli: CLI }),
    ).toThrow(CliError);
    expect(() =>
      compress(good, good, n, { buckets: 96, depth: 3, cli: CLI }),
    ).toThrow(/power of two/);
    expect(() =>
      compress(good, good, n, { ...opts, cli: join(dir, "missing-cli") }),
    ).toThrow(CliError);
  });
});
