import { readFileSync } from "node:fs";

import { FormatError, ValidationError } from "./errors.js";
import {
  HashPair,
  bucketTable,
  checkHashPair,
  evalBucket,
  evalSign,
  signTable,
} from "./hash.js";

const MAGIC = "SKCH";
const VERSION = 1;
const HEADER_BYTES = 4 + 4 + 8 + 8 + 8 + 4 + 8;
const TRANSFORM_CODES = ["fft", "fwht"] as const;

export type Transform = (typeof TRANSFORM_CODES)[number];

interface SketchData {
  n: number;
  b: number;
  d: number;
  transform: Transform;
  seed: bigint;
  h1: HashPair[];
  h2: HashPair[];
  s1: HashPair[];
  s2: HashPair[];
  polys: Float64Array; // d rows of b coefficients
}

function checkIndex(value: number, limit: number, what: string): void {
  if (!Number.isInteger(value) || value < 0 || value >= limit) {
    throw new RangeError(`${what} ${value} outside [0, ${limit})`);
  }
}

/**
 * A parsed sketch of a matrix product.  Parameters are read-only; entry
 * estimates reproduce the native decompression bit for bit: bucket indices
 * combine by XOR (fwht sketches) or addition mod b (fft sketches), and the
 * estimate is the exact middle order statistic of the d per-sketch values.
 */
export class SketchHandle {
  readonly #data: SketchData;

  constructor(data: SketchData) {
    this.#data = data;
  }

  get n(): number {
    return this.#data.n;
  }

  get b(): number {
    return this.#data.b;
  }

  get d(): number {
    return this.#data.d;
  }

  get transform(): Transform {
    return this.#data.transform;
  }

  get seed(): bigint {
    return this.#data.seed;
  }

  /** Estimate of product entry (i, j). */
  estimate(i: number, j: number): number {
    const { n, b, d, transform, h1, h2, s1, s2, polys } = this.#data;
    checkIndex(i, n, "row index");
    checkIndex(j, n, "column index");
    const mask = b - 1;
    const vals = new Float64Array(d);
    for (let t = 0; t < d; t++) {
      const u = evalBucket(h1[t] as HashPair, i);
      const v = evalBucket(h2[t] as HashPair, j);
      const idx = transform === "fwht" ? u ^ v : (u + v) & mask;
      const sign = evalSign(s1[t] as HashPair, i) * evalSign(s2[t] as HashPair, j);
      vals[t] = sign * (polys[t * b + idx] as number);
    }
    vals.sort();
    return vals[(d - 1) >> 1] as number;
  }

  /** All n*n entry estimates, row-major. */
  estimateAll(): Float64Array {
    const { n, b, d, transform, h1, h2, s1, s2, polys } = this.#data;
    const mask = b - 1;
    const u1 = h1.map((p) => bucketTable(p, n));
    const v2 = h2.map((p) => bucketTable(p, n));
    const g1 = s1.map((p) => signTable(p, n));
    const g2 = s2.map((p) => signTable(p, n));
    const out = new Float64Array(n * n);
    const vals = new Float64Array(d);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        for (let t = 0; t < d; t++) {
          const u = (u1[t] as Uint32Array)[i] as number;
          const v = (v2[t] as Uint32Array)[j] as number;
          const idx = transform === "fwht" ? u ^ v : (u + v) & mask;
          const sign =
            ((g1[t] as Int8Array)[i] as number) * ((g2[t] as Int8Array)[j] as number);
          vals[t] = sign * (polys[t * b + idx] as number);
        }
        vals.sort();
        out[i * n + j] = vals[(d - 1) >> 1] as number;
      }
    }
    return out;
  }

  /** Reserialize to the sketch container byte layout. */
  toBytes(): Uint8Array {
    const { n, b, d, transform, seed, h1, h2, s1, s2, polys } = this.#data;
    const out = new Uint8Array(HEADER_BYTES + 8 * 8 * d + 8 * polys.length);
    const view = new DataView(out.buffer);
    for (let k = 0; k < 4; k++) out[k] = MAGIC.charCodeAt(k);
    view.setUint32(4, VERSION, true);
    view.setBigUint64(8, BigInt(n), true);
    view.setBigUint64(16, BigInt(b), true);
    view.setBigUint64(24, BigInt(d), true);
    view.setUint32(32, TRANSFORM_CODES.indexOf(transform), true);
    view.setBigUint64(36, seed, true);
    let off = HEADER_BYTES;
    for (const group of [h1, h2, s1, s2]) {
      for (const pair of group) {
        view.setBigUint64(off, pair.a, true);
        view.setBigUint64(off + 8, pair.c, true);
        off += 16;
      }
    }
    for (let k = 0; k < polys.length; k++) {
      view.setFloat64(off + 8 * k, polys[k] as number, true);
    }
    return out;
  }
}

export function sketchFromBytes(bytes: Uint8Array): SketchHandle {
  if (bytes.length < HEADER_BYTES) {
    throw new FormatError(`sketch container truncated at ${bytes.length} bytes`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const magic = String.fromCharCode(...bytes.subarray(0, 4));
  if (magic !== MAGIC) {
    throw new FormatError(`bad sketch magic ${JSON.stringify(magic)}`);
  }
  const version = view.getUint32(4, true);
  if (version !== VERSION) {
    throw new FormatError(`unsupported sketch container version ${version}`);
  }
  const n = Number(view.getBigUint64(8, true));
  const b = Number(view.getBigUint64(16, true));
  const d = Number(view.getBigUint64(24, true));
  const code = view.getUint32(32, true);
  const seed = view.getBigUint64(36, true);
  if (code >= TRANSFORM_CODES.length) {
    throw new FormatError(`unknown transform code ${code}`);
  }
  if (b < 2 || (b & (b - 1)) !== 0) {
    throw new FormatError(`sketch width ${b} is not a power of two`);
  }
  if (d < 1 || d % 2 === 0) {
    throw new FormatError(`sketch depth ${d} must be odd`);
  }
  const expect = HEADER_BYTES + 8 * 8 * d + 8 * d * b;
  if (bytes.length !== expect) {
    throw new FormatError(`sketch payload is ${bytes.length} bytes, expected ${expect}`);
  }
  const bucketShift = 64 - Math.log2(b);
  let off = HEADER_BYTES;
  const groups: HashPair[][] = [];
  for (const shift of [bucketShift, bucketShift, 63, 63]) {
    const group: HashPair[] = [];
    for (let t = 0; t < d; t++) {
      const pair = {
        a: view.getBigUint64(off, true),
        c: view.getBigUint64(off + 8, true),
        shift,
      };
      checkHashPair(pair, "sketch hash");
      group.push(pair);
      off += 16;
    }
    groups.push(group);
  }
  const polys = new Float64Array(d * b);
  for (let k = 0; k < polys.length; k++) {
    polys[k] = view.getFloat64(off + 8 * k, true);
  }
  const [h1, h2, s1, s2] = groups as [HashPair[], HashPair[], HashPair[], HashPair[]];
  return new SketchHandle({
    n,
    b,
    d,
    transform: TRANSFORM_CODES[code] as Transform,
    seed,
    h1,
    h2,
    s1,
    s2,
    polys,
  });
}

export function readSketch(path: string): SketchHandle {
  return sketchFromBytes(readFileSync(path));
}

export function estimate(handle: SketchHandle, i: number, j: number): number {
  return handle.estimate(i, j);
}

export function estimateAll(handle: SketchHandle): Float64Array {
  return handle.estimateAll();
}

export { ValidationError };
