import { readFileSync, writeFileSync } from "node:fs";

import { FormatError, ValidationError } from "./errors.js";

const MAGIC = "DMAT";
const VERSION = 1;
const HEADER_BYTES = 4 + 4 + 8 + 8; // magic, version u32, rows u64, cols u64

/** Dense row-major float64 matrix. */
export interface Matrix {
  readonly rows: number;
  readonly cols: number;
  readonly data: Float64Array;
}

export function makeMatrix(rows: number, cols: number, data: Float64Array): Matrix {
  if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 1 || cols < 1) {
    throw new ValidationError(`matrix shape ${rows}x${cols} must be positive integers`);
  }
  if (!(data instanceof Float64Array)) {
    throw new TypeError("matrix data must be a Float64Array of doubles");
  }
  if (data.length !== rows * cols) {
    throw new ValidationError(
      `matrix data holds ${data.length} values, shape needs ${rows * cols}`,
    );
  }
  return { rows, cols, data };
}

export function matrixToBytes(m: Matrix): Uint8Array {
  const out = new Uint8Array(HEADER_BYTES + 8 * m.data.length);
  const view = new DataView(out.buffer);
  for (let k = 0; k < 4; k++) out[k] = MAGIC.charCodeAt(k);
  view.setUint32(4, VERSION, true);
  view.setBigUint64(8, BigInt(m.rows), true);
  view.setBigUint64(16, BigInt(m.cols), true);
  for (let k = 0; k < m.data.length; k++) {
    view.setFloat64(HEADER_BYTES + 8 * k, m.data[k] as number, true);
  }
  return out;
}

export function matrixFromBytes(bytes: Uint8Array): Matrix {
  if (bytes.length < HEADER_BYTES) {
    throw new FormatError(`matrix container truncated at ${bytes.length} bytes`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const magic = String.fromCharCode(...bytes.subarray(0, 4));
  if (magic !== MAGIC) {
    throw new FormatError(`bad matrix magic ${JSON.stringify(magic)}`);
  }
  const version = view.getUint32(4, true);
  if (version !== VERSION) {
    throw new FormatError(`unsupported matrix container version ${version}`);
  }
  const rows = Number(view.getBigUint64(8, true));
  const cols = Number(view.getBigUint64(16, true));
  const expect = HEADER_BYTES + 8 * rows * cols;
  if (bytes.length !== expect) {
    throw new FormatError(`matrix payload is ${bytes.length} bytes, expected ${expect}`);
  }
  const data = new Float64Array(rows * cols);
  for (let k = 0; k < data.length; k++) {
    data[k] = view.getFloat64(HEADER_BYTES + 8 * k, true);
  }
  return makeMatrix(rows, cols, data);
}

export function readMatrix(path: string): Matrix {
  return matrixFromBytes(readFileSync(path));
}

export function writeMatrix(path: string, m: Matrix): void {
  writeFileSync(path, matrixToBytes(m));
}
