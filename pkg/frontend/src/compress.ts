import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CliError, ValidationError } from "./errors.js";
import { Matrix, makeMatrix, writeMatrix } from "./matrix.js";
import { SketchHandle, Transform, sketchFromBytes } from "./sketch.js";

export interface CompressOptions {
  /** Explicit sketch width (power of two); give together with depth. */
  buckets?: number;
  /** Explicit sketch depth (odd); give together with buckets. */
  depth?: number;
  /** Width/depth constants; alternative to buckets/depth. */
  cd?: number;
  cb?: number;
  transform?: Transform;
  seed?: number | bigint;
  threads?: number;
  /** Executable name or path of the native CLI. */
  cli?: string;
}

function asSquareMatrix(value: Matrix | Float64Array, n: number, what: string): Matrix {
  if (value instanceof Float64Array) {
    if (value.length !== n * n) {
      throw new ValidationError(
        `${what} holds ${value.length} values, expected ${n}x${n}`,
      );
    }
    return makeMatrix(n, n, value);
  }
  if (
    typeof value === "object" &&
    value !== null &&
    value.data instanceof Float64Array
  ) {
    if (value.rows !== n || value.cols !== n) {
      throw new ValidationError(
        `${what} is ${value.rows}x${value.cols}, expected ${n}x${n}`,
      );
    }
    return value;
  }
  throw new TypeError(`${what} must be a Float64Array or a float64 Matrix`);
}

/**
 * Sketch the product A @ B through the native CLI and parse the resulting
 * sketch container.  Same seed, thread count, and parameters reproduce the
 * native path bit for bit.
 */
export function compress(
  a: Matrix | Float64Array,
  b: Matrix | Float64Array,
  n: number,
  options: CompressOptions = {},
): SketchHandle {
  if (!Number.isInteger(n) || n < 1) {
    throw new ValidationError(`matrix size ${n} must be a positive integer`);
  }
  const ma = asSquareMatrix(a, n, "operand A");
  const mb = asSquareMatrix(b, n, "operand B");
  const explicit = options.buckets !== undefined || options.depth !== undefined;
  const derived = options.cd !== undefined || options.cb !== undefined;
  if (explicit === derived) {
    throw new ValidationError("give either buckets with depth, or cd with cb");
  }
  if (explicit && (options.buckets === undefined || options.depth === undefined)) {
    throw new ValidationError("buckets and depth must be given together");
  }
  if (derived && (options.cd === undefined || options.cb === undefined)) {
    throw new ValidationError("cd and cb must be given together");
  }
  const seed = BigInt(options.seed ?? 0);
  if (seed < 0n || seed >= 1n << 64n) {
    throw new ValidationError(`seed ${seed} outside the unsigned 64-bit range`);
  }
  const dir = mkdtempSync(join(tmpdir(), "sketchmm-"));
  try {
    const aPath = join(dir, "a.dmat");
    const bPath = join(dir, "b.dmat");
    const outPath = join(dir, "est.dmat");
    const sketchPath = join(dir, "product.skch");
    writeMatrix(aPath, ma);
    writeMatrix(bPath, mb);
    const args = ["--seed", seed.toString()];
    if (options.threads !== undefined) args.push("--threads", String(options.threads));
    if (options.transform !== undefined) args.push("--transform", options.transform);
    args.push("multiply", aPath, bPath, "-o", outPath, "--save-sketch", sketchPath);
    if (explicit) {
      args.push("-b", String(options.buckets), "-d", String(options.depth));
    } else {
      args.push("--cd", String(options.cd), "--cb", String(options.cb));
    }
    try {
      execFileSync(options.cli ?? "sketchmm", args, { stdio: ["ignore", "pipe", "pipe"] });
    } catch (err) {
      const stderr =
        err instanceof Object && "stderr" in err ? String(err.stderr ?? "") : "";
      throw new CliError(`sketchmm multiply failed: ${stderr.trim() || String(err)}`);
    }
    return sketchFromBytes(readFileSync(sketchPath));
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
