import { ValidationError } from "./errors.js";

const MASK64 = (1n << 64n) - 1n;

/** One multiply-add-shift hash: ((a*x + c) mod 2^64) >> shift. */
export interface HashPair {
  readonly a: bigint;
  readonly c: bigint;
  readonly shift: number;
}

export function checkHashPair(pair: HashPair, what: string): void {
  if (pair.a < 0n || pair.a > MASK64 || pair.c < 0n || pair.c > MASK64) {
    throw new ValidationError(`${what}: hash words must be unsigned 64-bit`);
  }
  if (!Number.isInteger(pair.shift) || pair.shift < 32 || pair.shift > 63) {
    throw new ValidationError(`${what}: shift ${pair.shift} outside [32, 63]`);
  }
}

/** Bucket index of x under the pair; x must be a non-negative 32-bit index. */
export function evalBucket(pair: HashPair, x: number): number {
  const mixed = BigInt.asUintN(64, pair.a * BigInt(x) + pair.c);
  return Number(mixed >> BigInt(pair.shift));
}

/** Sign in {-1, +1}: the one-bit bucket of the top output bit. */
export function evalSign(pair: HashPair, x: number): number {
  const mixed = BigInt.asUintN(64, pair.a * BigInt(x) + pair.c);
  return 1 - 2 * Number(mixed >> 63n);
}

/** Buckets for x = 0..n-1, precomputed for the row/column table loops. */
export function bucketTable(pair: HashPair, n: number): Uint32Array {
  const out = new Uint32Array(n);
  for (let x = 0; x < n; x++) out[x] = evalBucket(pair, x);
  return out;
}

/** Signs for x = 0..n-1 as -1/+1 entries. */
export function signTable(pair: HashPair, n: number): Int8Array {
  const out = new Int8Array(n);
  for (let x = 0; x < n; x++) out[x] = evalSign(pair, x);
  return out;
}
