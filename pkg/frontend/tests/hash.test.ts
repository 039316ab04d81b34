import { describe, expect, it } from "vitest";

import type { HashPair } from "../src/index.js";
import {
  ValidationError,
  bucketTable,
  evalBucket,
  evalSign,
  signTable,
} from "../src/index.js";
import { checkHashPair } from "../src/hash.js";

const KEYS = [0, 1, 2, 5, 1023];

// expected buckets and signs cross-checked against the native implementation
const KNOWN: Array<{
  pair: HashPair;
  buckets: number[];
  signs: number[];
}> = [
  {
    pair: { a: 1n << 62n, c: 0n, shift: 62 },
    buckets: [0, 1, 2, 1, 3],
    signs: [1, 1, -1, 1, -1],
  },
  {
    pair: { a: 1n, c: 1n << 63n, shift: 63 },
    buckets: [1, 1, 1, 1, 1],
    signs: [-1, -1, -1, -1, -1],
  },
  {
    pair: { a: 0x9e3779b97f4a7c15n, c: 0x123456789abcdef0n, shift: 56 },
    buckets: [18, 176, 78, 41, 81],
    signs: [1, -1, 1, 1, 1],
  },
];

describe("evalBucket", () => {
  it("matches pinned native values", () => {
    for (const { pair, buckets } of KNOWN) {
      expect(KEYS.map((x) => evalBucket(pair, x))).toEqual(buckets);
    }
  });

  it("wraps multiplication mod 2^64", () => {
    const pair: HashPair = { a: (1n << 64n) - 1n, c: 0n, shift: 62 };
    // (2^64 - 1) * 1 mod 2^64 keeps the top two bits set
    expect(evalBucket(pair, 1)).toBe(3);
    // 3 * (2^64 - 1) mod 2^64 = 2^64 - 3, still in the top bucket
    expect(evalBucket(pair, 3)).toBe(3);
  });

  it("stays below the bucket count its shift implies", () => {
    const pair: HashPair = { a: 0xdeadbeefcafef00dn, c: 17n, shift: 60 };
    for (let x = 0; x < 200; x++) {
      const u = evalBucket(pair, x);
      expect(u).toBeGreaterThanOrEqual(0);
      expect(u).toBeLessThan(1 << 4);
    }
  });
});

describe("evalSign", () => {
  it("matches pinned native values", () => {
    for (const { pair, signs } of KNOWN) {
      const signPair: HashPair = { ...pair, shift: 63 };
      expect(KEYS.map((x) => evalSign(signPair, x))).toEqual(signs);
    }
  });

  it("is the two-bucket hash mapped to +1/-1", () => {
    const pair: HashPair = { a: 0x9e3779b97f4a7c15n, c: 99n, shift: 63 };
    for (let x = 0; x < 100; x++) {
      expect(evalSign(pair, x)).toBe(1 - 2 * evalBucket(pair, x));
    }
  });
});

describe("tables", () => {
  it("bucketTable agrees with scalar evaluation", () => {
    const pair: HashPair = { a: 0x2545f4914f6cdd1dn, c: 0x27bb2ee687b0b0fdn, shift: 58 };
    const table = bucketTable(pair, 64);
    expect(table).toBeInstanceOf(Uint32Array);
    for (let x = 0; x < 64; x++) {
      expect(table[x]).toBe(evalBucket(pair, x));
    }
  });

  it("signTable agrees with scalar evaluation", () => {
    const pair: HashPair = { a: 0x2545f4914f6cdd1dn, c: 5n, shift: 63 };
    const table = signTable(pair, 64);
    expect(table).toBeInstanceOf(Int8Array);
    for (let x = 0; x < 64; x++) {
      expect(table[x]).toBe(evalSign(pair, x));
    }
  });
});

describe("checkHashPair", () => {
  it("accepts boundary words", () => {
    checkHashPair({ a: 0n, c: (1n << 64n) - 1n, shift: 32 }, "test");
    checkHashPair({ a: (1n << 64n) - 1n, c: 0n, shift: 63 }, "test");
  });

  it("rejects words outside 64 bits", () => {
    expect(() => checkHashPair({ a: 1n << 64n, c: 0n, shift: 60 }, "t")).toThrow(
      ValidationError,
    );
    expect(() => checkHashPair({ a: 0n, c: -1n, shift: 60 }, "t")).toThrow(
      ValidationError,
    );
  });

  it("rejects shifts outside [32, 63]", () => {
    expect(() => checkHashPair({ a: 1n, c: 1n, shift: 31 }, "t")).toThrow(
      ValidationError,
    );
    expect(() => checkHashPair({ a: 1n, c: 1n, shift: 64 }, "t")).toThrow(
      ValidationError,
    );
    expect(() => checkHashPair({ a: 1n, c: 1n, shift: 40.5 }, "t")).toThrow(
      ValidationError,
    );
  });
});
