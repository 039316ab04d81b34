import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // parity tests shell out to the native CLI several times
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
