import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    testTimeout: 180_000, // training tests run whole optimization loops
    hookTimeout: 30_000,
  },
});
