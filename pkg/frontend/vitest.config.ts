import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 20_000,
    hookTimeout: 30_000,
    // The e2e spawns a real server; keep files sequential so ports and
    // child processes never race each other.
    fileParallelism: false,
  },
});
