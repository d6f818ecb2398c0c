import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    // the e2e test spawns the lab service and waits for it to come up
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
