import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // The loopback suite spawns the Python server and waits on real sockets.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
