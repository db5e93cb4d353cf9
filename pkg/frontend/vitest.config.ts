import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        // the e2e suite spawns the real session service on this port and
        // the client issues same-origin requests against it
        url: "http://127.0.0.1:8719/",
      },
    },
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
