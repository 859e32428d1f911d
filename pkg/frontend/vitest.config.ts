import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // the BPF-target and native-cc compile tests shell out to clang/cc
    testTimeout: 60_000,
  },
});
