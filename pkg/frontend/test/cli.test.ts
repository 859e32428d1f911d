// CLI surface, run in-process with captured output.

import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { cliMain, type CliIo, type SystemInterface } from "../src/index.js";
import { fixturePath, mkTmpDir, which } from "./helpers.js";

function capture(sys?: SystemInterface): CliIo & { outText(): string; errText(): string } {
  const out: string[] = [];
  const err: string[] = [];
  return {
    out: (l) => out.push(l),
    err: (l) => err.push(l),
    outText: () => out.join("\n"),
    errText: () => err.join("\n"),
    ...(sys ? { sys } : {}),
  };
}

describe("kernelprobe detect", () => {
  it("prints host features as JSON", async () => {
    const io = capture();
    expect(await cliMain(["detect"], io)).toBe(0);
    const f = JSON.parse(io.outText());
    expect(f).toHaveProperty("kernelOk");
    expect(f).toHaveProperty("bpfLsm");
  });
});

describe("kernelprobe check", () => {
  it("accepts every fixture unit", async () => {
    for (const v of ["tree_rodata", "tree_maploaded", "mlp_rodata", "mlp_maploaded"]) {
      const io = capture();
      expect(await cliMain(["check", fixturePath(v)], io)).toBe(0);
      const rep = JSON.parse(io.outText());
      expect(rep.ok).toBe(true);
      expect(rep.programs).toHaveLength(9);
    }
  });

  it("exits 3 on a tampered unit", async () => {
    const dir = mkTmpDir("cli-");
    for (const f of ["manifest.json", "classify.c", "support.c"]) {
      fs.copyFileSync(fixturePath("tree_rodata", f), path.join(dir, f));
    }
    fs.appendFileSync(path.join(dir, "classify.c"), "\n// tamper\n");
    const io = capture();
    expect(await cliMain(["check", dir], io)).toBe(3);
    expect(io.errText()).toContain("source_digest");
  });

  it("exits 2 without a directory", async () => {
    expect(await cliMain(["check"], capture())).toBe(2);
  });
});

describe("kernelprobe assemble", () => {
  it("writes the probe source", async () => {
    const out = path.join(mkTmpDir("cli-"), "probe.bpf.c");
    const io = capture();
    expect(await cliMain(["assemble", fixturePath("mlp_maploaded"), "--out", out], io)).toBe(0);
    const src = fs.readFileSync(out, "utf-8");
    expect(src).toContain('SEC("lsm/file_open")');
    expect(src).toContain('SEC("fentry/vfs_write")');
    expect(src).toContain("classify");
  });

  it("exits 2 without --out", async () => {
    expect(await cliMain(["assemble", fixturePath("tree_rodata")], capture())).toBe(2);
  });
});

describe("kernelprobe compile", () => {
  const clang = which("clang");

  it.skipIf(clang === null)("produces a BPF ELF object", async () => {
    const out = path.join(mkTmpDir("cli-"), "probe.bpf.o");
    const io = capture();
    expect(await cliMain(["compile", fixturePath("tree_rodata"), "--out", out], io)).toBe(0);
    const head = fs.readFileSync(out).subarray(0, 4);
    expect([...head]).toEqual([0x7f, 0x45, 0x4c, 0x46]);
  });

  it("exits 4 when the toolchain is missing", async () => {
    const sys: SystemInterface = {
      platform: "linux",
      kernelRelease: () => "6.1.0",
      uid: () => 0,
      readFile: () => null,
      exists: () => false,
      which: () => null,
      exec: async () => ({ code: 1, stdout: "", stderr: "" }),
      writeFile: () => {},
      tmpdir: () => "/tmp",
    };
    const io = capture(sys);
    expect(await cliMain(["compile", fixturePath("tree_rodata"), "--out", "/tmp/x.o"], io)).toBe(4);
    expect(io.errText()).toContain("clang");
  });
});

describe("usage handling", () => {
  it("exits 2 with no command", async () => {
    expect(await cliMain([], capture())).toBe(2);
  });

  it("exits 2 on an unknown command", async () => {
    const io = capture();
    expect(await cliMain(["frobnicate"], io)).toBe(2);
    expect(io.errText()).toContain("unknown command");
  });

  it("prints usage on --help with exit 0", async () => {
    const io = capture();
    expect(await cliMain(["--help"], io)).toBe(0);
    expect(io.outText()).toContain("usage:");
  });
});
