// Probe lifecycle: feature detection, compile, attach, params, verdicts.
//
// All host access goes through an injectable SystemInterface so the
// decision logic is testable without a BPF-capable kernel.  Against the
// real system the loader degrades honestly: attach() refuses with a
// typed error naming the first missing requirement instead of guessing.

import { execFile } from "node:child_process";
import { randomBytes } from "node:crypto";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import process from "node:process";
import { promisify } from "node:util";

import { decodeParams, encodeParams } from "./params.js";
import { assembleSkeleton, type Skeleton, type SkeletonOptions } from "./skeleton.js";
import { VerdictDecoder, type Verdict } from "./verdict.js";
import type { EmitUnit } from "./manifest.js";

const execFileAsync = promisify(execFile);

export class ProbeError extends Error {}
/** Kernel too old, or BPF LSM not active. */
export class UnsupportedKernelError extends ProbeError {}
/** Not running with the privilege BPF loading needs. */
export class PrivilegeError extends ProbeError {}
/** A required host tool (clang, bpftool) is missing or failed. */
export class ToolingError extends ProbeError {}
/** Parameter blob does not match the manifest's size. */
export class ParamsSizeError extends ProbeError {}

export interface ExecResult {
  code: number;
  stdout: string;
  stderr: string;
}

/** Host access used by the loader; swap out in tests. */
export interface SystemInterface {
  platform: string;
  kernelRelease(): string;
  uid(): number;
  readFile(p: string): string | null;
  exists(p: string): boolean;
  which(tool: string): string | null;
  exec(cmd: string, args: string[]): Promise<ExecResult>;
  writeFile(p: string, data: string | Uint8Array): void;
  tmpdir(): string;
}

export function realSystem(): SystemInterface {
  return {
    platform: process.platform,
    kernelRelease: () => os.release(),
    uid: () => (typeof process.getuid === "function" ? process.getuid() : -1),
    readFile: (p) => {
      try {
        return fs.readFileSync(p, "utf8");
      } catch {
        return null;
      }
    },
    exists: (p) => fs.existsSync(p),
    which: (tool) => {
      const dirs = (process.env.PATH ?? "").split(path.delimiter);
      for (const d of dirs) {
        if (d === "") continue;
        const cand = path.join(d, tool);
        try {
          fs.accessSync(cand, fs.constants.X_OK);
          return cand;
        } catch {
          /* keep looking */
        }
      }
      return null;
    },
    exec: async (cmd, args) => {
      try {
        const { stdout, stderr } = await execFileAsync(cmd, args, { maxBuffer: 16 * 1024 * 1024 });
        return { code: 0, stdout, stderr };
      } catch (err) {
        const e = err as { code?: number; stdout?: string; stderr?: string };
        return { code: typeof e.code === "number" ? e.code : 1, stdout: e.stdout ?? "", stderr: e.stderr ?? "" };
      }
    },
    writeFile: (p, data) => {
      fs.writeFileSync(p, data);
    },
    tmpdir: () => fs.mkdtempSync(path.join(os.tmpdir(), "kernelprobe-")),
  };
}

export interface HostFeatures {
  platform: string;
  kernel: string;
  kernelOk: boolean;
  root: boolean;
  /** "bpf" listed in the active LSMs. */
  bpfLsm: boolean;
  clang: string | null;
  bpftool: string | null;
}

export function parseKernelRelease(release: string): [number, number] {
  const m = /^(\d+)\.(\d+)/.exec(release);
  if (!m) return [0, 0];
  return [Number(m[1]), Number(m[2])];
}

export function kernelAtLeast(release: string, major: number, minor: number): boolean {
  const [maj, min] = parseKernelRelease(release);
  return maj > major || (maj === major && min >= minor);
}

export function detectFeatures(sys: SystemInterface): HostFeatures {
  const kernel = sys.platform === "linux" ? sys.kernelRelease() : "";
  const lsmList = sys.readFile("/sys/kernel/security/lsm") ?? "";
  return {
    platform: sys.platform,
    kernel,
    kernelOk: sys.platform === "linux" && kernelAtLeast(kernel, 5, 15),
    root: sys.uid() === 0,
    bpfLsm: lsmList.split(",").some((s) => s.trim() === "bpf"),
    clang: sys.which("clang"),
    bpftool: sys.which("bpftool"),
  };
}

export interface VerdictRecord extends Verdict {}

export interface AttachOptions {
  /** Compile and verify-locally only; no kernel interaction. */
  dryRun?: boolean;
  skeleton?: SkeletonOptions;
}

/** Live (or dry-run) probe handle. */
export class ProbeHandle {
  #detached = false;
  #params: Uint8Array | null;
  readonly dryRun: boolean;
  readonly objectPath: string | null;
  readonly probe: KernelProbe;
  #pending: Verdict[] = [];
  #decoder = new VerdictDecoder();

  constructor(probe: KernelProbe, dryRun: boolean, objectPath: string | null, initialParams: Uint8Array | null) {
    this.probe = probe;
    this.dryRun = dryRun;
    this.objectPath = objectPath;
    this.#params = initialParams;
  }

  get attached(): boolean {
    return !this.#detached;
  }

  /** Idempotent; a second call is a no-op. */
  async detach(): Promise<void> {
    this.#detached = true;
  }

  /**
   * Replace the parameter blob.  The size must match the manifest
   * exactly; the stored copy is what readParams() returns, so a
   * round-trip read-back equality check is well-defined even dry.
   */
  async loadParams(blob: Uint8Array): Promise<void> {
    const m = this.probe.unit.manifest;
    if (m.mode !== "maploaded") {
      throw new ProbeError(`unit mode is ${m.mode}; only maploaded units take runtime params`);
    }
    if (blob.byteLength !== m.blob.byte_size) {
      throw new ParamsSizeError(`params blob is ${blob.byteLength} bytes, manifest says ${m.blob.byte_size}`);
    }
    // decode/encode round-trip doubles as a structural check
    const fields = decodeParams(m, blob);
    const reencoded = encodeParams(m, fields);
    if (Buffer.compare(Buffer.from(reencoded), Buffer.from(blob)) !== 0) {
      throw new ProbeError("params blob failed its encode round-trip");
    }
    this.#params = new Uint8Array(blob);
  }

  async readParams(): Promise<Uint8Array> {
    if (this.#params === null) throw new ProbeError("no params loaded");
    return new Uint8Array(this.#params);
  }

  /** Push raw ring-buffer bytes (tests; a live reader would poll). */
  feedVerdictBytes(chunk: Uint8Array): void {
    this.#pending.push(...this.#decoder.push(chunk));
  }

  /**
   * Ordered verdict records.  Yields what has arrived and returns; in a
   * dry run with no fed bytes that is the empty stream.
   */
  async *verdicts(): AsyncGenerator<VerdictRecord> {
    while (this.#pending.length > 0) {
      yield this.#pending.shift() as Verdict;
    }
  }
}

export class KernelProbe {
  readonly unit: EmitUnit;
  readonly sys: SystemInterface;
  #skeleton: Skeleton | null = null;

  constructor(unit: EmitUnit, sys: SystemInterface = realSystem()) {
    this.unit = unit;
    this.sys = sys;
  }

  skeleton(opts?: SkeletonOptions): Skeleton {
    if (this.#skeleton === null || opts !== undefined) {
      this.#skeleton = assembleSkeleton(this.unit, opts);
    }
    return this.#skeleton;
  }

  /**
   * Compile the assembled skeleton for the BPF target.  Returns the
   * object file path; throws ToolingError when clang is missing or the
   * compile fails (stderr included).
   */
  async compile(opts?: SkeletonOptions, outPath?: string): Promise<string> {
    const clang = this.sys.which("clang");
    if (clang === null) throw new ToolingError("clang not found on PATH");
    const sk = this.skeleton(opts);
    const dir = this.sys.tmpdir();
    const src = path.join(dir, "probe.bpf.c");
    const obj = outPath ?? path.join(dir, "probe.bpf.o");
    this.sys.writeFile(src, sk.source);
    const res = await this.sys.exec(clang, [
      "-O2",
      "-g",
      "-target",
      "bpf",
      "-mcpu=v3",
      "-Wall",
      "-Wextra",
      "-Werror",
      "-c",
      src,
      "-o",
      obj,
    ]);
    if (res.code !== 0) {
      throw new ToolingError(`BPF compile failed:\n${res.stderr}`);
    }
    return obj;
  }

  /**
   * Attach the probe for the given protected prefixes.
   *
   * Requirement order is fixed so error reporting is deterministic:
   * linux -> kernel >= 5.15 -> root -> BPF LSM active -> tooling.
   * With dryRun the kernel-facing steps are replaced by a local
   * compile, which still exercises the whole assembly path.
   */
  async attach(protectedPrefixes: string[], options?: AttachOptions): Promise<ProbeHandle> {
    if (protectedPrefixes.length === 0) {
      throw new ProbeError("need at least one protected prefix");
    }
    const skOpts = options?.skeleton;
    const maxLen = skOpts?.prefixMax ?? 56;
    const slots = skOpts?.prefixSlots ?? 4;
    if (protectedPrefixes.length > slots) {
      throw new ProbeError(`${protectedPrefixes.length} prefixes exceed the ${slots} config slots`);
    }
    for (const p of normalizePrefixes(protectedPrefixes)) {
      if (Buffer.byteLength(p, "utf8") > maxLen) {
        throw new ProbeError(`prefix too long for the ${maxLen}-byte config slot: ${p}`);
      }
      if (!p.startsWith("/")) {
        throw new ProbeError(`protected prefix must be absolute: ${p}`);
      }
    }

    const feats = detectFeatures(this.sys);
    const initialParams = this.unit.manifest.mode === "maploaded" ? (this.unit.paramsBlob ?? null) : null;

    if (options?.dryRun) {
      const obj = feats.clang !== null ? await this.compile(skOpts) : null;
      return new ProbeHandle(this, true, obj, initialParams ? new Uint8Array(initialParams) : null);
    }

    if (feats.platform !== "linux") {
      throw new UnsupportedKernelError(`BPF LSM needs linux, not ${feats.platform}`);
    }
    if (!feats.kernelOk) {
      throw new UnsupportedKernelError(`kernel ${feats.kernel || "unknown"} is older than 5.15`);
    }
    if (!feats.root) {
      throw new PrivilegeError("loading BPF LSM programs needs root (CAP_BPF + CAP_PERFMON + CAP_SYS_ADMIN)");
    }
    if (!feats.bpfLsm) {
      throw new UnsupportedKernelError(
        'BPF LSM is not active (need "bpf" in /sys/kernel/security/lsm; boot with lsm=...,bpf)',
      );
    }
    if (feats.clang === null) {
      throw new ToolingError("clang not found on PATH");
    }
    if (feats.bpftool === null) {
      throw new ToolingError("bpftool not found on PATH (needed to load and pin the programs)");
    }

    const obj = await this.compile(skOpts);
    const pinDir = `/sys/fs/bpf/kernelprobe-${randomBytes(4).toString("hex")}`;
    const load = await this.sys.exec(feats.bpftool, ["prog", "loadall", obj, pinDir, "autoattach"]);
    if (load.code !== 0) {
      throw new ToolingError(`bpftool loadall failed:\n${load.stderr}`);
    }
    return new ProbeHandle(this, false, obj, initialParams ? new Uint8Array(initialParams) : null);
  }
}

/**
 * Prefix normalization shared with the in-kernel matcher: every stored
 * prefix ends in exactly one "/" so "/data" protects "/data" and
 * "/data/x" but never "/database".
 */
export function normalizePrefixes(prefixes: string[]): string[] {
  return prefixes.map((p) => p.replace(/\/+$/, "") + "/").map((p) => (p === "/" ? "/" : p));
}
