import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { readEmitDir } from "../src/artifacts.js";
import type { EmitUnit } from "../src/manifest.js";

export const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export const VARIANTS = ["tree_rodata", "tree_maploaded", "mlp_rodata", "mlp_maploaded"] as const;
export type Variant = (typeof VARIANTS)[number];

export function fixturePath(...parts: string[]): string {
  return path.join(FIXTURES, ...parts);
}

export function readUnit(variant: Variant): EmitUnit {
  return readEmitDir(fixturePath(variant));
}

export function readFixtureText(name: string): string {
  return fs.readFileSync(fixturePath(name), "utf-8");
}

export function readFixtureBytes(name: string): Uint8Array {
  return new Uint8Array(fs.readFileSync(fixturePath(name)));
}

/** First match of `tool` on PATH, or null. */
export function which(tool: string): string | null {
  for (const d of (process.env.PATH ?? "").split(path.delimiter)) {
    if (d === "") continue;
    const cand = path.join(d, tool);
    try {
      fs.accessSync(cand, fs.constants.X_OK);
      return cand;
    } catch {
      /* next */
    }
  }
  return null;
}

export function run(cmd: string, args: string[], input?: Buffer): { stdout: Buffer; ok: boolean; err: string } {
  try {
    const stdout = execFileSync(cmd, args, { input, maxBuffer: 64 * 1024 * 1024 });
    return { stdout, ok: true, err: "" };
  } catch (e) {
    const err = e as { stderr?: Buffer; message: string };
    return { stdout: Buffer.alloc(0), ok: false, err: err.stderr?.toString() ?? err.message };
  }
}

export function mkTmpDir(prefix: string): string {
  return fs.mkdtempSync(path.join(fs.realpathSync(process.env.TMPDIR ?? "/tmp"), prefix));
}
