#!/usr/bin/env node
// kernelprobe CLI: inspect hosts, check emitted units, assemble and
// compile the probe.  Exit codes: 0 ok, 2 usage, 3 bad input data,
// 4 toolchain/host failure.

import * as fs from "node:fs";
import * as path from "node:path";
import process from "node:process";
import { parseArgs } from "node:util";

import { readEmitDir, ArtifactError } from "./artifacts.js";
import { detectFeatures, realSystem, KernelProbe, ToolingError, type SystemInterface } from "./loader.js";
import { ManifestError } from "./manifest.js";
import { assembleSkeleton, AssemblyError } from "./skeleton.js";

const USAGE = `usage: kernelprobe <command> [args]

commands:
  detect                      report host BPF LSM readiness as JSON
  check <emit-dir>            verify an emitted unit (digests, layouts, params)
  assemble <emit-dir> --out FILE   write the full probe C source
  compile <emit-dir> --out FILE    assemble and clang-compile for the BPF target
`;

export interface CliIo {
  out(line: string): void;
  err(line: string): void;
  sys?: SystemInterface;
}

function defaultIo(): CliIo {
  return {
    out: (l) => process.stdout.write(l + "\n"),
    err: (l) => process.stderr.write(l + "\n"),
  };
}

export async function cliMain(argv: string[], io: CliIo = defaultIo()): Promise<number> {
  const [cmd, ...rest] = argv;
  const sys = io.sys ?? realSystem();
  try {
    switch (cmd) {
      case "detect": {
        const f = detectFeatures(sys);
        io.out(JSON.stringify(f, null, 2));
        return 0;
      }
      case "check": {
        const dir = rest[0];
        if (!dir || rest.length !== 1) {
          io.err(USAGE);
          return 2;
        }
        const unit = readEmitDir(dir);
        const sk = assembleSkeleton(unit);
        io.out(
          JSON.stringify(
            {
              ok: true,
              kind: unit.manifest.kind,
              mode: unit.manifest.mode,
              model_digest: unit.manifest.model_digest,
              programs: sk.programs.map((p) => p.section),
              maps: sk.maps.map((m) => m.name),
              renamed_helpers: sk.renamedHelpers,
            },
            null,
            2,
          ),
        );
        return 0;
      }
      case "assemble": {
        const { values, positionals } = parseArgs({
          args: rest,
          options: { out: { type: "string" } },
          allowPositionals: true,
        });
        const dir = positionals[0];
        if (!dir || positionals.length !== 1 || !values.out) {
          io.err(USAGE);
          return 2;
        }
        const unit = readEmitDir(dir);
        const sk = assembleSkeleton(unit);
        fs.mkdirSync(path.dirname(path.resolve(values.out)), { recursive: true });
        fs.writeFileSync(values.out, sk.source);
        io.out(`wrote ${values.out} (${sk.programs.length} programs, ${sk.maps.length} maps)`);
        return 0;
      }
      case "compile": {
        const { values, positionals } = parseArgs({
          args: rest,
          options: { out: { type: "string" } },
          allowPositionals: true,
        });
        const dir = positionals[0];
        if (!dir || positionals.length !== 1 || !values.out) {
          io.err(USAGE);
          return 2;
        }
        const unit = readEmitDir(dir);
        const probe = new KernelProbe(unit, sys);
        const obj = await probe.compile(undefined, path.resolve(values.out));
        io.out(`wrote ${obj}`);
        return 0;
      }
      case undefined:
      case "-h":
      case "--help":
      case "help": {
        io.out(USAGE);
        return cmd === undefined ? 2 : 0;
      }
      default: {
        io.err(`unknown command: ${cmd}`);
        io.err(USAGE);
        return 2;
      }
    }
  } catch (err) {
    if (err instanceof ArtifactError || err instanceof ManifestError || err instanceof AssemblyError) {
      io.err(`error: ${(err as Error).message}`);
      return 3;
    }
    if (err instanceof ToolingError) {
      io.err(`error: ${(err as Error).message}`);
      return 4;
    }
    throw err;
  }
}

const isDirectRun = (() => {
  const entry = process.argv[1];
  if (!entry) return false;
  try {
    return import.meta.url === new URL(`file://${path.resolve(entry)}`).href;
  } catch {
    return false;
  }
})();

if (isDirectRun) {
  cliMain(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      process.stderr.write(`fatal: ${err?.stack ?? err}\n`);
      process.exit(1);
    },
  );
}
