// Readers for the userspace toolkit's on-disk artifacts: emitted inference
// units (manifest.json + classify.c + support.c [+ params.bin]), dataset
// files, and replay prediction files.  These are the only surfaces through
// which this package consumes the toolkit.

import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { toFixed } from "./fixed.js";
import { N_FEATURES } from "./layout.js";
import { parseManifest, verifyEmitUnit, type EmitUnit } from "./manifest.js";

export class ArtifactError extends Error {}

/**
 * Load an emit directory and run the full integrity check.
 * Refuses tampered or mismatched artifacts.
 */
export function readEmitDir(dir: string): EmitUnit {
  const manifestPath = join(dir, "manifest.json");
  if (!existsSync(manifestPath)) throw new ArtifactError(`${dir}: no manifest.json`);
  const manifestText = readFileSync(manifestPath, "utf-8");
  const manifest = parseManifest(manifestText);
  const unit: EmitUnit = {
    manifest,
    manifestText,
    classifySource: readFileSync(join(dir, "classify.c"), "utf-8"),
    supportSource: readFileSync(join(dir, "support.c"), "utf-8"),
  };
  if (manifest.mode === "maploaded") {
    const p = join(dir, "params.bin");
    if (!existsSync(p)) throw new ArtifactError(`${dir}: maploaded unit without params.bin`);
    unit.paramsBlob = new Uint8Array(readFileSync(p));
  }
  const problems = verifyEmitUnit(unit);
  if (problems.length > 0) {
    throw new ArtifactError(`${dir}: ${problems.join("; ")}`);
  }
  return unit;
}

export interface DatasetFile {
  header: Record<string, unknown>;
  /** Row-major feature matrix, n x 12, float64. */
  X: Float64Array[];
  y: Int8Array;
}

/**
 * Parse a schema-1 dataset file: a JSON header line followed by
 * whitespace-separated rows of 12 features and a 0/1 label.
 */
export function parseDatasetFile(text: string): DatasetFile {
  const nl = text.indexOf("\n");
  if (nl < 0) throw new ArtifactError("dataset file has no header line");
  let header: Record<string, unknown>;
  try {
    header = JSON.parse(text.slice(0, nl));
  } catch (e) {
    throw new ArtifactError(`bad dataset header: ${(e as Error).message}`);
  }
  if (header.kind !== "dataset" || header.schema !== 1) {
    throw new ArtifactError("not a schema-1 dataset file");
  }
  const X: Float64Array[] = [];
  const labels: number[] = [];
  let lineNo = 1;
  for (const line of text.slice(nl + 1).split("\n")) {
    lineNo++;
    const parts = line.split(/\s+/).filter((p) => p.length > 0);
    if (parts.length === 0) continue;
    if (parts.length !== N_FEATURES + 1) {
      throw new ArtifactError(`line ${lineNo}: expected ${N_FEATURES} features + label`);
    }
    const row = new Float64Array(N_FEATURES);
    for (let i = 0; i < N_FEATURES; i++) {
      const v = Number(parts[i]);
      if (!Number.isFinite(v)) throw new ArtifactError(`line ${lineNo}: bad feature ${parts[i]}`);
      row[i] = v;
    }
    const y = Number(parts[N_FEATURES]);
    if (y !== 0 && y !== 1) throw new ArtifactError(`line ${lineNo}: label must be 0 or 1`);
    X.push(row);
    labels.push(y);
  }
  return { header, X, y: Int8Array.from(labels) };
}

/**
 * Quantize one dataset row back to the raw Q47.16 vector the replay paths
 * consume.  Dataset floats are raw/2^16 exactly, so this is lossless.
 */
export function rowToFixed(row: Float64Array): BigInt64Array {
  const out = new BigInt64Array(row.length);
  for (let i = 0; i < row.length; i++) out[i] = toFixed(row[i] as number);
  return out;
}

export interface ReplayPrediction {
  ts: number;
  pid: number;
  pred: number;
  label: number;
}

export interface ReplayFile {
  schema: number;
  report: {
    model_kind: string;
    path: string;
    sample_size: number;
    macro_f1: number;
    single_class: boolean;
  };
  inputs: Record<string, unknown>;
  predictions: ReplayPrediction[];
}

/** Parse a replay --out file (per-snapshot predictions plus the report). */
export function parseReplayFile(text: string): ReplayFile {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new ArtifactError(`replay file is not JSON: ${(e as Error).message}`);
  }
  const r = raw as ReplayFile;
  if (r.schema !== 1 || !Array.isArray(r.predictions) || !r.report) {
    throw new ArtifactError("not a schema-1 replay file");
  }
  return r;
}
