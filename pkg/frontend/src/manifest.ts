// Compiler-manifest reading and integrity checks.
//
// Every emitted inference unit ships a manifest.json describing the model,
// the parameter blob layout, and the kernel-shared record layouts.  The
// manifest carries two digests: `manifest_digest` over its own canonical
// JSON (minus the digest fields and the post-render stack estimate) and
// `source_digest` over the classify.c bytes.  We recompute both before
// trusting an artifact enough to splice it into a kernel program.

import { createHash } from "node:crypto";

import { checkKernelLayouts } from "./layout.js";

export type ModelKind = "tree" | "mlp";
export type EmitMode = "rodata" | "maploaded";

export interface BlobField {
  name: string;
  offset_words: number;
  len_words: number;
}

export interface EmitManifest {
  schema: number;
  generator: string;
  kind: ModelKind;
  mode: EmitMode;
  q_format: string;
  decision_threshold: number;
  decision_threshold_logit: number;
  node_count?: number;
  node_mask?: number;
  padded_nodes?: number;
  loop_bound: number;
  est_insn_bound: number;
  stack_bytes_est: number;
  blob: {
    words: number;
    byte_size: number;
    word_type: string;
    layout: BlobField[];
  };
  classify: { signature: string; returns: string };
  kernel_layouts: {
    state_record: { size: number; fields: Array<{ name: string; offset: number; size: number; type: string }> };
    verdict_record: { size: number; fields: Array<{ name: string; offset: number; size: number; type: string }> };
    params_map: { name: string; type: string; max_entries: number; key: string; value_bytes: number };
  };
  model_digest: string;
  source_digest: string;
  manifest_digest: string;
}

export class ManifestError extends Error {}

function fail(msg: string): never {
  throw new ManifestError(msg);
}

const HEX64 = /^[0-9a-f]{64}$/;

/** Parse manifest JSON text, validating structure (not digests). */
export function parseManifest(text: string): EmitManifest {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    fail(`manifest is not JSON: ${(e as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) fail("manifest must be an object");
  const m = raw as Record<string, unknown>;

  if (m.schema !== 1) fail(`unsupported manifest schema ${String(m.schema)}`);
  if (m.kind !== "tree" && m.kind !== "mlp") fail(`unknown model kind ${String(m.kind)}`);
  if (m.mode !== "rodata" && m.mode !== "maploaded") fail(`unknown emit mode ${String(m.mode)}`);
  if (m.q_format !== "Q47.16") fail(`unsupported q_format ${String(m.q_format)}`);

  const blob = m.blob as EmitManifest["blob"] | undefined;
  if (!blob || !Array.isArray(blob.layout)) fail("manifest missing blob layout");
  if (blob.byte_size !== blob.words * 8) fail("blob byte_size does not match words * 8");
  let cursor = 0;
  for (const f of blob.layout) {
    if (typeof f.name !== "string" || !Number.isInteger(f.offset_words) || !Number.isInteger(f.len_words)) {
      fail("malformed blob layout entry");
    }
    if (f.offset_words !== cursor) fail(`blob field ${f.name} not contiguous at word ${cursor}`);
    if (f.len_words <= 0) fail(`blob field ${f.name} has non-positive length`);
    cursor += f.len_words;
  }
  if (cursor > blob.words) fail("blob layout overruns declared word count");

  const kl = m.kernel_layouts as EmitManifest["kernel_layouts"] | undefined;
  if (!kl || !kl.state_record || !kl.verdict_record || !kl.params_map) {
    fail("manifest missing kernel_layouts");
  }
  if (kl.params_map.value_bytes !== blob.byte_size) {
    fail("params_map value_bytes does not match blob byte_size");
  }

  for (const key of ["model_digest", "source_digest", "manifest_digest"] as const) {
    if (typeof m[key] !== "string" || !HEX64.test(m[key] as string)) fail(`manifest ${key} malformed`);
  }
  if (typeof m.loop_bound !== "number" || m.loop_bound < 0) fail("manifest loop_bound malformed");

  return raw as EmitManifest;
}

// Canonical JSON from a parsed object: recursively sorted keys, no
// whitespace.  Caveat: integral floats do not survive JSON.parse (1.0
// re-serializes as "1"), so digest recomputation should prefer
// canonicalizeJsonText on the raw manifest bytes whenever they are at
// hand.  This object form exists for callers that build manifests in
// memory.
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value === "number" || typeof value === "boolean") {
    return JSON.stringify(value);
  }
  if (typeof value === "string") return JSON.stringify(value);
  if (Array.isArray(value)) return `[${value.map(canonicalJson).join(",")}]`;
  if (typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .filter(([, v]) => v !== undefined)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
    return `{${entries.map(([k, v]) => `${JSON.stringify(k)}:${canonicalJson(v)}`).join(",")}}`;
  }
  throw new ManifestError(`cannot canonicalize a ${typeof value}`);
}

/**
 * Canonicalize JSON text without a parse/re-serialize round trip:
 * whitespace is dropped and object keys are sorted, but number and
 * string lexemes pass through byte-for-byte as the producer wrote them
 * (so "0.0" stays "0.0").  Top-level keys in `dropTopLevel` are removed.
 */
export function canonicalizeJsonText(text: string, dropTopLevel?: ReadonlySet<string>): string {
  let i = 0;
  const ws = () => {
    while (i < text.length && " \t\n\r".includes(text[i] as string)) i++;
  };
  const err = (msg: string): never => {
    throw new ManifestError(`manifest JSON at offset ${i}: ${msg}`);
  };
  const stringLexeme = (): string => {
    const start = i;
    i++;
    while (i < text.length) {
      const c = text[i];
      if (c === "\\") {
        i += 2;
        continue;
      }
      if (c === '"') {
        i++;
        return text.slice(start, i);
      }
      i++;
    }
    return err("unterminated string");
  };
  const value = (depth: number): string => {
    ws();
    const c = text[i];
    if (c === undefined) err("unexpected end of input");
    if (c === "{") {
      i++;
      const entries: Array<[string, string, string]> = [];
      ws();
      if (text[i] === "}") {
        i++;
      } else {
        for (;;) {
          ws();
          if (text[i] !== '"') err("expected object key");
          const keyLex = stringLexeme();
          const key = JSON.parse(keyLex) as string;
          ws();
          if (text[i] !== ":") err("expected ':'");
          i++;
          entries.push([key, keyLex, value(depth + 1)]);
          ws();
          if (text[i] === ",") {
            i++;
            continue;
          }
          if (text[i] === "}") {
            i++;
            break;
          }
          err("expected ',' or '}'");
        }
      }
      const kept = entries.filter(([k]) => !(depth === 0 && dropTopLevel !== undefined && dropTopLevel.has(k)));
      kept.sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
      return `{${kept.map(([, keyLex, v]) => `${keyLex}:${v}`).join(",")}}`;
    }
    if (c === "[") {
      i++;
      const items: string[] = [];
      ws();
      if (text[i] === "]") {
        i++;
      } else {
        for (;;) {
          items.push(value(depth + 1));
          ws();
          if (text[i] === ",") {
            i++;
            continue;
          }
          if (text[i] === "]") {
            i++;
            break;
          }
          err("expected ',' or ']'");
        }
      }
      return `[${items.join(",")}]`;
    }
    if (c === '"') return stringLexeme();
    const start = i;
    while (i < text.length && !',}] \t\n\r'.includes(text[i] as string)) i++;
    if (i === start) err(`unexpected character '${String(c)}'`);
    return text.slice(start, i);
  };
  const out = value(0);
  ws();
  if (i !== text.length) err("trailing data");
  return out;
}

// Fields excluded from the digest: the digest itself, the source digest
// (classify.c embeds the manifest digest, so hashing it here would cycle),
// and the stack estimate (computed after the source is rendered).
const DIGEST_EXCLUDED = new Set(["manifest_digest", "source_digest", "stack_bytes_est"]);

/**
 * Recompute the digest a well-formed manifest should carry.  Pass the
 * raw manifest JSON text when available; it is exact for every number
 * the producer can emit.  The parsed-object form is a fallback that
 * cannot distinguish 1.0 from 1.
 */
export function manifestDigest(manifest: EmitManifest | string): string {
  const canon =
    typeof manifest === "string"
      ? canonicalizeJsonText(manifest, DIGEST_EXCLUDED)
      : (() => {
          const trimmed: Record<string, unknown> = {};
          for (const [k, v] of Object.entries(manifest)) {
            if (!DIGEST_EXCLUDED.has(k)) trimmed[k] = v;
          }
          return canonicalJson(trimmed);
        })();
  return createHash("sha256").update(canon).digest("hex");
}

export function sourceDigest(classifySource: string | Uint8Array): string {
  return createHash("sha256").update(classifySource).digest("hex");
}

export interface EmitUnit {
  manifest: EmitManifest;
  /** Raw manifest.json text; lets the digest check be lexeme-exact. */
  manifestText?: string;
  classifySource: string;
  supportSource: string;
  paramsBlob?: Uint8Array;
}

/**
 * Full integrity check of an emitted unit: recomputed digests, the shared
 * kernel layout mirror, and the parameter blob size.  Returns the list of
 * problems; empty means the unit is safe to splice and load.
 */
export function verifyEmitUnit(unit: EmitUnit): string[] {
  const out: string[] = [];
  const m = unit.manifest;
  const md = manifestDigest(unit.manifestText ?? m);
  if (md !== m.manifest_digest) {
    out.push(`manifest_digest mismatch: recomputed ${md}, declared ${m.manifest_digest}`);
  }
  const sd = sourceDigest(unit.classifySource);
  if (sd !== m.source_digest) {
    out.push(`source_digest mismatch: classify.c hashes to ${sd}, declared ${m.source_digest}`);
  }
  out.push(...checkKernelLayouts(m.kernel_layouts));
  if (m.mode === "maploaded") {
    if (!unit.paramsBlob) {
      out.push("maploaded unit is missing its params blob");
    } else if (unit.paramsBlob.byteLength !== m.blob.byte_size) {
      out.push(`params blob is ${unit.paramsBlob.byteLength} bytes, manifest says ${m.blob.byte_size}`);
    }
  }
  if (!unit.supportSource.includes("EBPFML_FX_HELPERS_DEFINED")) {
    out.push("support source does not look like the fixed-point runtime unit");
  }
  return out;
}
