// Parameter-blob codec.
//
// The blob is the flat little-endian s64 array described by the manifest's
// blob layout; it is what load_params() writes into the ebpfml_params
// array map, and what the rodata mode bakes into the program image.

import type { EmitManifest } from "./manifest.js";

export class ParamsError extends Error {}

export type ParamsFields = Map<string, BigInt64Array>;

/**
 * Split a parameter blob into named per-field views (copies, not aliases).
 * The blob must be exactly the manifest's declared byte size.
 */
export function decodeParams(manifest: EmitManifest, blob: Uint8Array): ParamsFields {
  if (blob.byteLength !== manifest.blob.byte_size) {
    throw new ParamsError(
      `params blob is ${blob.byteLength} bytes, manifest declares ${manifest.blob.byte_size}`,
    );
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  const out: ParamsFields = new Map();
  for (const f of manifest.blob.layout) {
    const arr = new BigInt64Array(f.len_words);
    for (let i = 0; i < f.len_words; i++) {
      arr[i] = view.getBigInt64((f.offset_words + i) * 8, true);
    }
    out.set(f.name, arr);
  }
  return out;
}

/** Inverse of decodeParams; padding words beyond the layout stay zero. */
export function encodeParams(manifest: EmitManifest, fields: ParamsFields): Uint8Array {
  const blob = new Uint8Array(manifest.blob.byte_size);
  const view = new DataView(blob.buffer);
  for (const f of manifest.blob.layout) {
    const arr = fields.get(f.name);
    if (!arr) throw new ParamsError(`missing params field ${f.name}`);
    if (arr.length !== f.len_words) {
      throw new ParamsError(`params field ${f.name} has ${arr.length} words, layout says ${f.len_words}`);
    }
    for (let i = 0; i < f.len_words; i++) {
      view.setBigInt64((f.offset_words + i) * 8, arr[i] as bigint, true);
    }
  }
  return blob;
}

function field(fields: ParamsFields, name: string): BigInt64Array {
  const arr = fields.get(name);
  if (!arr) throw new ParamsError(`params blob has no field ${name}`);
  return arr;
}

/**
 * Structural sanity of a decoded tree blob: child indices stay inside the
 * padded node table and leaves are marked with feature -1.  Catches blobs
 * paired with the wrong manifest before they reach the kernel.
 */
export function checkTreeParams(manifest: EmitManifest, fields: ParamsFields): string[] {
  const out: string[] = [];
  const feature = field(fields, "feature");
  const left = field(fields, "left");
  const right = field(fields, "right");
  const padded = BigInt(feature.length);
  for (let i = 0; i < feature.length; i++) {
    const f = feature[i] as bigint;
    if (f >= 12n) out.push(`node ${i}: feature ${f} out of range`);
    if (f >= 0n) {
      const l = left[i] as bigint;
      const r = right[i] as bigint;
      if (l < 0n || l >= padded) out.push(`node ${i}: left child ${l} out of range`);
      if (r < 0n || r >= padded) out.push(`node ${i}: right child ${r} out of range`);
    }
  }
  return out;
}
