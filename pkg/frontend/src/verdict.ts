// Verdict ring-buffer record codec and incremental stream decoder.

import { VERDICT_RECORD } from "./layout.js";

export interface Verdict {
  ts: bigint;
  pid: number;
  /** 1 malicious, 0 benign, -1 params unavailable. */
  label: number;
  inferenceNs: bigint;
}

export class VerdictError extends Error {}

export function encodeVerdict(v: Verdict): Uint8Array {
  const buf = new Uint8Array(VERDICT_RECORD.SIZE);
  const view = new DataView(buf.buffer);
  view.setBigUint64(VERDICT_RECORD.TS, v.ts, true);
  view.setUint32(VERDICT_RECORD.PID, v.pid, true);
  view.setInt32(VERDICT_RECORD.LABEL, v.label, true);
  view.setBigUint64(VERDICT_RECORD.INFERENCE_NS, v.inferenceNs, true);
  return buf;
}

export function decodeVerdict(buf: Uint8Array): Verdict {
  if (buf.byteLength !== VERDICT_RECORD.SIZE) {
    throw new VerdictError(`verdict record must be ${VERDICT_RECORD.SIZE} bytes, got ${buf.byteLength}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  return {
    ts: view.getBigUint64(VERDICT_RECORD.TS, true),
    pid: view.getUint32(VERDICT_RECORD.PID, true),
    label: view.getInt32(VERDICT_RECORD.LABEL, true),
    inferenceNs: view.getBigUint64(VERDICT_RECORD.INFERENCE_NS, true),
  };
}

/**
 * Incremental decoder over a byte stream of verdict records.
 *
 * The kernel submits whole records, but a consumer may read the stream in
 * arbitrary chunks; push() buffers any trailing partial record until the
 * rest arrives.  Records come out in stream order.
 */
export class VerdictDecoder {
  private pending: Uint8Array = new Uint8Array(0);

  push(chunk: Uint8Array): Verdict[] {
    let data: Uint8Array;
    if (this.pending.byteLength === 0) {
      data = chunk;
    } else {
      data = new Uint8Array(this.pending.byteLength + chunk.byteLength);
      data.set(this.pending, 0);
      data.set(chunk, this.pending.byteLength);
    }
    const out: Verdict[] = [];
    let off = 0;
    while (data.byteLength - off >= VERDICT_RECORD.SIZE) {
      out.push(decodeVerdict(data.subarray(off, off + VERDICT_RECORD.SIZE)));
      off += VERDICT_RECORD.SIZE;
    }
    this.pending = data.slice(off);
    return out;
  }

  /** Bytes still waiting for the rest of a record. */
  get pendingBytes(): number {
    return this.pending.byteLength;
  }

  /** A clean stream ends on a record boundary. */
  end(): void {
    if (this.pending.byteLength !== 0) {
      throw new VerdictError(`stream ended mid-record with ${this.pending.byteLength} bytes`);
    }
  }
}

/** Decode a complete capture in one call; the buffer must hold whole records. */
export function decodeVerdictStream(buf: Uint8Array): Verdict[] {
  const dec = new VerdictDecoder();
  const out = dec.push(buf);
  dec.end();
  return out;
}
