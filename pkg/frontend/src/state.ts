// Per-pid state record codec (the KernelStateRecord mirror).

import { STATE_RECORD } from "./layout.js";

export interface StateRecord {
  /** Accepted-event counters indexed by event kind code (9 slots). */
  counts: bigint[];
  bytesWritten: bigint;
  /** Sum of the entropy window, raw Q47.16. */
  entropySum: bigint;
  /** Sum of the chi-squared window, raw Q47.16. */
  chi2Sum: bigint;
  entropyLen: number;
  chi2Len: number;
  tainted: boolean;
}

export class StateRecordError extends Error {}

export function encodeStateRecord(rec: StateRecord): Uint8Array {
  if (rec.counts.length !== STATE_RECORD.COUNTS_LEN) {
    throw new StateRecordError(`need ${STATE_RECORD.COUNTS_LEN} counters, got ${rec.counts.length}`);
  }
  const buf = new Uint8Array(STATE_RECORD.SIZE);
  const view = new DataView(buf.buffer);
  for (let i = 0; i < STATE_RECORD.COUNTS_LEN; i++) {
    view.setBigUint64(STATE_RECORD.COUNTS + i * 8, rec.counts[i] as bigint, true);
  }
  view.setBigUint64(STATE_RECORD.BYTES_WRITTEN, rec.bytesWritten, true);
  view.setBigInt64(STATE_RECORD.ENTROPY_SUM, rec.entropySum, true);
  view.setBigInt64(STATE_RECORD.CHI2_SUM, rec.chi2Sum, true);
  view.setUint32(STATE_RECORD.ENTROPY_LEN, rec.entropyLen, true);
  view.setUint32(STATE_RECORD.CHI2_LEN, rec.chi2Len, true);
  view.setUint32(STATE_RECORD.TAINTED, rec.tainted ? 1 : 0, true);
  view.setUint32(STATE_RECORD.PAD, 0, true);
  return buf;
}

export function decodeStateRecord(buf: Uint8Array): StateRecord {
  if (buf.byteLength !== STATE_RECORD.SIZE) {
    throw new StateRecordError(`state record must be ${STATE_RECORD.SIZE} bytes, got ${buf.byteLength}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const counts: bigint[] = [];
  for (let i = 0; i < STATE_RECORD.COUNTS_LEN; i++) {
    counts.push(view.getBigUint64(STATE_RECORD.COUNTS + i * 8, true));
  }
  return {
    counts,
    bytesWritten: view.getBigUint64(STATE_RECORD.BYTES_WRITTEN, true),
    entropySum: view.getBigInt64(STATE_RECORD.ENTROPY_SUM, true),
    chi2Sum: view.getBigInt64(STATE_RECORD.CHI2_SUM, true),
    entropyLen: view.getUint32(STATE_RECORD.ENTROPY_LEN, true),
    chi2Len: view.getUint32(STATE_RECORD.CHI2_LEN, true),
    tainted: view.getUint32(STATE_RECORD.TAINTED, true) !== 0,
  };
}
