// Shared kernel/userspace record layouts.
//
// These mirror the `kernel_layouts` block every compiler manifest carries.
// All integers are little-endian.  The manifest is the source of truth;
// checkKernelLayouts() refuses any manifest that drifted from this mirror,
// and the generated skeleton re-asserts the same numbers with
// _Static_assert so the C compiler enforces them a third time.

export const STATE_RECORD = {
  SIZE: 112,
  COUNTS: 0, // u64[9]
  COUNTS_LEN: 9,
  BYTES_WRITTEN: 72, // u64
  ENTROPY_SUM: 80, // s64, raw Q47.16
  CHI2_SUM: 88, // s64, raw Q47.16
  ENTROPY_LEN: 96, // u32
  CHI2_LEN: 100, // u32
  TAINTED: 104, // u32
  PAD: 108, // u32
} as const;

export const VERDICT_RECORD = {
  SIZE: 24,
  TS: 0, // u64
  PID: 8, // u32
  LABEL: 12, // s32
  INFERENCE_NS: 16, // u64
} as const;

export const PARAMS_MAP = {
  NAME: "ebpfml_params",
  TYPE: "array",
  MAX_ENTRIES: 1,
  KEY: "u32",
} as const;

/** Sliding-window length of the per-pid entropy/chi2 aggregates. */
export const WINDOW = 32;

/** Width of the classifier input vector. */
export const N_FEATURES = 12;

// Event kind codes as used in trace files and per-pid counter slots.
export const EVENT_KINDS = [
  "file_permission",
  "file_open",
  "inode_create",
  "inode_unlink",
  "inode_rmdir",
  "inode_rename",
  "getdents64",
  "vfs_read",
  "vfs_write",
] as const;

export type EventKindName = (typeof EVENT_KINDS)[number];

export function alignUp(value: number, align: number): number {
  if (align <= 0 || (align & (align - 1)) !== 0) throw new Error("align must be a power of two");
  return (value + (align - 1)) & ~(align - 1);
}

interface ManifestField {
  name: string;
  offset: number;
  size: number;
  type: string;
}

interface KernelLayouts {
  state_record: { size: number; fields: ManifestField[] };
  verdict_record: { size: number; fields: ManifestField[] };
  params_map: { name: string; type: string; max_entries: number; key: string; value_bytes: number };
}

const STATE_FIELDS: Array<[string, number, number, string]> = [
  ["counts", STATE_RECORD.COUNTS, 72, "u64[9]"],
  ["bytes_written", STATE_RECORD.BYTES_WRITTEN, 8, "u64"],
  ["entropy_sum", STATE_RECORD.ENTROPY_SUM, 8, "s64"],
  ["chi2_sum", STATE_RECORD.CHI2_SUM, 8, "s64"],
  ["entropy_len", STATE_RECORD.ENTROPY_LEN, 4, "u32"],
  ["chi2_len", STATE_RECORD.CHI2_LEN, 4, "u32"],
  ["tainted", STATE_RECORD.TAINTED, 4, "u32"],
  ["_pad", STATE_RECORD.PAD, 4, "u32"],
];

const VERDICT_FIELDS: Array<[string, number, number, string]> = [
  ["ts", VERDICT_RECORD.TS, 8, "u64"],
  ["pid", VERDICT_RECORD.PID, 4, "u32"],
  ["label", VERDICT_RECORD.LABEL, 4, "s32"],
  ["inference_ns", VERDICT_RECORD.INFERENCE_NS, 8, "u64"],
];

function diffRecord(
  kind: string,
  declared: { size: number; fields: ManifestField[] },
  expectedSize: number,
  expected: Array<[string, number, number, string]>,
): string[] {
  const out: string[] = [];
  if (declared.size !== expectedSize) {
    out.push(`${kind}: size ${declared.size} != ${expectedSize}`);
  }
  if (declared.fields.length !== expected.length) {
    out.push(`${kind}: ${declared.fields.length} fields != ${expected.length}`);
  }
  const byName = new Map(declared.fields.map((f) => [f.name, f]));
  for (const [name, offset, size, type] of expected) {
    const f = byName.get(name);
    if (!f) {
      out.push(`${kind}: missing field ${name}`);
      continue;
    }
    if (f.offset !== offset) out.push(`${kind}.${name}: offset ${f.offset} != ${offset}`);
    if (f.size !== size) out.push(`${kind}.${name}: size ${f.size} != ${size}`);
    if (f.type !== type) out.push(`${kind}.${name}: type ${f.type} != ${type}`);
  }
  return out;
}

/**
 * Compare a manifest's kernel_layouts block against this mirror.
 *
 * Returns a list of human-readable mismatches; empty means the layouts
 * agree byte for byte.  `value_bytes` of the params map is checked against
 * the manifest's own blob byte size by the manifest reader, not here.
 */
export function checkKernelLayouts(layouts: KernelLayouts): string[] {
  const out: string[] = [];
  out.push(...diffRecord("state_record", layouts.state_record, STATE_RECORD.SIZE, STATE_FIELDS));
  out.push(
    ...diffRecord("verdict_record", layouts.verdict_record, VERDICT_RECORD.SIZE, VERDICT_FIELDS),
  );
  const pm = layouts.params_map;
  if (pm.name !== PARAMS_MAP.NAME) out.push(`params_map: name ${pm.name} != ${PARAMS_MAP.NAME}`);
  if (pm.type !== PARAMS_MAP.TYPE) out.push(`params_map: type ${pm.type} != ${PARAMS_MAP.TYPE}`);
  if (pm.max_entries !== PARAMS_MAP.MAX_ENTRIES) {
    out.push(`params_map: max_entries ${pm.max_entries} != ${PARAMS_MAP.MAX_ENTRIES}`);
  }
  if (pm.key !== PARAMS_MAP.KEY) out.push(`params_map: key ${pm.key} != ${PARAMS_MAP.KEY}`);
  return out;
}
