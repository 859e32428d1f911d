// eBPF program assembly.
//
// Takes a verified emitted inference unit and produces one restricted-C
// translation unit: LSM/fentry/tracepoint hooks for the nine event kinds,
// a per-pid state map mirroring the shared record layout, the verdict
// ring buffer, and the compiler-emitted classify() spliced in verbatim.
//
// The unit is designed for textual inclusion: its typedefs and constant
// blocks sit behind include guards which the runtime support unit also
// sets.  Two wrinkles need care here:
//
//  - maploaded units declare `extern void *bpf_map_lookup_elem(...)` and
//    `extern struct ebpfml_params_map ebpfml_params`.  BPF has no symbol
//    for the helper (helpers are called by id), so the skeleton defines a
//    static always_inline function of that name ahead of the splice; the
//    later extern declaration then adopts the internal linkage (C11
//    6.2.2p4).  The params map is defined as a named struct so the extern
//    variable declaration matches its definition.
//
//  - units that embed private fixed-point helper copies (the MLP ships
//    its own fx_add/fx_mul) would collide with the runtime support unit's
//    definitions.  The splice brackets the unit with object-like macros
//    renaming exactly the helpers it embeds.

import { EVENT_KINDS, STATE_RECORD, VERDICT_RECORD, WINDOW, type EventKindName } from "./layout.js";
import { verifyEmitUnit, type EmitUnit } from "./manifest.js";

export class AssemblyError extends Error {}

export interface HookSpec {
  event: EventKindName;
  /** Counter slot / trace kind code. */
  kind: number;
  section: string;
  attach: "lsm" | "fentry" | "tracepoint";
  /** Why this attach point; the source material fixes only the event list. */
  rationale: string;
}

// Hook choice: LSM where a hook of that name exists and gives us what we
// need; the VFS read/write pair use fentry (no dedicated LSM hook, and
// vfs_write's buffer argument feeds the histogram); readdir has no LSM
// hook at all, so getdents64 is taken at the syscall tracepoint.
export const HOOKS: readonly HookSpec[] = [
  {
    event: "file_permission",
    kind: 0,
    section: "lsm/file_permission",
    attach: "lsm",
    rationale: "LSM hook; struct file in hand and bpf_d_path is allowlisted here, so it can taint",
  },
  {
    event: "file_open",
    kind: 1,
    section: "lsm/file_open",
    attach: "lsm",
    rationale: "LSM hook; struct file in hand and bpf_d_path is allowlisted here, so it can taint",
  },
  {
    event: "inode_create",
    kind: 2,
    section: "lsm/inode_create",
    attach: "lsm",
    rationale: "LSM hook; dentry-only arguments, no path resolution: counted for tainted pids",
  },
  {
    event: "inode_unlink",
    kind: 3,
    section: "lsm/inode_unlink",
    attach: "lsm",
    rationale: "LSM hook; dentry-only arguments, no path resolution: counted for tainted pids",
  },
  {
    event: "inode_rmdir",
    kind: 4,
    section: "lsm/inode_rmdir",
    attach: "lsm",
    rationale: "LSM hook; dentry-only arguments, no path resolution: counted for tainted pids",
  },
  {
    event: "inode_rename",
    kind: 5,
    section: "lsm/inode_rename",
    attach: "lsm",
    rationale: "LSM hook; dentry-only arguments, no path resolution: counted for tainted pids",
  },
  {
    event: "getdents64",
    kind: 6,
    section: "tracepoint/syscalls/sys_enter_getdents64",
    attach: "tracepoint",
    rationale: "no LSM hook covers readdir; the syscall tracepoint carries only an fd, counted for tainted pids",
  },
  {
    event: "vfs_read",
    kind: 7,
    section: "fentry/vfs_read",
    attach: "fentry",
    rationale: "no dedicated LSM hook; fentry on the VFS entry point, counted for tainted pids",
  },
  {
    event: "vfs_write",
    kind: 8,
    section: "fentry/vfs_write",
    attach: "fentry",
    rationale: "fentry on the VFS entry point; exposes the user buffer for histogram sampling",
  },
] as const;

export interface SkeletonOptions {
  /** Protected-prefix config slots (array map entries). */
  prefixSlots?: number;
  /** Longest storable prefix, bytes. */
  prefixMax?: number;
  /** Path resolution buffer, bytes (stack). */
  pathMax?: number;
  /** Per-write histogram sampling cap; must equal the generator's. */
  histSampleBytes?: number;
  stateMaxEntries?: number;
  ringbufBytes?: number;
  license?: string;
}

export interface Skeleton {
  source: string;
  programs: HookSpec[];
  maps: Array<{ name: string; type: string; note: string }>;
  /** Helpers the spliced unit embeds that were renamed to avoid collisions. */
  renamedHelpers: string[];
}

const DEFAULTS: Required<SkeletonOptions> = {
  prefixSlots: 4,
  prefixMax: 56,
  pathMax: 128,
  histSampleBytes: 4096,
  stateMaxEntries: 4096,
  ringbufBytes: 65536,
  license: "GPL",
};

/** fx_* helper definitions embedded in an emitted unit (outside guards). */
export function embeddedHelpers(classifySource: string): string[] {
  const out: string[] = [];
  const re = /^static __always_inline s64 (fx_\w+)\(/gm;
  for (let m = re.exec(classifySource); m !== null; m = re.exec(classifySource)) {
    out.push(m[1] as string);
  }
  return out;
}

function layoutAsserts(structName: string, fields: Array<{ name: string; offset: number }>, size: number): string {
  const lines = [`_Static_assert(sizeof(struct ${structName}) == ${size}, "${structName} size");`];
  for (const f of fields) {
    lines.push(
      `_Static_assert(__builtin_offsetof(struct ${structName}, ${f.name}) == ${f.offset}, "${structName}.${f.name}");`,
    );
  }
  return lines.join("\n");
}

export function assembleSkeleton(unit: EmitUnit, options?: SkeletonOptions): Skeleton {
  const problems = verifyEmitUnit(unit);
  if (problems.length > 0) {
    throw new AssemblyError(`refusing to assemble a bad unit: ${problems.join("; ")}`);
  }
  const opts = { ...DEFAULTS, ...options };
  if (opts.histSampleBytes % 64 !== 0 || opts.histSampleBytes <= 0 || opts.histSampleBytes > 65536) {
    throw new AssemblyError("histSampleBytes must be a positive multiple of 64");
  }
  if (opts.prefixSlots < 1 || opts.prefixMax < 2 || opts.pathMax < opts.prefixMax) {
    throw new AssemblyError("bad prefix/path sizing");
  }
  if ((WINDOW & (WINDOW - 1)) !== 0) throw new AssemblyError("window length must stay a power of two");

  const m = unit.manifest;
  const renamed = embeddedHelpers(unit.classifySource);
  const maploaded = m.mode === "maploaded";

  const stateAsserts = layoutAsserts(
    "ebpfml_state_rec",
    m.kernel_layouts.state_record.fields.map((f) => ({ name: f.name, offset: f.offset })),
    m.kernel_layouts.state_record.size,
  );
  const verdictAsserts = layoutAsserts(
    "ebpfml_verdict",
    m.kernel_layouts.verdict_record.fields.map((f) => ({ name: f.name, offset: f.offset })),
    m.kernel_layouts.verdict_record.size,
  );

  const paramsBlock = maploaded
    ? `
/* Parameter array map; load_params() fills entry 0 with the blob from
 * params.bin.  The spliced unit redeclares both names as extern. */
struct ebpfml_params_blob {
    s64 w[${m.blob.words}];
};
_Static_assert(sizeof(struct ebpfml_params_blob) == ${m.blob.byte_size}, "params blob size");
struct ebpfml_params_map {
    __uint(type, EBPFML_MAP_ARRAY);
    __uint(max_entries, ${m.kernel_layouts.params_map.max_entries});
    __type(key, u32);
    __type(value, struct ebpfml_params_blob);
};
struct ebpfml_params_map ebpfml_params SEC(".maps");

/* Helpers have no linkable symbol; classify's extern declaration below
 * adopts this internal-linkage definition (C11 6.2.2p4). */
static __always_inline void *bpf_map_lookup_elem(void *map, const void *key)
{
    return ebpfml_lookup(map, key);
}
`
    : "";

  const renameOn = renamed.map((h) => `#define ${h} ${h}__classifier`).join("\n");
  const renameOff = renamed.map((h) => `#undef ${h}`).join("\n");
  const renameNote =
    renamed.length > 0
      ? `/* the unit embeds private copies of ${renamed.join(", ")}; rename them away\n * from the runtime support definitions above */`
      : "/* the unit embeds no fixed-point helpers; rename layer not needed */";

  const hookBodies = HOOKS.map((h) => {
    if (h.event === "file_permission" || h.event === "file_open") {
      return `
SEC("${h.section}")
int ebpfml_h_${h.event}(u64 *ctx)
{
    /* ${h.rationale} */
    return probe_file_event((struct file *)ctx[0], ${h.kind});
}`;
    }
    if (h.event === "vfs_write") {
      return `
SEC("${h.section}")
int ebpfml_h_vfs_write(u64 *ctx)
{
    /* ${h.rationale} */
    const u8 *ubuf = (const u8 *)ctx[1];
    u64 count = ctx[2];
    u32 pid = probe_pid();
    struct ebpfml_state_rec *st = ebpfml_lookup(&ebpfml_state, &pid);
    struct ebpfml_hist *hs;
    struct ebpfml_windows *w;
    u8 chunk[EBPFML_CHUNK];
    u64 n, base, got;
    long rd;
    u32 key = 0;
    u32 c, j;

    if (!st || !st->tainted)
        return 0;
    st->counts[8]++;
    st->bytes_written += count;
    hs = ebpfml_lookup(&ebpfml_scratch, &key);
    w = probe_windows(pid);
    if (hs && w) {
        /* volatile stores keep clang from lowering this clear to a
         * memset call, which the BPF target cannot emit */
        for (j = 0; j < 256; j++)
            *(volatile u64 *)&hs->hist[j] = 0;
        n = count > EBPFML_HIST_SAMPLE ? EBPFML_HIST_SAMPLE : count;
        got = 0;
        for (c = 0; c < EBPFML_HIST_SAMPLE / EBPFML_CHUNK; c++) {
            base = (u64)c * EBPFML_CHUNK;
            if (base >= n)
                break;
            rd = ebpfml_read_user(chunk, EBPFML_CHUNK, ubuf + base);
            if (rd < 0)
                break;
            for (j = 0; j < EBPFML_CHUNK; j++) {
                if (base + j >= n)
                    break;
                hs->hist[chunk[j]]++;
                got++;
            }
        }
        if (got > 0)
            probe_push_window(st, w, hs->hist, got);
    }
    /* every accepted write is a verdict point */
    probe_verdict(pid, st);
    return 0;
}`;
    }
    // count-only hooks: getdents64/vfs_read/inode_* observe already-tainted
    // pids; their arguments carry no resolvable path.
    const arg = h.attach === "tracepoint" ? "void *ctx" : "u64 *ctx";
    return `
SEC("${h.section}")
int ebpfml_h_${h.event}(${arg})
{
    /* ${h.rationale} */
    u32 pid = probe_pid();
    struct ebpfml_state_rec *st = ebpfml_lookup(&ebpfml_state, &pid);

    (void)ctx;
    if (!st || !st->tainted)
        return 0;
    probe_count_event(pid, st, ${h.kind});
    return 0;
}`;
  }).join("\n");

  const source = `/* ebpfml kernel probe skeleton (generated by kernelprobe)
 * model: ${m.kind}  mode: ${m.mode}  format: ${m.q_format}
 * model-digest: sha256:${m.model_digest}
 * classify-digest: sha256:${m.source_digest}
 *
 * One translation unit: runtime support, maps, the emitted classifier
 * spliced verbatim, and one program per monitored event.  Compile with
 *   clang -O2 -g -target bpf -mcpu=v3 -c probe.bpf.c
 */

/* ---- runtime support unit (verbatim) ------------------------------- */
${unit.supportSource.trimEnd()}

/* ---- minimal BPF plumbing (no external headers) --------------------- */
#define SEC(name) __attribute__((section(name), used))
#define EBPFML_MAP_HASH 1
#define EBPFML_MAP_ARRAY 2
#define EBPFML_MAP_PERCPU_ARRAY 6
#define EBPFML_MAP_RINGBUF 27
#define __uint(name, val) int (*name)[val]
#define __type(name, val) typeof(val) *name

/* helper stubs by stable function id */
static void *(*ebpfml_lookup)(void *map, const void *key) = (void *) 1;
static long (*ebpfml_update)(void *map, const void *key, const void *val, u64 flags) = (void *) 2;
static u64 (*ebpfml_ktime_ns)(void) = (void *) 5;
static u64 (*ebpfml_pid_tgid)(void) = (void *) 14;
static long (*ebpfml_read_user)(void *dst, u32 size, const void *uptr) = (void *) 112;
static long (*ebpfml_ringbuf_output)(void *rb, void *data, u64 size, u64 flags) = (void *) 130;
static long (*ebpfml_d_path)(void *path, char *buf, u32 sz) = (void *) 147;

/* minimal kernel types; offsets are CO-RE-relocated at load time */
struct path {
    int _unused;
} __attribute__((preserve_access_index));
struct file {
    struct path f_path;
} __attribute__((preserve_access_index));

/* ---- shared records (layout fixed by the compiler manifest) --------- */
#define EBPFML_WINDOW ${WINDOW}
#define EBPFML_PREFIX_SLOTS ${opts.prefixSlots}
#define EBPFML_PREFIX_MAX ${opts.prefixMax}
#define EBPFML_PATH_MAX ${opts.pathMax}
#define EBPFML_HIST_SAMPLE ${opts.histSampleBytes}
#define EBPFML_CHUNK 64

struct ebpfml_state_rec {
    u64 counts[9];
    u64 bytes_written;
    s64 entropy_sum;
    s64 chi2_sum;
    u32 entropy_len;
    u32 chi2_len;
    u32 tainted;
    u32 _pad;
};
${stateAsserts}

struct ebpfml_verdict {
    u64 ts;
    u32 pid;
    s32 label;
    u64 inference_ns;
};
${verdictAsserts}

/* sliding-window backing store; the public record carries only sums and
 * lengths, the rings live here */
struct ebpfml_windows {
    s64 ent[EBPFML_WINDOW];
    s64 chi[EBPFML_WINDOW];
    u32 ent_pos;
    u32 chi_pos;
};

struct ebpfml_prefix {
    u32 len;
    char bytes[EBPFML_PREFIX_MAX];
};

struct ebpfml_hist {
    u64 hist[256];
};

struct {
    __uint(type, EBPFML_MAP_HASH);
    __uint(max_entries, ${opts.stateMaxEntries});
    __type(key, u32);
    __type(value, struct ebpfml_state_rec);
} ebpfml_state SEC(".maps");

struct {
    __uint(type, EBPFML_MAP_HASH);
    __uint(max_entries, ${opts.stateMaxEntries});
    __type(key, u32);
    __type(value, struct ebpfml_windows);
} ebpfml_winstore SEC(".maps");

struct {
    __uint(type, EBPFML_MAP_ARRAY);
    __uint(max_entries, EBPFML_PREFIX_SLOTS);
    __type(key, u32);
    __type(value, struct ebpfml_prefix);
} ebpfml_prefixes SEC(".maps");

/* 2KB histogram scratch; too big for the stack */
struct {
    __uint(type, EBPFML_MAP_PERCPU_ARRAY);
    __uint(max_entries, 1);
    __type(key, u32);
    __type(value, struct ebpfml_hist);
} ebpfml_scratch SEC(".maps");

struct {
    __uint(type, EBPFML_MAP_RINGBUF);
    __uint(max_entries, ${opts.ringbufBytes});
} ebpfml_verdicts SEC(".maps");
${paramsBlock}
/* ---- emitted classifier, spliced verbatim --------------------------- */
${renameNote}
${renameOn}
${unit.classifySource.trimEnd()}
${renameOff}

/* ---- probe logic ----------------------------------------------------- */
static __always_inline u32 probe_pid(void)
{
    return (u32)(ebpfml_pid_tgid() >> 32);
}

/* byte-prefix match; a stored prefix ends with '/' and also matches the
 * bare directory path (mirrors the userspace normalization) */
static __always_inline int probe_prefix_match(const char *path, const struct ebpfml_prefix *pfx)
{
    u32 j;

    if (pfx->len == 0 || pfx->len > EBPFML_PREFIX_MAX)
        return 0;
    for (j = 0; j < EBPFML_PREFIX_MAX; j++) {
        if (j >= pfx->len)
            return 1;
        if (path[j] == 0)
            return j == pfx->len - 1 && pfx->bytes[j] == '/';
        if (path[j] != pfx->bytes[j])
            return 0;
    }
    return 1;
}

static __always_inline int probe_path_protected(const char *path)
{
    const struct ebpfml_prefix *p;
    u32 i, key;

    for (i = 0; i < EBPFML_PREFIX_SLOTS; i++) {
        key = i;
        p = ebpfml_lookup(&ebpfml_prefixes, &key);
        if (p && probe_prefix_match(path, p))
            return 1;
    }
    return 0;
}

static __always_inline struct ebpfml_state_rec *probe_taint(u32 pid)
{
    struct ebpfml_state_rec zero = {};

    zero.tainted = 1;
    ebpfml_update(&ebpfml_state, &pid, &zero, 0);
    return ebpfml_lookup(&ebpfml_state, &pid);
}

static const struct ebpfml_windows ebpfml_windows_zero;

static __always_inline struct ebpfml_windows *probe_windows(u32 pid)
{
    struct ebpfml_windows *w = ebpfml_lookup(&ebpfml_winstore, &pid);

    if (w)
        return w;
    /* 520 bytes: zero template lives in rodata, not on the stack */
    ebpfml_update(&ebpfml_winstore, &pid, &ebpfml_windows_zero, 0);
    return ebpfml_lookup(&ebpfml_winstore, &pid);
}

static __always_inline void probe_verdict(u32 pid, const struct ebpfml_state_rec *st)
{
    struct ebpfml_verdict v;
    s64 feat[12];
    u64 t0, t1, c;
    u32 i;

    for (i = 0; i < 9; i++) {
        c = st->counts[i];
        feat[i] = c > (u64)(FX_MAX >> 16) ? FX_MAX : (s64)(c << 16);
    }
    /* window means; sums are non-negative by construction */
    feat[9] = st->entropy_len ? (s64)((u64)st->entropy_sum / st->entropy_len) : 0;
    feat[10] = st->chi2_len ? (s64)((u64)st->chi2_sum / st->chi2_len) : 0;
    c = st->bytes_written;
    feat[11] = c > (u64)(FX_MAX >> 16) ? FX_MAX : (s64)(c << 16);

    t0 = ebpfml_ktime_ns();
    v.label = classify(feat);
    t1 = ebpfml_ktime_ns();
    v.ts = t0;
    v.pid = pid;
    v.inference_ns = t1 - t0;
    ebpfml_ringbuf_output(&ebpfml_verdicts, &v, sizeof(v), 0);
}

/* count an accepted non-write event; every 64th accepted event of a pid
 * is a verdict point (writes verdict unconditionally in their own hook) */
static __always_inline void probe_count_event(u32 pid, struct ebpfml_state_rec *st, u32 kind)
{
    u64 total = 0;
    u32 i;

    st->counts[kind & 15]++;
    for (i = 0; i < 9; i++)
        total += st->counts[i];
    if ((total & (64 - 1)) == 0)
        probe_verdict(pid, st);
}

static __always_inline void probe_push_window(struct ebpfml_state_rec *st,
                                              struct ebpfml_windows *w,
                                              const u64 hist[256], u64 n)
{
    s64 e = fx_entropy(hist, n);
    s64 q = fx_chi2(hist, n);
    u32 p;

    if (st->entropy_len < EBPFML_WINDOW) {
        p = w->ent_pos & (EBPFML_WINDOW - 1);
        w->ent[p] = e;
        st->entropy_sum += e;
        st->entropy_len++;
    } else {
        p = w->ent_pos & (EBPFML_WINDOW - 1);
        st->entropy_sum += e - w->ent[p];
        w->ent[p] = e;
    }
    w->ent_pos = (w->ent_pos + 1) & (EBPFML_WINDOW - 1);

    if (st->chi2_len < EBPFML_WINDOW) {
        p = w->chi_pos & (EBPFML_WINDOW - 1);
        w->chi[p] = q;
        st->chi2_sum += q;
        st->chi2_len++;
    } else {
        p = w->chi_pos & (EBPFML_WINDOW - 1);
        st->chi2_sum += q - w->chi[p];
        w->chi[p] = q;
    }
    w->chi_pos = (w->chi_pos + 1) & (EBPFML_WINDOW - 1);
}

/* taint-capable hooks: path in hand via bpf_d_path */
static __always_inline int probe_file_event(struct file *f, u32 kind)
{
    u32 pid = probe_pid();
    struct ebpfml_state_rec *st = ebpfml_lookup(&ebpfml_state, &pid);
    char pathbuf[EBPFML_PATH_MAX];
    long plen;

    if (!st || !st->tainted) {
        plen = ebpfml_d_path(&f->f_path, pathbuf, sizeof(pathbuf));
        if (plen <= 0)
            return 0;
        if (!probe_path_protected(pathbuf))
            return 0;
        st = probe_taint(pid);
        if (!st)
            return 0;
    }
    probe_count_event(pid, st, kind);
    return 0;
}

/* ---- hook programs ---------------------------------------------------- */
${hookBodies}

char _license[] SEC("license") = "${opts.license}";
`;

  return {
    source,
    programs: [...HOOKS],
    maps: [
      { name: "ebpfml_state", type: "hash", note: "pid -> shared state record" },
      { name: "ebpfml_winstore", type: "hash", note: "pid -> entropy/chi2 ring backing" },
      { name: "ebpfml_prefixes", type: "array", note: "protected path prefixes (loader-populated)" },
      { name: "ebpfml_scratch", type: "percpu_array", note: "per-write byte histogram" },
      { name: "ebpfml_verdicts", type: "ringbuf", note: "verdict records to userspace" },
      ...(maploaded ? [{ name: "ebpfml_params", type: "array", note: "model parameter blob" }] : []),
    ],
    renamedHelpers: renamed,
  };
}
