"""Quantization and restricted-C code generation for the two model kinds.

emit() produces a self-contained translation unit exposing
`s32 classify(const s64 features[12])` in one of two parameter-placement
modes: constants in the read-only data section, or a single array-map
lookup of a packed little-endian parameter blob.  Generated control flow is
verifier-shaped: loops have compile-time bounds, node-array indices are
masked to a power-of-two array size, and the only external call is the map
lookup helper.

lint_restricted() checks those properties on any source text (it is a
token-level checker shaped around what the emitter produces, not a general
C parser).  interpret_generated() executes the exact integer operation
sequence of the emitted code, giving a kernel-free equivalence oracle.
"""

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .features import STATE_RECORD_LAYOUT, STATE_RECORD_SIZE, VERDICT_RECORD_LAYOUT, VERDICT_RECORD_SIZE
from .fixedpoint import FX_MAX, FX_MIN, FX_ONE, log2_lut_c_block, to_fixed
from .models import LEAF, FixedModel, MlpModel, TreeModel, dumps_model, logit_threshold

MAX_NODES = 4096
MAX_DEPTH = 64
STACK_LIMIT = 512


class QuantizationError(ValueError):
    pass


class EmitError(ValueError):
    pass


class LintParseError(ValueError):
    pass


class EmitMode(Enum):
    RODATA = "rodata"
    MAP_LOADED = "maploaded"


@dataclass
class GeneratedSource:
    source_text: str
    manifest: dict


# ---------------------------------------------------------------------------
# quantization


def _q(value, name):
    v = float(value)
    if not math.isfinite(v):
        raise QuantizationError(f"parameter {name} is not finite")
    raw = to_fixed(v)
    # to_fixed saturates; a saturated parameter means the model cannot be
    # represented and must be reported, not silently clamped.
    if raw in (FX_MIN, FX_MAX) and abs(v) * FX_ONE < 2**63 - 1:
        return raw
    if abs(v) > (2**63 - 1) / FX_ONE:
        raise QuantizationError(f"parameter {name} = {v} outside Q47.16 range")
    return raw


def quantize(model, t=0.5):
    """Convert a float model to Q47.16.  t is the probability threshold."""
    if not 0.0 < t < 1.0:
        raise QuantizationError("probability threshold must be in (0, 1)")
    if isinstance(model, TreeModel):
        model.validate()
        n = model.n_nodes
        thr_raw = np.zeros(n, dtype=np.int64)
        leaf_raw = np.zeros(n, dtype=np.int64)
        for i in range(n):
            if model.feature[i] != LEAF:
                thr_raw[i] = _q(model.threshold[i], f"threshold[{i}]")
            else:
                leaf_raw[i] = _q(model.leaf_value[i], f"leaf_value[{i}]")
        return FixedModel(
            kind="tree",
            decision_threshold_logit=to_fixed(t),
            decision_threshold=t,
            tree={
                "feature": model.feature.astype(np.int64).copy(),
                "threshold_raw": thr_raw,
                "left": model.left.astype(np.int64).copy(),
                "right": model.right.astype(np.int64).copy(),
                "leaf_raw": leaf_raw,
                "max_depth": int(model.max_depth),
            },
        ).validate()
    if isinstance(model, MlpModel):
        model.validate()
        layers = []
        for li, (w, b, act) in enumerate(model.layers, start=1):
            wr = np.zeros(w.shape, dtype=np.int64)
            br = np.zeros(b.shape, dtype=np.int64)
            for i in range(w.shape[0]):
                for j in range(w.shape[1]):
                    wr[i, j] = _q(w[i, j], f"w{li}[{i}][{j}]")
            for i in range(b.shape[0]):
                br[i] = _q(b[i], f"b{li}[{i}]")
            layers.append((wr, br, act))
        return FixedModel(
            kind="mlp",
            decision_threshold_logit=to_fixed(logit_threshold(t)),
            decision_threshold=t,
            layers=layers,
        ).validate()
    raise QuantizationError(f"cannot quantize {type(model).__name__}")


# ---------------------------------------------------------------------------
# packing (shared by emit, blob, and the interpreter)


def _next_pow2(n):
    p = 1
    while p < n:
        p <<= 1
    return p


def pack_tree(fm):
    """Pad node arrays to a power of two; padding nodes are inert self-leaves."""
    t = fm.tree
    n = len(t["feature"])
    p = _next_pow2(max(n, 1))
    feature = np.full(p, LEAF, dtype=np.int64)
    thr = np.zeros(p, dtype=np.int64)
    left = np.arange(p, dtype=np.int64)
    right = np.arange(p, dtype=np.int64)
    leaf = np.zeros(p, dtype=np.int64)
    feature[:n] = t["feature"]
    thr[:n] = t["threshold_raw"]
    left[:n] = t["left"]
    right[:n] = t["right"]
    leaf[:n] = t["leaf_raw"]
    return {
        "feature": feature,
        "threshold": thr,
        "left": left,
        "right": right,
        "leaf": leaf,
        "n_nodes": n,
        "padded": p,
        "mask": p - 1,
        "depth": int(t["max_depth"]),
    }


def blob_layout(fm):
    """Word-granular layout of the parameter blob (manifest-declared order)."""
    if fm.kind == "tree":
        p = pack_tree(fm)["padded"]
        names = ["feature", "threshold", "left", "right", "leaf"]
        layout = []
        off = 0
        for name in names:
            layout.append({"name": name, "offset_words": off, "len_words": p})
            off += p
        return layout, off
    layout = [
        {"name": "w1", "offset_words": 0, "len_words": 96},
        {"name": "b1", "offset_words": 96, "len_words": 8},
        {"name": "w2", "offset_words": 104, "len_words": 8},
        {"name": "b2", "offset_words": 112, "len_words": 1},
    ]
    return layout, 113


def pack_blob(fm):
    """Parameter blob bytes: little-endian s64 words in blob_layout order."""
    if fm.kind == "tree":
        p = pack_tree(fm)
        words = np.concatenate(
            [p["feature"], p["threshold"], p["left"], p["right"], p["leaf"]]
        )
    else:
        (w1, b1, _), (w2, b2, _) = fm.layers
        words = np.concatenate(
            [w1.reshape(-1), b1, w2.reshape(-1), b2]
        ).astype(np.int64)
    return words.astype("<i8").tobytes()


def unpack_blob(fm, blob):
    layout, words = blob_layout(fm)
    if len(blob) != words * 8:
        raise EmitError(f"blob must be {words * 8} bytes, got {len(blob)}")
    arr = np.frombuffer(blob, dtype="<i8").astype(np.int64)
    return {e["name"]: arr[e["offset_words"] : e["offset_words"] + e["len_words"]] for e in layout}


# ---------------------------------------------------------------------------
# emission


_TYPEDEFS = """\
#ifndef EBPFML_TYPES_DEFINED
#define EBPFML_TYPES_DEFINED
typedef signed char s8;
typedef short s16;
typedef int s32;
typedef long long s64;
typedef unsigned char u8;
typedef unsigned short u16;
typedef unsigned int u32;
typedef unsigned long long u64;
#ifndef __always_inline
#define __always_inline inline __attribute__((always_inline))
#endif
#endif
"""

_FX_DEFINES = """\
#ifndef EBPFML_FX_DEFINED
#define EBPFML_FX_DEFINED
#define FX_MIN (-9223372036854775807LL - 1)
#define FX_MAX 9223372036854775807LL
#endif
"""

_FX_ADD = """\
static __always_inline s64 fx_add(s64 a, s64 b)
{
    s64 r = (s64)((u64)a + (u64)b);

    if (((a ^ r) & (b ^ r)) < 0)
        return (r < 0) ? FX_MAX : FX_MIN;
    return r;
}
"""

_FX_SUB = """\
static __always_inline s64 fx_sub(s64 a, s64 b)
{
    s64 r = (s64)((u64)a - (u64)b);

    if (((a ^ b) & (a ^ r)) < 0)
        return (a < 0) ? FX_MIN : FX_MAX;
    return r;
}
"""

_FX_MUL = """\
static __always_inline s64 fx_mul(s64 a, s64 b)
{
    u64 ua = (u64)a;
    u64 ub = (u64)b;
    u64 al = ua & 0xffffffffULL;
    u64 ah = ua >> 32;
    u64 bl = ub & 0xffffffffULL;
    u64 bh = ub >> 32;
    u64 ll = al * bl;
    u64 lh = al * bh;
    u64 hl = ah * bl;
    u64 hh = ah * bh;
    u64 mid = lh + (ll >> 32);
    u64 mid2 = hl + (mid & 0xffffffffULL);
    u64 lo = (ll & 0xffffffffULL) | (mid2 << 32);
    u64 hi = hh + (mid >> 32) + (mid2 >> 32);
    s64 shhi;
    s64 r;

    if (a < 0)
        hi = hi - ub;
    if (b < 0)
        hi = hi - ua;
    shhi = (s64)hi >> 16;
    r = (s64)((lo >> 16) | (hi << 48));
    if (shhi != (r >> 63))
        return (shhi < 0) ? FX_MIN : FX_MAX;
    return r;
}
"""

_FX_LOG2 = """\
static __always_inline s64 fx_log2(s64 v)
{
    u64 uv;
    u64 m;
    u32 msb = 0;
    u32 idx;
    u32 carry;
    s64 ip;

    if (v <= 0)
        return FX_MIN;
    uv = (u64)v;
    if (uv >= (1ULL << 32)) {
        uv = uv >> 32;
        msb = msb + 32;
    }
    if (uv >= (1ULL << 16)) {
        uv = uv >> 16;
        msb = msb + 16;
    }
    if (uv >= (1ULL << 8)) {
        uv = uv >> 8;
        msb = msb + 8;
    }
    if (uv >= (1ULL << 4)) {
        uv = uv >> 4;
        msb = msb + 4;
    }
    if (uv >= (1ULL << 2)) {
        uv = uv >> 2;
        msb = msb + 2;
    }
    if (uv >= 2)
        msb = msb + 1;
    m = ((u64)v) << (62 - msb);
    idx = (u32)((m >> 53) & 0x1ff);
    idx = (idx + 1) >> 1;
    carry = idx >> 8;
    idx = idx & 0xff;
    ip = (s64)((s32)msb - 16 + (s32)carry);
    return (ip << 16) + fx_log2_lut[idx & 0xff];
}
"""

_FX_ENTROPY = """\
static __always_inline s64 fx_entropy(const u64 hist[256], u64 n)
{
    s64 acc = 0;
    s64 p;
    u32 i;

    if (n == 0)
        return 0;
    for (i = 0; i < 256; i++) {
        p = (s64)(((hist[i] << 16) + (n >> 1)) / n);
        if (p <= 0)
            continue;
        acc = fx_add(acc, fx_mul(p, fx_log2(p)));
    }
    acc = fx_sub(0, acc);
    if (acc < 0)
        acc = 0;
    if (acc > (8LL << 16))
        acc = 8LL << 16;
    return acc;
}
"""

_FX_CHI2 = """\
static __always_inline s64 fx_chi2(const u64 hist[256], u64 n)
{
    u64 s = 0;
    u64 q;
    u64 r;
    s64 acc;
    u32 i;

    if (n == 0)
        return 0;
    for (i = 0; i < 256; i++)
        s = s + hist[i] * hist[i];
    s = s << 8;
    q = s / n;
    r = s - q * n;
    acc = (s64)((q << 16) + ((r << 16) / n)) - (s64)(n << 16);
    if (acc < 0)
        acc = 0;
    return acc;
}
"""


def _c_int(v):
    v = int(v)
    if v == FX_MIN:
        return "(-9223372036854775807LL - 1)"
    return f"{v}LL"


def _c_array(name, ctype, values, fmt, per_line=8):
    vals = [fmt(v) for v in values]
    lines = [f"static const {ctype} {name}[{len(vals)}] = {{"]
    for i in range(0, len(vals), per_line):
        lines.append("    " + ", ".join(vals[i : i + per_line]) + ",")
    lines.append("};")
    return "\n".join(lines)


def _c_array2(name, ctype, mat, fmt):
    lines = [f"static const {ctype} {name}[{mat.shape[0]}][{mat.shape[1]}] = {{"]
    for row in mat:
        lines.append("    { " + ", ".join(fmt(v) for v in row) + " },")
    lines.append("};")
    return "\n".join(lines)


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_MAP_PRELUDE = """\
struct ebpfml_params_map;
extern struct ebpfml_params_map ebpfml_params;
extern void *bpf_map_lookup_elem(void *map, const void *key);
"""

_MAP_LOOKUP = """\
    p = (const s64 *)bpf_map_lookup_elem((void *)&ebpfml_params, (const void *)&key);
    if (!p)
        return -1;
"""


def _emit_tree(fm, mode):
    p = pack_tree(fm)
    depth = p["depth"]
    body = []
    if mode == EmitMode.RODATA:
        arrays = "\n".join(
            [
                _c_array("tree_feature", "s32", p["feature"], lambda v: str(int(v))),
                _c_array("tree_threshold", "s64", p["threshold"], _c_int),
                _c_array("tree_left", "u32", p["left"], lambda v: str(int(v))),
                _c_array("tree_right", "u32", p["right"], lambda v: str(int(v))),
                _c_array("tree_leaf", "s64", p["leaf"], _c_int),
            ]
        )
        if depth == 0:
            body = [
                "s32 classify(const s64 features[12])",
                "{",
                "    return (s32)(tree_leaf[0] >= TREE_DECISION_THRESHOLD);",
                "}",
            ]
        else:
            body = [
                "s32 classify(const s64 features[12])",
                "{",
                "    s64 x[16];",
                "    u32 node = 0;",
                "    u32 d;",
                "    s32 f;",
                "",
                "    for (d = 0; d < 12; d++)",
                "        x[d] = features[d];",
                "    for (d = 12; d < 16; d++)",
                "        x[d] = 0;",
                "    for (d = 0; d < TREE_DEPTH; d++) {",
                "        f = tree_feature[node & TREE_NODE_MASK];",
                "        if (f < 0)",
                "            break;",
                "        if (x[f & 15] <= tree_threshold[node & TREE_NODE_MASK])",
                "            node = tree_left[node & TREE_NODE_MASK];",
                "        else",
                "            node = tree_right[node & TREE_NODE_MASK];",
                "    }",
                "    return (s32)(tree_leaf[node & TREE_NODE_MASK] >= TREE_DECISION_THRESHOLD);",
                "}",
            ]
        sections = [arrays, "\n".join(body)]
    else:
        layout, _ = blob_layout(fm)
        offs = {e["name"]: e["offset_words"] for e in layout}
        defines = "\n".join(
            f"#define TREE_OFF_{name.upper()} {offs[name]}"
            for name in ["feature", "threshold", "left", "right", "leaf"]
        )
        if depth == 0:
            body = [
                "s32 classify(const s64 features[12])",
                "{",
                "    u32 key = 0;",
                "    const s64 *p;",
                "",
                _MAP_LOOKUP.rstrip("\n"),
                "    return (s32)(p[TREE_OFF_LEAF] >= TREE_DECISION_THRESHOLD);",
                "}",
            ]
        else:
            body = [
                "s32 classify(const s64 features[12])",
                "{",
                "    s64 x[16];",
                "    u32 node = 0;",
                "    u32 d;",
                "    s64 f;",
                "    u32 key = 0;",
                "    const s64 *p;",
                "",
                _MAP_LOOKUP.rstrip("\n"),
                "    for (d = 0; d < 12; d++)",
                "        x[d] = features[d];",
                "    for (d = 12; d < 16; d++)",
                "        x[d] = 0;",
                "    for (d = 0; d < TREE_DEPTH; d++) {",
                "        f = p[TREE_OFF_FEATURE + (node & TREE_NODE_MASK)];",
                "        if (f < 0)",
                "            break;",
                "        if (x[f & 15] <= p[TREE_OFF_THRESHOLD + (node & TREE_NODE_MASK)])",
                "            node = (u32)p[TREE_OFF_LEFT + (node & TREE_NODE_MASK)];",
                "        else",
                "            node = (u32)p[TREE_OFF_RIGHT + (node & TREE_NODE_MASK)];",
                "    }",
                "    return (s32)(p[TREE_OFF_LEAF + (node & TREE_NODE_MASK)] >= TREE_DECISION_THRESHOLD);",
                "}",
            ]
        sections = [_MAP_PRELUDE.rstrip("\n"), defines, "\n".join(body)]
    defines = "\n".join(
        [
            f"#define TREE_NODES {p['padded']}",
            f"#define TREE_NODE_MASK {p['mask']}",
            f"#define TREE_DEPTH {depth}",
            f"#define TREE_DECISION_THRESHOLD {_c_int(fm.decision_threshold_logit)}",
        ]
    )
    return [defines] + sections, depth


def _emit_mlp(fm, mode):
    (w1, b1, _), (w2, b2, _) = fm.layers
    defines = f"#define MLP_DECISION_THRESHOLD {_c_int(fm.decision_threshold_logit)}"
    helpers = _FX_DEFINES.rstrip("\n") + "\n" + _FX_ADD.rstrip("\n") + "\n" + _FX_MUL.rstrip("\n")
    if mode == EmitMode.RODATA:
        arrays = "\n".join(
            [
                _c_array2("mlp_w1", "s64", w1, _c_int),
                _c_array("mlp_b1", "s64", b1, _c_int),
                _c_array("mlp_w2", "s64", w2.reshape(-1), _c_int),
                _c_array("mlp_b2", "s64", b2, _c_int),
            ]
        )
        body = [
            "s32 classify(const s64 features[12])",
            "{",
            "    s64 h[8];",
            "    s64 acc;",
            "    u32 i;",
            "    u32 j;",
            "",
            "    for (i = 0; i < 8; i++) {",
            "        acc = mlp_b1[i];",
            "        for (j = 0; j < 12; j++)",
            "            acc = fx_add(acc, fx_mul(mlp_w1[i][j], features[j]));",
            "        h[i] = (acc > 0) ? acc : 0;",
            "    }",
            "    acc = mlp_b2[0];",
            "    for (i = 0; i < 8; i++)",
            "        acc = fx_add(acc, fx_mul(mlp_w2[i], h[i]));",
            "    return (s32)(acc >= MLP_DECISION_THRESHOLD);",
            "}",
        ]
        sections = [defines, arrays, helpers, "\n".join(body)]
    else:
        layout, _ = blob_layout(fm)
        offs = {e["name"]: e["offset_words"] for e in layout}
        off_defines = "\n".join(
            [
                f"#define MLP_OFF_W1 {offs['w1']}",
                f"#define MLP_OFF_B1 {offs['b1']}",
                f"#define MLP_OFF_W2 {offs['w2']}",
                f"#define MLP_OFF_B2 {offs['b2']}",
            ]
        )
        body = [
            "s32 classify(const s64 features[12])",
            "{",
            "    s64 h[8];",
            "    s64 acc;",
            "    u32 i;",
            "    u32 j;",
            "    u32 key = 0;",
            "    const s64 *p;",
            "",
            _MAP_LOOKUP.rstrip("\n"),
            "    for (i = 0; i < 8; i++) {",
            "        acc = p[MLP_OFF_B1 + i];",
            "        for (j = 0; j < 12; j++)",
            "            acc = fx_add(acc, fx_mul(p[MLP_OFF_W1 + i * 12 + j], features[j]));",
            "        h[i] = (acc > 0) ? acc : 0;",
            "    }",
            "    acc = p[MLP_OFF_B2];",
            "    for (i = 0; i < 8; i++)",
            "        acc = fx_add(acc, fx_mul(p[MLP_OFF_W2 + i], h[i]));",
            "    return (s32)(acc >= MLP_DECISION_THRESHOLD);",
            "}",
        ]
        sections = [defines, _MAP_PRELUDE.rstrip("\n"), off_defines, helpers, "\n".join(body)]
    return sections


def emit(fm, mode=EmitMode.RODATA):
    """Render a FixedModel as a restricted-C translation unit + manifest.

    Deterministic: identical model and mode produce identical bytes.
    """
    if isinstance(mode, str):
        mode = EmitMode(mode)
    fm.validate()
    model_digest = _digest(dumps_model(fm, decision_threshold=fm.decision_threshold))
    if fm.kind == "tree":
        n = len(fm.tree["feature"])
        depth = int(fm.tree["max_depth"])
        if n > MAX_NODES:
            raise EmitError(f"tree has {n} nodes, budget is {MAX_NODES}")
        if depth > MAX_DEPTH:
            raise EmitError(f"tree depth {depth} exceeds budget {MAX_DEPTH}")
        sections, loop_bound = _emit_tree(fm, mode)
        packed = pack_tree(fm)
        extra = {
            "node_count": n,
            "padded_nodes": packed["padded"],
            "node_mask": packed["mask"],
            "loop_bound": loop_bound,
            # conservative static operation count: per-level node step plus
            # the gather prologue and epilogue
            "est_insn_bound": 40 + 16 * loop_bound + (10 if mode == EmitMode.MAP_LOADED else 0),
        }
    else:
        sections = _emit_mlp(fm, mode)
        extra = {
            "loop_bound": 1,
            "est_insn_bound": 8 * (2 + 12 * 45) + 24 + 8 * 45 + 30,
        }
    layout, words = blob_layout(fm)
    manifest = {
        "schema": 1,
        "generator": "ebpfml",
        "kind": fm.kind,
        "mode": mode.value,
        "q_format": fm.q_format,
        "decision_threshold": fm.decision_threshold,
        "decision_threshold_logit": int(fm.decision_threshold_logit),
        "model_digest": model_digest,
        "blob": {
            "words": words,
            "byte_size": words * 8,
            "word_type": "s64 little-endian",
            "layout": layout,
        },
        "kernel_layouts": {
            "state_record": {"size": STATE_RECORD_SIZE, "fields": STATE_RECORD_LAYOUT},
            "verdict_record": {"size": VERDICT_RECORD_SIZE, "fields": VERDICT_RECORD_LAYOUT},
            "params_map": {
                "name": "ebpfml_params",
                "type": "array",
                "max_entries": 1,
                "key": "u32",
                "value_bytes": words * 8,
            },
        },
        "classify": {
            "signature": "s32 classify(const s64 features[12])",
            "returns": "1 malicious, 0 benign" + (", -1 params unavailable" if mode == EmitMode.MAP_LOADED else ""),
        },
    }
    manifest.update(extra)
    manifest_digest = _digest(_canonical_json(manifest))
    preamble = "\n".join(
        [
            "/* generated fixed-point inference unit",
            f" * kind: {fm.kind}  mode: {mode.value}  format: {fm.q_format}",
            f" * model-digest: sha256:{model_digest}",
            f" * manifest-digest: sha256:{manifest_digest}",
            " */",
        ]
    )
    source = "\n".join([preamble, _TYPEDEFS.rstrip("\n")] + sections) + "\n"
    manifest["manifest_digest"] = manifest_digest
    manifest["source_digest"] = _digest(source)
    manifest["stack_bytes_est"] = estimate_stack(source)
    return GeneratedSource(source_text=source, manifest=manifest)


def support_source():
    """Fixed-point runtime support block (helpers + log2 table + entropy/chi2).

    Consumed by the kernel-side skeleton; include-guarded so it can coexist
    with an emitted MLP unit in one translation unit.
    """
    parts = [
        "/* fixed-point runtime support (Q47.16) */",
        _TYPEDEFS.rstrip("\n"),
        _FX_DEFINES.rstrip("\n"),
        "#ifndef EBPFML_FX_HELPERS_DEFINED",
        "#define EBPFML_FX_HELPERS_DEFINED",
        _FX_ADD.rstrip("\n"),
        _FX_SUB.rstrip("\n"),
        _FX_MUL.rstrip("\n"),
        log2_lut_c_block().rstrip("\n"),
        _FX_LOG2.rstrip("\n"),
        _FX_ENTROPY.rstrip("\n"),
        _FX_CHI2.rstrip("\n"),
        "#endif",
    ]
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# generated-code interpreter


def make_interpreter(fm, mode=EmitMode.RODATA):
    """Prepared single-input callable replaying the emitted code's exact
    integer operation sequence.  Parameter arrays are packed once here, so
    per-call cost is the inference alone.

    For MAP_LOADED the parameters are first packed to the blob and read back
    through the manifest layout, so blob packing is covered too.
    """
    if isinstance(mode, str):
        mode = EmitMode(mode)
    if fm.kind == "tree":
        packed = pack_tree(fm)
        if mode == EmitMode.MAP_LOADED:
            b = unpack_blob(fm, pack_blob(fm))
            arrs = (b["feature"], b["threshold"], b["left"], b["right"], b["leaf"])
        else:
            arrs = (
                packed["feature"], packed["threshold"], packed["left"],
                packed["right"], packed["leaf"],
            )
        feature, thr, left, right, leaf = (np.ascontiguousarray(a) for a in arrs)
        mask, depth = packed["mask"], packed["depth"]
        thresh = fm.decision_threshold_logit
        interp_one = _kernels.tree_interp_one

        def run(x):
            return int(interp_one(feature, thr, left, right, leaf, mask, depth, thresh, x))

        return run
    if mode == EmitMode.MAP_LOADED:
        b = unpack_blob(fm, pack_blob(fm))
        w1 = b["w1"].reshape(8, 12)
        b1, w2, b2 = b["b1"], b["w2"], b["b2"]
    else:
        (w1, b1, _), (w2f, b2, _) = fm.layers
        w2 = w2f.reshape(-1)
    w1, b1, w2, b2 = (np.ascontiguousarray(a) for a in (w1, b1, w2, b2))
    thresh = fm.decision_threshold_logit
    interp_one = _kernels.mlp_interp_one

    def run(x):
        return int(interp_one(w1, b1, w2, b2, thresh, x))

    return run


def interpret_generated(fm, x, mode=EmitMode.RODATA):
    """One-shot form of make_interpreter."""
    return make_interpreter(fm, mode)(np.ascontiguousarray(x, dtype=np.int64))


def interpret_generated_batch(fm, X, mode=EmitMode.RODATA):
    X = np.ascontiguousarray(X, dtype=np.int64)
    if isinstance(mode, str):
        mode = EmitMode(mode)
    if fm.kind == "tree":
        if mode == EmitMode.MAP_LOADED:
            b = unpack_blob(fm, pack_blob(fm))
            arrs = (b["feature"], b["threshold"], b["left"], b["right"], b["leaf"])
        else:
            p = pack_tree(fm)
            arrs = (p["feature"], p["threshold"], p["left"], p["right"], p["leaf"])
        packed = pack_tree(fm)
        return np.asarray(
            _kernels.tree_interp_batch(
                *[np.ascontiguousarray(a) for a in arrs],
                packed["mask"], packed["depth"], fm.decision_threshold_logit, X,
            )
        )
    if mode == EmitMode.MAP_LOADED:
        b = unpack_blob(fm, pack_blob(fm))
        w1, b1, w2, b2 = b["w1"].reshape(8, 12), b["b1"], b["w2"], b["b2"]
    else:
        (w1, b1, _), (w2f, b2, _) = fm.layers
        w2 = w2f.reshape(-1)
    return np.asarray(
        _kernels.mlp_interp_batch(
            np.ascontiguousarray(w1), np.ascontiguousarray(b1),
            np.ascontiguousarray(w2), np.ascontiguousarray(b2),
            fm.decision_threshold_logit, X,
        )
    )


# ---------------------------------------------------------------------------
# restricted-C linter


_TYPE_WORDS = {"s8", "s16", "s32", "s64", "u8", "u16", "u32", "u64", "void", "int", "char", "short", "long", "unsigned", "signed"}
_QUALIFIERS = {"static", "const", "extern", "inline", "__always_inline", "struct", "register", "volatile"}
_NOT_CALLS = {"if", "for", "return", "sizeof", "switch", "defined", "__attribute__", "while", "do", "goto", "else"}

_FLOAT_TYPE_RE = re.compile(r"(?<![\w.])(?:float|double)(?![\w])")
_FP_LITERAL_RE = re.compile(
    r"(?<![\w.])(?:"
    r"\d+\.\d*(?:[eE][+-]?\d+)?"
    r"|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+[eE][+-]?\d+"
    r"|0[xX][0-9a-fA-F]+(?:\.[0-9a-fA-F]*)?[pP][+-]?\d+"
    r")[fFlL]*"
)
_WHILE_GOTO_RE = re.compile(r"(?<!\w)(while|goto)(?!\w)")
_DO_RE = re.compile(r"(?<!\w)do(?=\s*[\{\s])(?!\w)")
_DEFINE_RE = re.compile(r"^[ \t]*#[ \t]*define[ \t]+(\w+)(\()?", re.MULTILINE)
_ARRAY_DECL_RE = re.compile(
    r"(?:(?:static|const|extern)\s+)*(?:[us](?:8|16|32|64)|int|char)\s+(\w+)\s*\[(\w+)\]\s*(?:\[(\w+)\])?"
)
_INT_LIT_RE = re.compile(r"^[+-]?(?:0[xX][0-9a-fA-F]+|\d+)(?:[uU]?[lL]{0,2}|[lL]{1,2}[uU]?)$")
_FOR_INIT_RE = re.compile(r"^(?:(?:[us](?:8|16|32|64)|int)\s+)?(\w+)\s*=\s*(\w+)$")
_FOR_COND_RE = re.compile(r"^(\w+)\s*(<=|<)\s*(\w+)$")
_FOR_STEP_RE = re.compile(r"^(?:(\w+)\+\+|\+\+(\w+)|(\w+)\s*\+=\s*1)$")


def _strip_comments(src):
    out = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c == "/" and i + 1 < n and src[i + 1] == "*":
            end = src.find("*/", i + 2)
            if end < 0:
                raise LintParseError("unterminated block comment")
            for ch in src[i : end + 2]:
                out.append("\n" if ch == "\n" else " ")
            i = end + 2
        elif c == "/" and i + 1 < n and src[i + 1] == "/":
            end = src.find("\n", i)
            if end < 0:
                end = n
            out.append(" " * (end - i))
            i = end
        elif c == '"' or c == "'":
            end = i + 1
            while end < n and src[end] != c:
                end += 2 if src[end] == "\\" else 1
            if end >= n:
                raise LintParseError("unterminated string literal")
            out.append(src[i : end + 1])
            i = end + 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _line_of(text, pos):
    return text.count("\n", 0, pos) + 1


def _match_paren(text, open_pos, open_ch="(", close_ch=")"):
    depth = 0
    for i in range(open_pos, len(text)):
        if text[i] == open_ch:
            depth += 1
        elif text[i] == close_ch:
            depth -= 1
            if depth == 0:
                return i
    raise LintParseError(f"unbalanced {open_ch}{close_ch} starting at line {_line_of(text, open_pos)}")


def _int_value(tok, macros):
    tok = tok.strip()
    if tok in macros and macros[tok] is not None:
        return macros[tok]
    if _INT_LIT_RE.match(tok):
        return int(tok.rstrip("uUlL"), 0)
    return None


def _strip_casts(expr):
    expr = expr.strip()
    changed = True
    while changed:
        changed = False
        m = re.match(r"^\(\s*(?:const\s+)?(?:[us](?:8|16|32|64)|int|void)\s*\*?\s*\)\s*", expr)
        if m:
            expr = expr[m.end() :]
            changed = True
        if expr.startswith("(") and expr.endswith(")"):
            if _match_paren(expr, 0) == len(expr) - 1:
                expr = expr[1:-1].strip()
                changed = True
    return expr


def _split_top(expr, sep):
    parts = []
    depth = 0
    cur = []
    i = 0
    while i < len(expr):
        c = expr[i]
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        if depth == 0 and expr.startswith(sep, i) and (len(sep) > 1 or c == sep):
            parts.append("".join(cur))
            cur = []
            i += len(sep)
            continue
        cur.append(c)
        i += 1
    parts.append("".join(cur))
    return parts


def _parse_defines(text):
    macros = {}
    fn_macros = set()
    for m in _DEFINE_RE.finditer(text):
        name = m.group(1)
        if m.group(2):
            fn_macros.add(name)
            continue
        line_end = text.find("\n", m.end())
        if line_end < 0:
            line_end = len(text)
        rhs = text[m.end() : line_end].strip()
        val = None
        if _INT_LIT_RE.match(rhs):
            val = int(rhs.rstrip("uUlL"), 0)
        else:
            sm = re.match(r"^\(\s*(-?\d+)(?:LL|ULL|L|UL|U)?\s*-\s*(\d+)(?:LL|ULL|L|UL|U)?\s*\)$", rhs)
            if sm:
                val = int(sm.group(1)) - int(sm.group(2))
            else:
                pm = re.match(r"^\(\s*(-?\d+)(?:LL|ULL|L|UL|U)?\s*\)$", rhs)
                if pm:
                    val = int(pm.group(1))
        macros[name] = val
    return macros, fn_macros


def _collect_functions(text):
    """(name, params_str, body_start, body_end) for each definition."""
    fns = []
    for m in re.finditer(r"\b(\w+)\s*\(", text):
        name = m.group(1)
        if name in _NOT_CALLS or name in _TYPE_WORDS:
            continue
        close = _match_paren(text, m.end() - 1)
        j = close + 1
        while j < len(text) and text[j] in " \t\n":
            j += 1
        if j < len(text) and text[j] == "{":
            line_start = text.rfind("\n", 0, m.start()) + 1
            prefix = text[line_start : m.start()].strip()
            words = set(re.findall(r"\w+", prefix))
            if words & (_TYPE_WORDS | _QUALIFIERS):
                body_end = _match_paren(text, j, "{", "}")
                fns.append((name, text[m.end() : close], j, body_end))
    return fns


def _collect_arrays(text, macros):
    arrays = {}
    for m in _ARRAY_DECL_RE.finditer(text):
        name = m.group(1)
        d0 = _int_value(m.group(2), macros)
        dims = [d0]
        if m.group(3):
            dims.append(_int_value(m.group(3), macros))
        if all(d is not None for d in dims):
            arrays[name] = dims
    return arrays


def _index_bound(expr, loops_at, macros, pos):
    """Upper bound (inclusive) provable for an index expression, else None."""
    expr = _strip_casts(expr)
    amps = _split_top(expr, "&")
    if len(amps) == 2:
        mv = _int_value(_strip_casts(amps[1]), macros)
        if mv is None:
            mv = _int_value(_strip_casts(amps[0]), macros)
        if mv is not None and mv >= 0 and (mv & (mv + 1)) == 0:
            return mv
        return None
    total = 0
    for addend in _split_top(expr, "+"):
        addend = _strip_casts(addend)
        amps = _split_top(addend, "&")
        if len(amps) == 2:
            mv = _int_value(_strip_casts(amps[1]), macros)
            if mv is None:
                mv = _int_value(_strip_casts(amps[0]), macros)
            if mv is not None and mv >= 0 and (mv & (mv + 1)) == 0:
                total += mv
                continue
            return None
        v = _int_value(addend, macros)
        if v is not None:
            if v < 0:
                return None
            total += v
            continue
        factors = _split_top(addend, "*")
        if len(factors) == 1:
            var = addend.strip()
            bound = _lookup_loop(loops_at, var, pos)
            if bound is None:
                return None
            total += bound - 1
            continue
        if len(factors) == 2:
            a, b = (_strip_casts(f) for f in factors)
            va, vb = _int_value(a, macros), _int_value(b, macros)
            if va is not None and vb is None:
                va, vb, a, b = vb, va, b, a
            if vb is None or vb < 0:
                return None
            bound = _lookup_loop(loops_at, a, pos)
            if bound is None:
                return None
            total += (bound - 1) * vb
            continue
        return None
    return total


def _lookup_loop(loops_at, var, pos):
    best = None
    for lpos, lvar, bound in loops_at:
        if lvar == var and lpos < pos:
            best = bound
    return best


_ELEM_SIZE = {"s8": 1, "u8": 1, "s16": 2, "u16": 2, "s32": 4, "u32": 4, "s64": 8, "u64": 8, "int": 4, "char": 1, "void": 0}

# declarations start a line or follow ; or { (one-line bodies are legal input)
_LOCAL_DECL_RE = re.compile(
    r"(?:^|(?<=[;{]))\s*(?:const\s+)?([us](?:8|16|32|64)|int|char|void)\s+(\*?)\s*(\w+)\s*(?:\[(\w+)\])?\s*(?:=[^;]*)?;",
    re.MULTILINE,
)


def estimate_stack(src):
    """Worst-case stack byte estimate: sum of local declarations across all
    functions (assumes every helper inlined into one frame)."""
    text = _strip_comments(src)
    macros, _ = _parse_defines(text)
    total = 0
    for _, params, body_start, body_end in _collect_functions(text):
        body = text[body_start : body_end + 1]
        for m in _LOCAL_DECL_RE.finditer(body):
            ctype, ptr, _, dim = m.group(1), m.group(2), m.group(3), m.group(4)
            if ptr:
                total += 8
            elif dim:
                d = _int_value(dim, macros)
                total += (d if d is not None else 1) * _ELEM_SIZE[ctype]
            else:
                total += _ELEM_SIZE[ctype]
    return total


def lint_restricted(src):
    """Check source text against the verifier-shaped subset.

    Returns a list of violation dicts {rule, line, detail}; empty means the
    unit passes.  Raises LintParseError when the text cannot be scanned
    (unbalanced comments, braces, or parentheses).
    """
    text = _strip_comments(src)
    if text.count("{") != text.count("}"):
        raise LintParseError("unbalanced braces")
    if text.count("(") != text.count(")"):
        raise LintParseError("unbalanced parentheses")

    violations = []

    def flag(rule, pos, detail):
        violations.append({"rule": rule, "line": _line_of(text, pos), "detail": detail})

    # preprocessor lines are handled separately; mask them for token scans
    scan = re.sub(r"^[ \t]*#[^\n]*", lambda m: " " * len(m.group(0)), text, flags=re.MULTILINE)

    for m in _FLOAT_TYPE_RE.finditer(scan):
        flag("float-type", m.start(), f"floating-point type '{m.group(0)}'")
    for m in _FP_LITERAL_RE.finditer(scan):
        flag("float-literal", m.start(), f"floating-point literal '{m.group(0)}'")
    for m in _WHILE_GOTO_RE.finditer(scan):
        flag("unbounded-loop" if m.group(1) == "while" else "goto", m.start(), f"'{m.group(1)}' is not allowed")
    for m in _DO_RE.finditer(scan):
        flag("unbounded-loop", m.start(), "'do' loop is not allowed")

    macros, fn_macros = _parse_defines(text)
    fns = _collect_functions(scan)
    fn_names = {f[0] for f in fns}
    fn_spans = [(f[2], f[3]) for f in fns]
    arrays = _collect_arrays(scan, macros)

    # for-loop headers: literal init, literal exclusive bound, ++ step
    loops_at = []
    for m in re.finditer(r"\bfor\s*\(", scan):
        close = _match_paren(scan, m.end() - 1)
        parts = _split_top(scan[m.end() : close], ";")
        if len(parts) != 3:
            flag("unbounded-loop", m.start(), "for-loop header must have three clauses")
            continue
        init, cond, step = (p.strip() for p in parts)
        mi = _FOR_INIT_RE.match(init)
        mc = _FOR_COND_RE.match(cond)
        ms = _FOR_STEP_RE.match(step)
        if not mi or not mc or not ms:
            flag("unbounded-loop", m.start(), f"for-loop clause not in bounded form: '{init}; {cond}; {step}'")
            continue
        var = mi.group(1)
        start = _int_value(mi.group(2), macros)
        bound = _int_value(mc.group(3), macros)
        svar = ms.group(1) or ms.group(2) or ms.group(3)
        if mc.group(1) != var or svar != var:
            flag("unbounded-loop", m.start(), "for-loop clauses use mismatched variables")
            continue
        if start is None or start < 0:
            flag("unbounded-loop", m.start(), f"loop start '{mi.group(2)}' is not a literal")
            continue
        if bound is None:
            flag("unbounded-loop", m.start(), f"loop bound '{mc.group(3)}' is not a compile-time literal")
            continue
        excl = bound + 1 if mc.group(2) == "<=" else bound
        loops_at.append((m.start(), var, excl))

    # calls: only locally-defined functions, function-like macros, and the
    # map lookup helper
    allowed_calls = fn_names | fn_macros | {"bpf_map_lookup_elem"}
    for m in re.finditer(r"\b(\w+)\s*\(", scan):
        name = m.group(1)
        if name in _NOT_CALLS or name in _TYPE_WORDS or name in _QUALIFIERS:
            continue
        close = _match_paren(scan, m.end() - 1)
        j = close + 1
        while j < len(scan) and scan[j] in " \t\n":
            j += 1
        if j < len(scan) and scan[j] in "{;" :
            stmt_start = max(scan.rfind(c, 0, m.start()) for c in "\n;{}") + 1
            before = scan[stmt_start : m.start()]
            prefix = set(re.findall(r"\w+", before))
            if "=" not in before and prefix & (_TYPE_WORDS | _QUALIFIERS):
                continue  # definition or declaration, not a call
        if name not in allowed_calls:
            flag("helper-call", m.start(), f"call to '{name}' (not locally defined)")

    # array indexing: every subscript must have a provable in-range bound
    decl_spans = [(dm.start(), dm.end()) for dm in _ARRAY_DECL_RE.finditer(scan)]
    for m in re.finditer(r"\b(\w+)\s*\[", scan):
        name = m.group(1)
        if name in _TYPE_WORDS or name in _QUALIFIERS:
            continue
        if any(s <= m.start() < e for s, e in decl_spans):
            continue
        open_b = m.end() - 1
        dims = arrays.get(name)
        pos = m.start()
        bracket = 0
        while open_b < len(scan) and scan[open_b] == "[":
            close_b = _match_paren(scan, open_b, "[", "]")
            idx_expr = scan[open_b + 1 : close_b]
            bound = _index_bound(idx_expr, loops_at, macros, pos)
            if bound is None:
                flag("unmasked-index", pos, f"index '{idx_expr.strip()}' into '{name}' has no provable bound")
            elif dims is not None and bracket < len(dims) and bound >= dims[bracket]:
                flag("out-of-range-index", pos, f"index '{idx_expr.strip()}' can reach {bound}, '{name}' has {dims[bracket]} elements")
            open_b = close_b + 1
            while open_b < len(scan) and scan[open_b] in " \t":
                open_b += 1
            bracket += 1

    stack = estimate_stack(src)
    if stack > STACK_LIMIT:
        flag("stack-budget", 0, f"estimated stack usage {stack} bytes exceeds {STACK_LIMIT}")

    violations.sort(key=lambda v: (v["line"], v["rule"]))
    return violations
