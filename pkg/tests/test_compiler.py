import numpy as np
import pytest

from ebpfml.compiler import (
    MAX_DEPTH,
    MAX_NODES,
    EmitError,
    EmitMode,
    LintParseError,
    QuantizationError,
    blob_layout,
    emit,
    estimate_stack,
    interpret_generated,
    interpret_generated_batch,
    lint_restricted,
    make_interpreter,
    pack_blob,
    pack_tree,
    quantize,
    support_source,
    unpack_blob,
)
from ebpfml.fixedpoint import FX_MIN, FX_ONE
from ebpfml.models import (
    LEAF,
    MlpModel,
    TreeModel,
    mlp_logit_fixed,
    tree_predict_fixed,
)

from util import comb_tree_97, random_mlp_model, random_tree_model


def tiny_tree():
    return TreeModel(
        feature=np.array([0, LEAF, LEAF], dtype=np.int64),
        threshold=np.array([2.5, 0.0, 0.0]),
        left=np.array([1, 1, 2], dtype=np.int64),
        right=np.array([2, 1, 2], dtype=np.int64),
        leaf_value=np.array([0.0, 0.1, 0.9]),
        max_depth=1,
    ).validate()


def rules_of(violations):
    return [v["rule"] for v in violations]


# ---------------------------------------------------------------------------
# quantization


def test_quantize_tree_values():
    fm = quantize(tiny_tree())
    assert fm.kind == "tree"
    assert fm.tree["threshold_raw"][0] == int(round(2.5 * FX_ONE))
    assert fm.decision_threshold_logit == FX_ONE // 2


def test_quantize_mlp_threshold_is_logit():
    mlp = MlpModel(layers=[(np.zeros((8, 12)), np.zeros(8), "relu"),
                           (np.zeros((1, 8)), np.zeros(1), "identity")]).validate()
    fm = quantize(mlp, t=0.5)
    assert fm.decision_threshold_logit == 0
    fm9 = quantize(mlp, t=0.9)
    assert fm9.decision_threshold_logit > 0


def test_quantize_error_names_offending_parameter():
    tree = tiny_tree()
    tree.threshold[0] = float("nan")
    with pytest.raises(QuantizationError) as ei:
        quantize(tree)
    assert "threshold" in str(ei.value)

    mlp = MlpModel(layers=[(np.zeros((8, 12)), np.zeros(8), "relu"),
                           (np.zeros((1, 8)), np.zeros(1), "identity")]).validate()
    mlp.layers[0][0][2, 3] = 1e18  # magnitude beyond the representable range
    with pytest.raises(QuantizationError) as ei:
        quantize(mlp)
    assert "w1" in str(ei.value)


def test_quantize_node_budget():
    # complete heap-shaped tree of depth 13: 16383 nodes, depth within limits
    depth = 13
    n = (1 << (depth + 1)) - 1
    internal = (1 << depth) - 1
    feature = np.full(n, LEAF, dtype=np.int64)
    feature[:internal] = np.arange(internal) % 12
    threshold = np.zeros(n)
    left = np.arange(n, dtype=np.int64)
    right = np.arange(n, dtype=np.int64)
    idx = np.arange(internal)
    left[:internal] = 2 * idx + 1
    right[:internal] = 2 * idx + 2
    wide = TreeModel(feature=feature, threshold=threshold, left=left,
                     right=right, leaf_value=np.zeros(n), max_depth=depth).validate()
    assert wide.n_nodes > MAX_NODES
    with pytest.raises(EmitError):
        emit(quantize(wide), EmitMode.RODATA)


def test_quantize_depth_budget():
    d = MAX_DEPTH + 2
    n = 2 * d + 1
    feature = np.full(n, LEAF, dtype=np.int64)
    threshold = np.zeros(n)
    left = np.arange(n, dtype=np.int64)
    right = np.arange(n, dtype=np.int64)
    for i in range(0, n - 2, 2):
        feature[i] = 0
        threshold[i] = float(i)
        left[i] = i + 1
        right[i] = i + 2
    deep = TreeModel(feature=feature, threshold=threshold, left=left,
                     right=right, leaf_value=np.zeros(n), max_depth=d).validate()
    with pytest.raises(EmitError):
        emit(quantize(deep), EmitMode.RODATA)


# ---------------------------------------------------------------------------
# packing


def test_pack_tree_pads_to_power_of_two():
    fm = quantize(tiny_tree())
    t = pack_tree(fm)
    assert t["feature"].shape[0] == 4
    assert t["mask"] == 3 and t["padded"] == 4
    # padding nodes are self-looping leaves
    assert t["left"][3] == 3 and t["right"][3] == 3


def test_blob_round_trip_tree():
    fm = quantize(tiny_tree())
    blob = pack_blob(fm)
    _, words = blob_layout(fm)
    assert len(blob) == words * 8
    back = unpack_blob(fm, blob)
    t = pack_tree(fm)
    for name in ("feature", "threshold", "left", "right", "leaf"):
        assert (back[name] == t[name]).all()


def test_blob_round_trip_mlp(rng):
    fm = quantize(random_mlp_model(rng))
    blob = pack_blob(fm)
    assert len(blob) == 113 * 8
    back = unpack_blob(fm, blob)
    assert (back["w1"] == fm.layers[0][0].reshape(-1)).all()
    assert (back["b2"] == fm.layers[1][1]).all()


def test_mlp_blob_layout_offsets(rng):
    fm = quantize(random_mlp_model(rng))
    layout, words = blob_layout(fm)
    assert words == 113
    names = {e["name"]: e for e in layout}
    assert names["w1"]["offset_words"] == 0 and names["w1"]["len_words"] == 96
    assert names["b1"]["offset_words"] == 96
    assert names["w2"]["offset_words"] == 104
    assert names["b2"]["offset_words"] == 112


# ---------------------------------------------------------------------------
# emission


def test_emit_is_byte_deterministic(rng):
    fm = quantize(random_tree_model(rng))
    a = emit(fm, EmitMode.RODATA)
    b = emit(fm, EmitMode.RODATA)
    assert a.source_text == b.source_text
    assert a.manifest == b.manifest


def test_emit_modes_differ():
    fm = quantize(tiny_tree())
    ro = emit(fm, EmitMode.RODATA)
    ml = emit(fm, EmitMode.MAP_LOADED)
    assert ro.source_text != ml.source_text
    assert ro.manifest["mode"] == "rodata"
    assert ml.manifest["mode"] == "maploaded"


def test_rodata_tree_source_shape():
    src = emit(quantize(tiny_tree()), EmitMode.RODATA).source_text
    assert "static const s32 tree_feature[" in src
    assert "node & TREE_NODE_MASK" in src
    assert "f & 15" in src or "f & 15u" in src
    assert src.count("\ns32 classify") == 1
    # one trailing return, no early returns inside the walk
    body = src.split("classify", 1)[1]
    assert body.count("return") == 1


def test_maploaded_source_shape():
    src = emit(quantize(tiny_tree()), EmitMode.MAP_LOADED).source_text
    assert "bpf_map_lookup_elem" in src
    assert "if (!p)\n        return -1;" in src
    assert "TREE_OFF_FEATURE" in src
    assert "extern struct ebpfml_params_map ebpfml_params;" in src


def test_maploaded_mlp_offsets(rng):
    src = emit(quantize(random_mlp_model(rng)), EmitMode.MAP_LOADED).source_text
    assert "MLP_OFF_W1" in src and "MLP_OFF_B2" in src


def test_single_leaf_tree_has_no_loop():
    tree = TreeModel(
        feature=np.array([LEAF], dtype=np.int64),
        threshold=np.array([0.0]),
        left=np.array([0], dtype=np.int64),
        right=np.array([0], dtype=np.int64),
        leaf_value=np.array([0.9]),
        max_depth=0,
    ).validate()
    gs = emit(quantize(tree), EmitMode.RODATA)
    assert "for (" not in gs.source_text.split("classify", 1)[1]
    assert gs.manifest["loop_bound"] == 0


def test_fx_min_literal_is_negation_safe():
    # INT64_MIN cannot be written as a plain literal in C
    mlp = MlpModel(layers=[(np.zeros((8, 12)), np.zeros(8), "relu"),
                           (np.zeros((1, 8)), np.zeros(1), "identity")]).validate()
    fm = quantize(mlp)
    w2, _, act = fm.layers[1]
    fm.layers[1] = (w2, np.array([FX_MIN], dtype=np.int64), act)
    src = emit(fm, EmitMode.RODATA).source_text
    assert "(-9223372036854775807LL - 1)" in src
    assert "-9223372036854775808" not in src


def test_manifest_loop_bound_is_depth():
    model = comb_tree_97()
    fm = quantize(model)
    man = emit(fm, EmitMode.RODATA).manifest
    assert man["node_count"] == 97
    assert man["loop_bound"] == fm.tree["max_depth"]
    assert man["node_mask"] == man["padded_nodes"] - 1


def test_manifest_digest_excludes_itself():
    fm = quantize(tiny_tree())
    man = emit(fm, EmitMode.RODATA).manifest
    import hashlib
    import json

    skip = ("manifest_digest", "source_digest", "stack_bytes_est")
    probe = {k: v for k, v in man.items() if k not in skip}
    blob = json.dumps(probe, sort_keys=True, separators=(",", ":")).encode()
    assert hashlib.sha256(blob).hexdigest() == man["manifest_digest"]


def test_manifest_model_digest_tracks_model(rng):
    a = quantize(random_tree_model(rng))
    b = quantize(random_tree_model(rng))
    assert emit(a, EmitMode.RODATA).manifest["model_digest"] != \
        emit(b, EmitMode.RODATA).manifest["model_digest"]


# ---------------------------------------------------------------------------
# generated-path interpretation


def test_interpret_matches_fixed_tree(rng):
    for _ in range(20):
        tree = random_tree_model(rng)
        fm = quantize(tree)
        run = make_interpreter(fm, EmitMode.RODATA)
        for _ in range(20):
            x = rng.integers(-(1 << 24), 1 << 24, size=12).astype(np.int64)
            assert run(x) == tree_predict_fixed(fm, x)[1]


def test_interpret_matches_fixed_mlp(rng):
    for _ in range(10):
        fm = quantize(random_mlp_model(rng))
        run = make_interpreter(fm, EmitMode.MAP_LOADED)
        for _ in range(20):
            x = rng.integers(-(8 << 16), 8 << 16, size=12).astype(np.int64)
            want = int(mlp_logit_fixed(fm, x) >= fm.decision_threshold_logit)
            assert run(x) == want


def test_interpret_one_shot_and_batch(rng):
    fm = quantize(tiny_tree())
    X = rng.integers(-(1 << 20), 1 << 20, size=(50, 12)).astype(np.int64)
    batch = interpret_generated_batch(fm, X, EmitMode.RODATA)
    for i in range(50):
        assert batch[i] == interpret_generated(fm, X[i], EmitMode.RODATA)


# ---------------------------------------------------------------------------
# linter


def test_lint_emitted_sources_clean(rng):
    for _ in range(10):
        for model in (random_tree_model(rng), random_mlp_model(rng)):
            for mode in (EmitMode.RODATA, EmitMode.MAP_LOADED):
                src = emit(quantize(model), mode).source_text
                assert lint_restricted(src) == []


def test_lint_support_source_clean():
    assert lint_restricted(support_source()) == []


def test_lint_float_type():
    v = lint_restricted("static s32 f(void) { double x = 0; return 0; }")
    assert rules_of(v) == ["float-type"]
    v = lint_restricted("static s32 f(void) { float x = 0; return 0; }")
    assert rules_of(v) == ["float-type"]


def test_lint_float_literal():
    v = lint_restricted("static s64 f(void) { s64 x = 1; x = x + 2; return 0; }")
    assert v == []
    v = lint_restricted("static s64 f(void) { s64 x = 1; return x * 3; }")
    assert v == []


def test_lint_while_is_single_violation():
    v = lint_restricted("static s32 f(s32 x) { while (x) { x = x - 1; } return x; }")
    assert rules_of(v) == ["unbounded-loop"]


def test_lint_goto():
    v = lint_restricted("static s32 f(void) { top: goto top; return 0; }")
    assert "goto" in rules_of(v)


def test_lint_helper_call():
    v = lint_restricted("static s32 f(void) { return memcpy(0, 0, 0); }")
    assert rules_of(v) == ["helper-call"]


def test_lint_allows_known_helpers():
    src = ("static s32 f(void) { void *p = bpf_map_lookup_elem(&m, &k); "
           "if (!p) return -1; return 0; }")
    assert lint_restricted(src) == []


def test_lint_unmasked_index():
    src = ("static const s64 a[8] = {0};\n"
           "static s32 f(s32 i) { return a[i]; }\n")
    v = lint_restricted(src)
    assert "unmasked-index" in rules_of(v)


def test_lint_masked_index_ok():
    src = ("static const s64 a[8] = {0};\n"
           "static s32 f(s32 i) { return a[i & 7]; }\n")
    assert lint_restricted(src) == []


def test_lint_non_pow2_mask_rejected():
    src = ("static const s64 a[8] = {0};\n"
           "static s32 f(s32 i) { return a[i & 6]; }\n")
    assert "unmasked-index" in rules_of(lint_restricted(src))


def test_lint_out_of_range_index():
    src = ("static const s64 a[4] = {0};\n"
           "static s32 f(s32 i) { return a[i & 7]; }\n"
           "static s32 g(void) { return a[5]; }\n")
    rules = rules_of(lint_restricted(src))
    assert rules.count("out-of-range-index") == 2


def test_lint_bounded_for_loop_ok():
    src = ("static s32 f(void) { s64 acc = 0; s32 i;\n"
           "for (i = 0; i < 16; i++) { acc = acc + i; }\n"
           "return (s32)acc; }\n")
    assert lint_restricted(src) == []


def test_lint_loop_without_constant_bound():
    src = ("static s32 f(s32 n) { s64 acc = 0; s32 i;\n"
           "for (i = 0; i < n; i++) { acc = acc + i; }\n"
           "return (s32)acc; }\n")
    assert "unbounded-loop" in rules_of(lint_restricted(src))


def test_lint_loopvar_index_within_bound():
    src = ("static const s64 a[16] = {0};\n"
           "static s32 f(void) { s64 acc = 0; s32 i;\n"
           "for (i = 0; i < 16; i++) { acc = acc + a[i]; }\n"
           "return (s32)acc; }\n")
    assert lint_restricted(src) == []


def test_lint_loopvar_index_exceeding_bound():
    src = ("static const s64 a[8] = {0};\n"
           "static s32 f(void) { s64 acc = 0; s32 i;\n"
           "for (i = 0; i < 16; i++) { acc = acc + a[i]; }\n"
           "return (s32)acc; }\n")
    assert "out-of-range-index" in rules_of(lint_restricted(src))


def test_lint_stack_budget():
    src = "static s32 f(void) { s64 big[80]; big[0] = 1; return (s32)big[0]; }"
    v = lint_restricted(src)
    assert "stack-budget" in rules_of(v)


def test_estimate_stack_counts_locals():
    src = "static s32 f(void) { s64 a[4]; s32 b; void *p; return 0; }"
    assert estimate_stack(src) == 4 * 8 + 4 + 8


def test_lint_parse_error_on_unbalanced():
    with pytest.raises(LintParseError):
        lint_restricted("static s32 f(void) { return 0;")
    with pytest.raises(LintParseError):
        lint_restricted("static s32 f(void) { /* nope ")


def test_lint_line_numbers_point_at_violation():
    src = "static s32 ok(void) { return 0; }\nstatic s32 f(void) { goto x; }\n"
    v = lint_restricted(src)
    assert any(d["rule"] == "goto" and d["line"] == 2 for d in v)


def test_lint_preprocessor_lines_ignored():
    src = ("#define WIDTH 16\n"
           "static const s64 a[WIDTH] = {0};\n"
           "static s32 f(void) { s64 acc = 0; s32 i;\n"
           "for (i = 0; i < WIDTH; i++) { acc = acc + a[i]; }\n"
           "return (s32)acc; }\n")
    assert lint_restricted(src) == []
