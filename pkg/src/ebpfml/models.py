"""Array-based decision tree and dense MLP inference, float and fixed-point.

Float predict is the reference semantics; the fixed-point twins run the same
control flow over Q47.16 raws using the shared kernels, so they are
bit-compatible with the generated restricted C.  Classification is
sigmoid-free: MLP logits are thresholded directly, ties classify malicious.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .features import FEATURE_NAMES, N_FEATURES

LEAF = -1
SCHEMA_VERSION = 1


class ModelFormatError(ValueError):
    """Structurally invalid model (malformed arrays, bad shapes, dangling ids)."""


# ---------------------------------------------------------------------------
# model types


@dataclass
class TreeModel:
    feature: np.ndarray  # int64, LEAF (-1) at leaves
    threshold: np.ndarray  # float64, meaningful at internal nodes
    left: np.ndarray  # int64 child ids; leaves self-reference
    right: np.ndarray
    leaf_value: np.ndarray  # float64 in [0,1], meaningful at leaves
    max_depth: int

    @property
    def n_nodes(self):
        return len(self.feature)

    def validate(self):
        n = self.n_nodes
        arrays = (self.feature, self.threshold, self.left, self.right, self.leaf_value)
        if n == 0 or any(len(a) != n for a in arrays):
            raise ModelFormatError("tree arrays empty or of unequal length")
        seen = np.zeros(n, dtype=bool)
        depth = _walk_tree(self.feature, self.left, self.right, 0, 0, seen)
        if not seen.all():
            raise ModelFormatError("tree has unreachable nodes")
        if depth != self.max_depth:
            raise ModelFormatError(
                f"max_depth {self.max_depth} != computed depth {depth}"
            )
        ok = (self.feature == LEAF) | (
            (self.feature >= 0) & (self.feature < N_FEATURES)
        )
        if not ok.all():
            raise ModelFormatError("feature indices must be LEAF or in [0, 12)")
        return self


def _walk_tree(feature, left, right, root, root_depth, seen):
    """Depth-first reachability walk; returns the max leaf depth."""
    n = len(feature)
    max_depth = 0
    stack = [(root, root_depth)]
    while stack:
        node, depth = stack.pop()
        if node < 0 or node >= n:
            raise ModelFormatError(f"child id {node} out of range")
        if seen[node]:
            raise ModelFormatError(f"node {node} referenced twice")
        seen[node] = True
        if feature[node] == LEAF:
            max_depth = max(max_depth, depth)
            continue
        l, r = int(left[node]), int(right[node])
        if l <= node or r <= node:
            raise ModelFormatError("child ids must exceed the parent id")
        stack.append((r, depth + 1))
        stack.append((l, depth + 1))
    return max_depth


@dataclass
class MlpModel:
    # layers: [(weight (out,in), bias (out,), activation)] with the fixed
    # 12 -> 8 relu -> 1 identity architecture.
    layers: list

    def validate(self):
        if len(self.layers) != 2:
            raise ModelFormatError("expected exactly two layers")
        (w1, b1, a1), (w2, b2, a2) = self.layers
        if w1.shape != (8, 12) or b1.shape != (8,):
            raise ModelFormatError(f"layer 1 must be 12->8, got {w1.shape}")
        if w2.shape != (1, 8) or b2.shape != (1,):
            raise ModelFormatError(f"layer 2 must be 8->1, got {w2.shape}")
        if a1 != "relu" or a2 != "identity":
            raise ModelFormatError("activations must be relu then identity")
        if self.param_count != 113:
            raise ModelFormatError("parameter count must be 113")
        return self

    @property
    def param_count(self):
        return sum(w.size + b.size for w, b, _ in self.layers)


@dataclass
class FixedModel:
    kind: str  # "tree" | "mlp"
    decision_threshold_logit: int  # raw Fx; for trees the leaf-value cut
    decision_threshold: float  # the configured probability t
    tree: "dict | None" = None  # feature/threshold/left/right/leaf_value raws + max_depth
    layers: "list | None" = None  # [(w_raw, b_raw, activation)]
    q_format: str = "Q47.16"

    def validate(self):
        if self.kind == "tree":
            t = self.tree
            TreeModel(
                feature=np.asarray(t["feature"], dtype=np.int64),
                threshold=np.asarray(t["threshold_raw"], dtype=np.float64),
                left=np.asarray(t["left"], dtype=np.int64),
                right=np.asarray(t["right"], dtype=np.int64),
                leaf_value=np.asarray(t["leaf_raw"], dtype=np.float64),
                max_depth=int(t["max_depth"]),
            ).validate()
        elif self.kind == "mlp":
            (w1, b1, a1), (w2, b2, a2) = self.layers
            if w1.shape != (8, 12) or b1.shape != (8,):
                raise ModelFormatError(f"layer 1 must be 12->8, got {w1.shape}")
            if w2.shape != (1, 8) or b2.shape != (1,):
                raise ModelFormatError(f"layer 2 must be 8->1, got {w2.shape}")
            if a1 != "relu" or a2 != "identity":
                raise ModelFormatError("activations must be relu then identity")
        else:
            raise ModelFormatError(f"unknown model kind {self.kind!r}")
        return self


# ---------------------------------------------------------------------------
# inference


def tree_predict(model, x, t=0.5):
    """Float-path traversal: left iff x[feature] <= threshold.

    Returns (leaf_value, label); label is 1 when leaf_value >= t.
    """
    node = 0
    for _ in range(model.max_depth):
        f = int(model.feature[node])
        if f < 0:
            break
        if x[f] <= model.threshold[node]:
            node = int(model.left[node])
        else:
            node = int(model.right[node])
    v = float(model.leaf_value[node])
    return v, int(v >= t)


def tree_predict_fixed(fm, x_raw):
    """Fixed-point traversal over raw Q47.16 values; same (value, label) shape."""
    t = fm.tree
    v = int(
        _kernels.tree_fixed_one(
            t["feature"], t["threshold_raw"], t["left"], t["right"],
            t["leaf_raw"], t["max_depth"], x_raw,
        )
    )
    return v, int(v >= fm.decision_threshold_logit)


def mlp_logit(model, x):
    """Reference forward pass: W2 @ relu(W1 @ x + b1) + b2, scalar logit."""
    (w1, b1, _), (w2, b2, _) = model.layers
    h = np.maximum(w1 @ np.asarray(x, dtype=np.float64) + b1, 0.0)
    return float((w2 @ h + b2)[0])


def mlp_logit_fixed(fm, x_raw):
    (w1, b1, _), (w2, b2, _) = fm.layers
    return int(_kernels.mlp_fixed_one(w1, b1, w2.reshape(-1), b2, x_raw))


def classify_logit(logit, threshold_logit):
    """Malicious iff logit >= threshold (ties fail closed, i.e. malicious)."""
    return int(logit >= threshold_logit)


def logit_threshold(t):
    """ln(t/(1-t)): the logit cut equivalent to probability threshold t."""
    if not 0.0 < t < 1.0:
        raise ValueError("probability threshold must be in (0, 1)")
    return math.log(t / (1.0 - t))


# ---------------------------------------------------------------------------
# persistence


def _tree_to_json(model):
    return {
        "feature": [int(v) for v in model.feature],
        "threshold": [float(v) for v in model.threshold],
        "left": [int(v) for v in model.left],
        "right": [int(v) for v in model.right],
        "leaf_value": [float(v) for v in model.leaf_value],
        "max_depth": int(model.max_depth),
    }


def _layers_to_json(layers, as_int):
    out = []
    for w, b, act in layers:
        conv = (lambda v: int(v)) if as_int else (lambda v: float(v))
        out.append(
            {
                "w": [[conv(v) for v in row] for row in np.atleast_2d(w)],
                "b": [conv(v) for v in b],
                "activation": act,
            }
        )
    return out


def model_to_doc(model, decision_threshold=0.5, meta=None):
    doc = {
        "schema": SCHEMA_VERSION,
        "feature_names": FEATURE_NAMES,
        "decision_threshold": decision_threshold,
        "meta": meta or {},
    }
    if isinstance(model, TreeModel):
        doc.update(kind="tree", quantized=False, q_format=None, tree=_tree_to_json(model))
    elif isinstance(model, MlpModel):
        doc.update(
            kind="mlp", quantized=False, q_format=None,
            layers=_layers_to_json(model.layers, as_int=False),
        )
    elif isinstance(model, FixedModel):
        doc.update(
            kind=model.kind,
            quantized=True,
            q_format=model.q_format,
            decision_threshold=model.decision_threshold,
            decision_threshold_logit=int(model.decision_threshold_logit),
        )
        if model.kind == "tree":
            t = model.tree
            doc["tree"] = {
                "feature": [int(v) for v in t["feature"]],
                "threshold_raw": [int(v) for v in t["threshold_raw"]],
                "left": [int(v) for v in t["left"]],
                "right": [int(v) for v in t["right"]],
                "leaf_raw": [int(v) for v in t["leaf_raw"]],
                "max_depth": int(t["max_depth"]),
            }
        else:
            doc["layers"] = _layers_to_json(model.layers, as_int=True)
    else:
        raise ModelFormatError(f"cannot serialize {type(model).__name__}")
    return doc


def doc_to_model(doc):
    if doc.get("schema") != SCHEMA_VERSION:
        raise ModelFormatError(f"unsupported model schema {doc.get('schema')!r}")
    kind = doc.get("kind")
    if doc.get("quantized"):
        if kind == "tree":
            t = doc["tree"]
            fm = FixedModel(
                kind="tree",
                decision_threshold_logit=int(doc["decision_threshold_logit"]),
                decision_threshold=float(doc["decision_threshold"]),
                tree={
                    "feature": np.asarray(t["feature"], dtype=np.int64),
                    "threshold_raw": np.asarray(t["threshold_raw"], dtype=np.int64),
                    "left": np.asarray(t["left"], dtype=np.int64),
                    "right": np.asarray(t["right"], dtype=np.int64),
                    "leaf_raw": np.asarray(t["leaf_raw"], dtype=np.int64),
                    "max_depth": int(t["max_depth"]),
                },
            )
        elif kind == "mlp":
            fm = FixedModel(
                kind="mlp",
                decision_threshold_logit=int(doc["decision_threshold_logit"]),
                decision_threshold=float(doc["decision_threshold"]),
                layers=[
                    (
                        np.asarray(l["w"], dtype=np.int64),
                        np.asarray(l["b"], dtype=np.int64),
                        l["activation"],
                    )
                    for l in doc["layers"]
                ],
            )
        else:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        return fm.validate()
    if kind == "tree":
        t = doc["tree"]
        return TreeModel(
            feature=np.asarray(t["feature"], dtype=np.int64),
            threshold=np.asarray(t["threshold"], dtype=np.float64),
            left=np.asarray(t["left"], dtype=np.int64),
            right=np.asarray(t["right"], dtype=np.int64),
            leaf_value=np.asarray(t["leaf_value"], dtype=np.float64),
            max_depth=int(t["max_depth"]),
        ).validate()
    if kind == "mlp":
        return MlpModel(
            layers=[
                (
                    np.asarray(l["w"], dtype=np.float64),
                    np.asarray(l["b"], dtype=np.float64),
                    l["activation"],
                )
                for l in doc["layers"]
            ]
        ).validate()
    raise ModelFormatError(f"unknown model kind {kind!r}")


def dumps_model(model, decision_threshold=0.5, meta=None):
    doc = model_to_doc(model, decision_threshold=decision_threshold, meta=meta)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(model, path, decision_threshold=0.5, meta=None):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_model(model, decision_threshold=decision_threshold, meta=meta))


def load_model(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"not a model file: {e}") from None
    return doc_to_model(doc)


def load_model_doc(path):
    """Like load_model but also returns the raw document (for meta/digests)."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"not a model file: {e}") from None
    return doc_to_model(doc), doc
