"""Model training: CART decision tree (Gini) and MLP via BCE + Adam.

The tree grows with no depth or node-count limit, splitting on midpoints of
sorted unique values, ties broken by lowest feature index then lowest
threshold.  The MLP trains full-batch in standardized feature space; the
standardization is folded into the first layer before export so downstream
consumers always see raw-feature weights.

A quantization-hardening phase follows the main fit: the folded first-layer
weights are snapped to the Q47.16 grid and the remaining parameters are
fine-tuned around them.  Without this, per-feature scale folding leaves
first-layer weights far below grid resolution and quantization would destroy
the model; with it, the exported float model is quantization-stable.  Set
harden_epochs=0 for the plain recipe.
"""

import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_NAMES, N_FEATURES
from .models import LEAF, MlpModel, TreeModel


class DatasetFormatError(ValueError):
    pass


class TrainingError(RuntimeError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


@dataclass
class Dataset:
    X: np.ndarray  # (n, 12) float64
    y: np.ndarray  # (n,) int64 in {0, 1}
    provenance: list = field(default_factory=list)

    def validate(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[1] != N_FEATURES:
            raise DatasetFormatError(f"dataset must be (n, {N_FEATURES})")
        if self.X.shape[0] == 0:
            raise DatasetFormatError("dataset is empty")
        if self.y.shape != (self.X.shape[0],):
            raise DatasetFormatError("labels must match rows")
        if not np.isin(self.y, (0, 1)).all():
            raise DatasetFormatError("labels must be 0 (benign) or 1 (malicious)")
        return self

    @property
    def n(self):
        return self.X.shape[0]


@dataclass
class TrainConfig:
    lr: float = 1e-4
    max_epochs: int = 10000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 100
    min_delta: float = 1e-6
    seed: int = 0
    # grid-hardening phase (0 disables; see module docstring)
    harden_epochs: int = 2000
    harden_lr: float = 1e-3

    def validate(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        return self


# ---------------------------------------------------------------------------
# CART decision tree


def _gini_of(n, pos):
    if n == 0:
        return 0.0
    p1 = pos / n
    p0 = 1.0 - p1
    return 1.0 - p1 * p1 - p0 * p0


def gini_decrease(parent, left, right):
    """Gini impurity decrease of a split.

    Each argument is a (class0_count, class1_count) pair; left/right must
    partition parent.
    """
    n = parent[0] + parent[1]
    nl = left[0] + left[1]
    nr = right[0] + right[1]
    if n == 0 or nl + nr != n:
        raise ValueError("split does not partition the parent")
    g = _gini_of(n, parent[1])
    gl = _gini_of(nl, left[1])
    gr = _gini_of(nr, right[1])
    return g - (nl / n) * gl - (nr / n) * gr


def _best_split(X, y):
    """Exhaustive best Gini split; returns (feature, threshold) or None.

    Candidates are midpoints between consecutive distinct sorted values.
    Only strictly positive impurity decrease splits; ties keep the lowest
    feature index, then the lowest threshold.
    """
    n = y.shape[0]
    npos = int(y.sum())
    parent_g = _gini_of(n, npos)
    best_dec = 0.0
    best = None
    for f in range(X.shape[1]):
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cpos = np.cumsum(y[order])
        cut = np.nonzero(vs[:-1] < vs[1:])[0]
        if cut.size == 0:
            continue
        nl = (cut + 1).astype(np.float64)
        nr = n - nl
        pl = cpos[cut].astype(np.float64)
        pr = npos - pl
        gl = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
        gr = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
        dec = parent_g - (nl / n) * gl - (nr / n) * gr
        i = int(np.argmax(dec))
        if dec[i] > best_dec:
            best_dec = float(dec[i])
            c = cut[i]
            best = (f, float((vs[c] + vs[c + 1]) / 2.0))
    return best


def train_tree(data):
    """Grow an unlimited-depth CART tree; deterministic for a fixed dataset.

    Stops at pure nodes, nodes with fewer than 2 samples, and nodes where no
    split has positive Gini decrease.  Leaf value is the malicious-class
    fraction.  A single-class dataset yields a single leaf.
    """
    data.validate()
    X, y = data.X, data.y
    feature, threshold, left, right, leaf = [], [], [], [], []

    def build(idx):
        me = len(feature)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(me)
        right.append(me)
        n = idx.shape[0]
        pos = int(y[idx].sum())
        leaf.append(pos / n)
        if pos == 0 or pos == n or n < 2:
            return me
        split = _best_split(X[idx], y[idx])
        if split is None:
            return me
        f, thr = split
        mask = X[idx, f] <= thr
        feature[me] = f
        threshold[me] = thr
        left[me] = build(idx[mask])
        right[me] = build(idx[~mask])
        return me

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 3 * data.n + 100))
    try:
        build(np.arange(data.n))
    finally:
        sys.setrecursionlimit(old_limit)

    model = TreeModel(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf_value=np.asarray(leaf, dtype=np.float64),
        max_depth=0,
    )
    model.max_depth = _tree_depth(model)
    return model.validate()


def _tree_depth(model):
    depth = 0
    stack = [(0, 0)]
    while stack:
        node, d = stack.pop()
        if model.feature[node] == LEAF:
            depth = max(depth, d)
        else:
            stack.append((int(model.left[node]), d + 1))
            stack.append((int(model.right[node]), d + 1))
    return depth


# ---------------------------------------------------------------------------
# MLP: BCE + Adam


def bce_loss(logits, labels):
    """Mean binary cross-entropy on logits, softplus-stabilized."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward_logits(w1, b1, w2, b2, X):
    h = np.maximum(X @ w1.T + b1, 0.0)
    return (h @ w2.T + b2)[:, 0]


def loss_and_grads(w1, b1, w2, b2, X, y):
    """BCE loss and its analytic gradients for the 12->8->1 architecture."""
    n = X.shape[0]
    z1 = X @ w1.T + b1
    h = np.maximum(z1, 0.0)
    z = (h @ w2.T + b2)[:, 0]
    loss = bce_loss(z, y)
    dz = (_sigmoid(z) - y) / n
    dw2 = (dz @ h)[None, :]
    db2 = np.array([dz.sum()])
    dh = np.outer(dz, w2[0])
    dz1 = dh * (z1 > 0.0)
    dw1 = dz1.T @ X
    db1 = dz1.sum(axis=0)
    return loss, (dw1, db1, dw2, db2)


class Adam:
    """Reference Adam update (bias-corrected first/second moments)."""

    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _fit(params, grad_fn, loss_fn, loss_args, lr, max_epochs, cfg, epoch_base=0):
    """Adam loop returning the lowest-loss parameter snapshot.

    Loss is evaluated after every step, so a one-epoch budget returns
    exactly the single-step result.
    """
    opt = Adam([p.shape for p in params], lr, cfg.beta1, cfg.beta2, cfg.eps)
    best_loss = np.inf
    best = [p.copy() for p in params]
    stale = 0
    for epoch in range(1, max_epochs + 1):
        grads = grad_fn(params, *loss_args)
        opt.step(params, grads)
        loss = loss_fn(params, *loss_args)
        if not np.isfinite(loss):
            raise TrainingError(
                f"training diverged (loss not finite) at epoch {epoch_base + epoch}",
                epoch=epoch_base + epoch,
            )
        if loss < best_loss - cfg.min_delta:
            stale = 0
        else:
            stale += 1
        if loss < best_loss:
            best_loss = loss
            best = [p.copy() for p in params]
        if stale >= cfg.patience:
            break
    return best, best_loss


def train_mlp(data, cfg=None):
    """Train the 12->8->1 MLP; returns a raw-feature-space MlpModel.

    Deterministic for a fixed (dataset, config): seeded init, full-batch
    Adam, lowest-loss snapshot returned.
    """
    cfg = (cfg or TrainConfig()).validate()
    data.validate()
    X = data.X
    y = data.y.astype(np.float64)

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    Xs = (X - mu) / sd

    rng = np.random.default_rng(cfg.seed)
    lim1 = np.sqrt(6.0 / (12 + 8))
    lim2 = np.sqrt(6.0 / (8 + 1))
    w1 = rng.uniform(-lim1, lim1, size=(8, 12))
    b1 = np.zeros(8)
    w2 = rng.uniform(-lim2, lim2, size=(1, 8))
    b2 = np.zeros(1)

    def grad_all(params, Xb, yb):
        return loss_and_grads(params[0], params[1], params[2], params[3], Xb, yb)[1]

    def loss_all(params, Xb, yb):
        return bce_loss(forward_logits(params[0], params[1], params[2], params[3], Xb), yb)

    (w1, b1, w2, b2), _ = _fit(
        [w1, b1, w2, b2], grad_all, loss_all, (Xs, y), cfg.lr, cfg.max_epochs, cfg
    )

    # fold standardization into the first layer: downstream sees raw features
    w1f = w1 / sd[None, :]
    b1f = b1 - w1f @ mu

    if cfg.harden_epochs > 0:
        w1g = np.round(w1f * 65536.0) / 65536.0

        def grad_tail(params, Xb, yb):
            _, (_, db1, dw2, db2) = loss_and_grads(
                w1g, params[0], params[1], params[2], Xb, yb
            )
            return (db1, dw2, db2)

        def loss_tail(params, Xb, yb):
            return bce_loss(forward_logits(w1g, params[0], params[1], params[2], Xb), yb)

        (b1f, w2, b2), _ = _fit(
            [b1f, w2, b2], grad_tail, loss_tail, (X, y), cfg.harden_lr,
            cfg.harden_epochs, cfg, epoch_base=cfg.max_epochs,
        )
        w1f = w1g

    return MlpModel(layers=[(w1f, b1f, "relu"), (w2, b2, "identity")]).validate()


# ---------------------------------------------------------------------------
# dataset persistence


def dataset_header(ds, meta=None):
    return {
        "schema": 1,
        "kind": "dataset",
        "rows": int(ds.n),
        "feature_names": FEATURE_NAMES,
        "provenance": list(ds.provenance),
        "meta": meta or {},
    }


def save_dataset(ds, path, meta=None):
    ds.validate()
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(dataset_header(ds, meta), sort_keys=True, separators=(",", ":")))
        f.write("\n")
        for i in range(ds.n):
            row = " ".join(repr(float(v)) for v in ds.X[i])
            f.write(f"{row} {int(ds.y[i])}\n")


def load_dataset(path):
    with open(path, "r", encoding="utf-8") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"bad dataset header: {e}") from None
        if header.get("kind") != "dataset" or header.get("schema") != 1:
            raise DatasetFormatError("not a schema-1 dataset file")
        X, y = [], []
        for ln, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != N_FEATURES + 1:
                raise DatasetFormatError(f"line {ln}: expected 12 features + label")
            try:
                X.append([float(v) for v in parts[:-1]])
                y.append(int(parts[-1]))
            except ValueError as e:
                raise DatasetFormatError(f"line {ln}: {e}") from None
    ds = Dataset(
        X=np.asarray(X, dtype=np.float64),
        y=np.asarray(y, dtype=np.int64),
        provenance=header.get("provenance", []),
    )
    return ds.validate(), header
