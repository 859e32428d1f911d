"""Shared test helpers: random model generators and float oracles."""

import numpy as np

from ebpfml.models import LEAF, MlpModel, TreeModel
from ebpfml.training import Dataset, train_tree


def random_tree_model(rng, max_nodes=64):
    """Random well-formed float tree grown by recursive splitting."""
    feature, threshold, left, right, leaf = [], [], [], [], []

    def grow(depth, budget):
        me = len(feature)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(me)
        right.append(me)
        leaf.append(float(rng.random()))
        if budget >= 3 and depth < 12 and rng.random() < 0.6:
            feature[me] = int(rng.integers(12))
            threshold[me] = float(rng.normal(scale=20.0))
            leaf[me] = 0.0
            used = 1
            left[me] = grow(depth + 1, (budget - 1) // 2)
            used = len(feature) - me
            right[me] = grow(depth + 1, budget - used)
        return me

    grow(0, max_nodes)
    model = TreeModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        leaf_value=np.array(leaf, dtype=np.float64),
        max_depth=0,
    )
    model.max_depth = _depth_of(model)
    return model.validate()


def _depth_of(model):
    def walk(i, d):
        if model.feature[i] == LEAF:
            return d
        return max(walk(int(model.left[i]), d + 1), walk(int(model.right[i]), d + 1))

    return walk(0, 0)


def random_mlp_model(rng, scale=0.5):
    w1 = rng.normal(scale=scale, size=(8, 12))
    b1 = rng.normal(scale=scale, size=8)
    w2 = rng.normal(scale=scale, size=(1, 8))
    b2 = rng.normal(scale=scale, size=1)
    return MlpModel(layers=[(w1, b1, "relu"), (w2, b2, "identity")]).validate()


def comb_tree_97(n_points=49):
    """Train a tree guaranteed to have exactly 2*n_points - 1 nodes.

    Alternating labels on distinct single-feature values force every leaf
    to be a singleton: 49 points -> 49 leaves + 48 internal = 97 nodes.
    """
    X = np.zeros((n_points, 12), dtype=np.float64)
    X[:, 0] = np.arange(n_points, dtype=np.float64)
    y = (np.arange(n_points) % 2).astype(np.int64)
    return train_tree(Dataset(X=X, y=y))


def float_entropy_bits(hist):
    hist = np.asarray(hist, dtype=np.float64)
    n = hist.sum()
    p = hist[hist > 0] / n
    return float(-(p * np.log2(p)).sum())


def float_chi2(hist):
    hist = np.asarray(hist, dtype=np.float64)
    n = hist.sum()
    e = n / 256.0
    return float(((hist - e) ** 2 / e).sum())
