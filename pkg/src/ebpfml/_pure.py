"""Reference kernels in plain Python big-int arithmetic.

Every function here is the exact-semantics twin of a numba kernel in
_kernels.py: same Q47.16 results bit for bit, but computed with unbounded
Python integers instead of emulated 64-bit ops.  This module is the fallback
backend (EBPFML_NO_NUMBA=1, or numba missing) and the oracle the accelerated
kernels are tested against.
"""

import math

import numpy as np

FX_SHIFT = 16
FX_ONE = 1 << FX_SHIFT
FX_MIN = -(1 << 63)
FX_MAX = (1 << 63) - 1

# 8-bit mantissa table: LOG2_LUT[i] = round(log2(1 + i/256) * 2^16).
# The mantissa index is rounded to the nearest table point (see log2_raw),
# which keeps log2 exact at powers of two and the absolute error under 2^-8.
LOG2_LUT = np.array(
    [math.floor(math.log2(1.0 + i / 256.0) * FX_ONE + 0.5) for i in range(256)],
    dtype=np.int64,
)
_LUT_INTS = [int(v) for v in LOG2_LUT]

ENTROPY_MAX_RAW = 8 << FX_SHIFT


def _sat(v):
    if v > FX_MAX:
        return FX_MAX
    if v < FX_MIN:
        return FX_MIN
    return v


def add_raw(a, b):
    return _sat(int(a) + int(b))


def sub_raw(a, b):
    return _sat(int(a) - int(b))


def mul_raw(a, b):
    # Python's >> on negatives floors, which is exactly what a 128-bit
    # arithmetic shift does.
    return _sat((int(a) * int(b)) >> FX_SHIFT)


def log2_raw(v):
    """Fixed-point log2 of raw v.  Caller guarantees v > 0."""
    v = int(v)
    msb = v.bit_length() - 1
    m = v << (62 - msb)
    idx = (m >> 53) & 0x1FF
    idx = (idx + 1) >> 1
    carry = idx >> 8
    idx = idx & 0xFF
    return ((msb - FX_SHIFT + carry) << FX_SHIFT) + _LUT_INTS[idx]


def entropy_raw(hist, n):
    """Shannon entropy of a 256-bucket count histogram, in Fx bits.

    Caller guarantees n == sum(hist) > 0.  Per-bucket probability uses
    round-half-up integer division; buckets whose probability rounds to
    zero contribute nothing.
    """
    n = int(n)
    half = n >> 1
    acc = 0
    for i in range(256):
        c = int(hist[i])
        if c <= 0:
            continue
        p = (c * FX_ONE + half) // n
        if p <= 0:
            continue
        acc = add_raw(acc, mul_raw(p, log2_raw(p)))
    acc = sub_raw(0, acc)
    if acc < 0:
        return 0
    if acc > ENTROPY_MAX_RAW:
        return ENTROPY_MAX_RAW
    return acc


def chi2_raw(hist, n):
    """Pearson chi-squared against uniform, in Fx.

    Uses the identity chi2 = 256 * sum(c^2) / n - n, scaled by 2^16 before
    the division so the fractional bits survive.  Exact up to the final
    floor; clamped at zero.
    """
    n = int(n)
    s = 0
    for i in range(256):
        c = int(hist[i])
        s += c * c
    s <<= 8
    q, r = divmod(s, n)
    acc = (q << FX_SHIFT) + ((r << FX_SHIFT) // n) - (n << FX_SHIFT)
    if acc < 0:
        return 0
    return acc


def entropy_batch(hists, ns):
    out = np.empty(len(ns), dtype=np.int64)
    for k in range(len(ns)):
        out[k] = entropy_raw(hists[k], ns[k])
    return out


def chi2_batch(hists, ns):
    out = np.empty(len(ns), dtype=np.int64)
    for k in range(len(ns)):
        out[k] = chi2_raw(hists[k], ns[k])
    return out


def tree_fixed_one(feat, thr, left, right, leaf, max_depth, x):
    node = 0
    for _ in range(max_depth):
        f = int(feat[node])
        if f < 0:
            break
        if int(x[f]) <= int(thr[node]):
            node = int(left[node])
        else:
            node = int(right[node])
    return int(leaf[node])


def tree_fixed_batch(feat, thr, left, right, leaf, max_depth, thresh, X):
    n = X.shape[0]
    vals = np.empty(n, dtype=np.int64)
    labs = np.empty(n, dtype=np.int64)
    for k in range(n):
        v = tree_fixed_one(feat, thr, left, right, leaf, max_depth, X[k])
        vals[k] = v
        labs[k] = 1 if v >= int(thresh) else 0
    return vals, labs


def tree_interp_one(feat, thr, left, right, leaf, node_mask, max_depth, thresh, x):
    """Replays the emitted tree code: padded arrays, masked indices."""
    node_mask = int(node_mask)
    xb = [0] * 16
    for j in range(12):
        xb[j] = int(x[j])
    node = 0
    for _ in range(max_depth):
        f = int(feat[node & node_mask])
        if f < 0:
            break
        if xb[f & 15] <= int(thr[node & node_mask]):
            node = int(left[node & node_mask])
        else:
            node = int(right[node & node_mask])
    return 1 if int(leaf[node & node_mask]) >= int(thresh) else 0


def tree_interp_batch(feat, thr, left, right, leaf, node_mask, max_depth, thresh, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        out[k] = tree_interp_one(
            feat, thr, left, right, leaf, node_mask, max_depth, thresh, X[k]
        )
    return out


def mlp_fixed_one(w1, b1, w2, b2, x):
    nh = w1.shape[0]
    ni = w1.shape[1]
    h = [0] * nh
    for i in range(nh):
        acc = int(b1[i])
        for j in range(ni):
            acc = add_raw(acc, mul_raw(int(w1[i, j]), int(x[j])))
        h[i] = acc if acc > 0 else 0
    acc = int(b2[0])
    for i in range(nh):
        acc = add_raw(acc, mul_raw(int(w2[i]), h[i]))
    return acc


def mlp_fixed_batch(w1, b1, w2, b2, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        out[k] = mlp_fixed_one(w1, b1, w2, b2, X[k])
    return out


def mlp_interp_one(w1, b1, w2, b2, thresh, x):
    """Replays the emitted dense-layer code; same op sequence as fixed predict."""
    return 1 if mlp_fixed_one(w1, b1, w2, b2, x) >= int(thresh) else 0


def mlp_interp_batch(w1, b1, w2, b2, thresh, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        out[k] = mlp_interp_one(w1, b1, w2, b2, thresh, X[k])
    return out
