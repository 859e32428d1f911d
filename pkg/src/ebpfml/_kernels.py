"""Hot kernels: numba-accelerated twins of the _pure reference kernels.

The accelerated versions emulate 64-bit two's-complement arithmetic with
explicit uint64/int64 casts (numba has no int128), using the same operation
sequence the generated restricted C uses.  Tests pin bit-equality between
the two backends.

Backend selection: EBPFML_NO_NUMBA=1 (or an unimportable numba) binds every
public name to the _pure implementation.  `BACKEND` records the choice.
"""

import os

import numpy as np

from . import _pure
from ._pure import (
    ENTROPY_MAX_RAW,
    FX_MAX,
    FX_MIN,
    FX_ONE,
    FX_SHIFT,
    LOG2_LUT,
)

_FORCE_PURE = os.environ.get("EBPFML_NO_NUMBA", "") not in ("", "0")

HAS_NUMBA = False
if not _FORCE_PURE:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

# Inputs with sum(hist) beyond this use the big-int fallback; below it the
# 64-bit intermediates in the numba entropy/chi2 kernels cannot overflow
# (256 * n^2 * 2^16 needs n < 2^19.5 for chi2's worst case -- 2^18 is safe
# with margin and far above the 4096-byte histograms seen in practice).
_NUMBA_HIST_N_LIMIT = 1 << 18

if HAS_NUMBA:
    _U32MASK = np.uint64(0xFFFFFFFF)
    _U16 = np.uint64(16)
    _U32 = np.uint64(32)
    _U48 = np.uint64(48)
    _U53 = np.uint64(53)

    @njit(cache=True)
    def _nb_add_raw(a, b):
        r = np.int64(np.uint64(a) + np.uint64(b))
        if ((a ^ r) & (b ^ r)) < 0:
            if r < 0:
                return np.int64(FX_MAX)
            return np.int64(FX_MIN)
        return r

    @njit(cache=True)
    def _nb_sub_raw(a, b):
        r = np.int64(np.uint64(a) - np.uint64(b))
        if ((a ^ b) & (a ^ r)) < 0:
            if a < 0:
                return np.int64(FX_MIN)
            return np.int64(FX_MAX)
        return r

    @njit(cache=True)
    def _nb_mul_raw(a, b):
        # 64x64 -> 128 via 32-bit partial products, then arithmetic shift
        # right 16 and saturation; mirrors the emitted C routine.
        ua = np.uint64(a)
        ub = np.uint64(b)
        al = ua & _U32MASK
        ah = ua >> _U32
        bl = ub & _U32MASK
        bh = ub >> _U32
        ll = al * bl
        lh = al * bh
        hl = ah * bl
        hh = ah * bh
        mid = lh + (ll >> _U32)
        mid2 = hl + (mid & _U32MASK)
        lo = (ll & _U32MASK) | (mid2 << _U32)
        hi = hh + (mid >> _U32) + (mid2 >> _U32)
        if a < 0:
            hi = hi - ub
        if b < 0:
            hi = hi - ua
        shhi = np.int64(hi) >> 16
        r = np.int64((lo >> _U16) | (hi << _U48))
        if shhi != (r >> 63):
            if shhi < 0:
                return np.int64(FX_MIN)
            return np.int64(FX_MAX)
        return r

    @njit(cache=True)
    def _nb_log2_raw(v):
        uv = np.uint64(v)
        msb = 0
        if uv >= np.uint64(1 << 32):
            uv = uv >> _U32
            msb += 32
        if uv >= np.uint64(1 << 16):
            uv = uv >> _U16
            msb += 16
        if uv >= np.uint64(1 << 8):
            uv = uv >> np.uint64(8)
            msb += 8
        if uv >= np.uint64(1 << 4):
            uv = uv >> np.uint64(4)
            msb += 4
        if uv >= np.uint64(1 << 2):
            uv = uv >> np.uint64(2)
            msb += 2
        if uv >= np.uint64(2):
            msb += 1
        m = np.uint64(v) << np.uint64(62 - msb)
        idx = int((m >> _U53) & np.uint64(0x1FF))
        idx = (idx + 1) >> 1
        carry = idx >> 8
        idx = idx & 0xFF
        return np.int64(((msb - 16 + carry) << 16) + LOG2_LUT[idx])

    @njit(cache=True)
    def _nb_entropy_raw(hist, n):
        half = n >> 1
        acc = np.int64(0)
        for i in range(256):
            c = hist[i]
            if c <= 0:
                continue
            p = (c * 65536 + half) // n
            if p <= 0:
                continue
            acc = _nb_add_raw(acc, _nb_mul_raw(p, _nb_log2_raw(p)))
        acc = _nb_sub_raw(0, acc)
        if acc < 0:
            return np.int64(0)
        if acc > ENTROPY_MAX_RAW:
            return np.int64(ENTROPY_MAX_RAW)
        return acc

    @njit(cache=True)
    def _nb_chi2_raw(hist, n):
        s = np.int64(0)
        for i in range(256):
            c = hist[i]
            s += c * c
        s = s << 8
        q = s // n
        r = s - q * n
        acc = (q << 16) + ((r << 16) // n) - (n << 16)
        if acc < 0:
            return np.int64(0)
        return acc

    @njit(cache=True)
    def _nb_entropy_batch(hists, ns):
        out = np.empty(ns.shape[0], dtype=np.int64)
        for k in range(ns.shape[0]):
            out[k] = _nb_entropy_raw(hists[k], ns[k])
        return out

    @njit(cache=True)
    def _nb_chi2_batch(hists, ns):
        out = np.empty(ns.shape[0], dtype=np.int64)
        for k in range(ns.shape[0]):
            out[k] = _nb_chi2_raw(hists[k], ns[k])
        return out

    @njit(cache=True)
    def _nb_tree_fixed_one(feat, thr, left, right, leaf, max_depth, x):
        node = 0
        for _ in range(max_depth):
            f = feat[node]
            if f < 0:
                break
            if x[f] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        return leaf[node]

    @njit(cache=True)
    def _nb_tree_fixed_batch(feat, thr, left, right, leaf, max_depth, thresh, X):
        n = X.shape[0]
        vals = np.empty(n, dtype=np.int64)
        labs = np.empty(n, dtype=np.int64)
        for k in range(n):
            node = 0
            for _ in range(max_depth):
                f = feat[node]
                if f < 0:
                    break
                if X[k, f] <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            v = leaf[node]
            vals[k] = v
            labs[k] = 1 if v >= thresh else 0
        return vals, labs

    @njit(cache=True)
    def _nb_tree_interp_one(feat, thr, left, right, leaf, node_mask, max_depth, thresh, x):
        xb = np.zeros(16, dtype=np.int64)
        for j in range(12):
            xb[j] = x[j]
        node = np.int64(0)
        for _ in range(max_depth):
            f = feat[node & node_mask]
            if f < 0:
                break
            if xb[f & 15] <= thr[node & node_mask]:
                node = left[node & node_mask]
            else:
                node = right[node & node_mask]
        if leaf[node & node_mask] >= thresh:
            return np.int64(1)
        return np.int64(0)

    @njit(cache=True)
    def _nb_tree_interp_batch(feat, thr, left, right, leaf, node_mask, max_depth, thresh, X):
        n = X.shape[0]
        out = np.empty(n, dtype=np.int64)
        xb = np.zeros(16, dtype=np.int64)
        for k in range(n):
            for j in range(12):
                xb[j] = X[k, j]
            node = np.int64(0)
            for _ in range(max_depth):
                f = feat[node & node_mask]
                if f < 0:
                    break
                if xb[f & 15] <= thr[node & node_mask]:
                    node = left[node & node_mask]
                else:
                    node = right[node & node_mask]
            out[k] = 1 if leaf[node & node_mask] >= thresh else 0
        return out

    @njit(cache=True)
    def _nb_mlp_fixed_one(w1, b1, w2, b2, x):
        nh = w1.shape[0]
        ni = w1.shape[1]
        h = np.zeros(nh, dtype=np.int64)
        for i in range(nh):
            acc = b1[i]
            for j in range(ni):
                acc = _nb_add_raw(acc, _nb_mul_raw(w1[i, j], x[j]))
            h[i] = acc if acc > 0 else 0
        acc = b2[0]
        for i in range(nh):
            acc = _nb_add_raw(acc, _nb_mul_raw(w2[i], h[i]))
        return acc

    @njit(cache=True)
    def _nb_mlp_fixed_batch(w1, b1, w2, b2, X):
        n = X.shape[0]
        out = np.empty(n, dtype=np.int64)
        for k in range(n):
            out[k] = _nb_mlp_fixed_one(w1, b1, w2, b2, X[k])
        return out

    @njit(cache=True)
    def _nb_mlp_interp_one(w1, b1, w2, b2, thresh, x):
        if _nb_mlp_fixed_one(w1, b1, w2, b2, x) >= thresh:
            return np.int64(1)
        return np.int64(0)

    @njit(cache=True)
    def _nb_mlp_interp_batch(w1, b1, w2, b2, thresh, X):
        n = X.shape[0]
        out = np.empty(n, dtype=np.int64)
        for k in range(n):
            out[k] = 1 if _nb_mlp_fixed_one(w1, b1, w2, b2, X[k]) >= thresh else 0
        return out

    def _entropy_raw(hist, n):
        if n < _NUMBA_HIST_N_LIMIT:
            return int(_nb_entropy_raw(np.ascontiguousarray(hist, dtype=np.int64), n))
        return _pure.entropy_raw(hist, n)

    def _chi2_raw(hist, n):
        if n < _NUMBA_HIST_N_LIMIT:
            return int(_nb_chi2_raw(np.ascontiguousarray(hist, dtype=np.int64), n))
        return _pure.chi2_raw(hist, n)

    def _entropy_batch(hists, ns):
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and int(ns.max()) < _NUMBA_HIST_N_LIMIT:
            return _nb_entropy_batch(np.ascontiguousarray(hists, dtype=np.int64), ns)
        return _pure.entropy_batch(hists, ns)

    def _chi2_batch(hists, ns):
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and int(ns.max()) < _NUMBA_HIST_N_LIMIT:
            return _nb_chi2_batch(np.ascontiguousarray(hists, dtype=np.int64), ns)
        return _pure.chi2_batch(hists, ns)

    BACKEND = "numba"
    add_raw = _nb_add_raw
    sub_raw = _nb_sub_raw
    mul_raw = _nb_mul_raw
    log2_raw = _nb_log2_raw
    entropy_raw = _entropy_raw
    chi2_raw = _chi2_raw
    entropy_batch = _entropy_batch
    chi2_batch = _chi2_batch
    tree_fixed_one = _nb_tree_fixed_one
    tree_fixed_batch = _nb_tree_fixed_batch
    tree_interp_one = _nb_tree_interp_one
    tree_interp_batch = _nb_tree_interp_batch
    mlp_fixed_one = _nb_mlp_fixed_one
    mlp_fixed_batch = _nb_mlp_fixed_batch
    mlp_interp_one = _nb_mlp_interp_one
    mlp_interp_batch = _nb_mlp_interp_batch
else:
    BACKEND = "pure"
    add_raw = _pure.add_raw
    sub_raw = _pure.sub_raw
    mul_raw = _pure.mul_raw
    log2_raw = _pure.log2_raw
    entropy_raw = _pure.entropy_raw
    chi2_raw = _pure.chi2_raw
    entropy_batch = _pure.entropy_batch
    chi2_batch = _pure.chi2_batch
    tree_fixed_one = _pure.tree_fixed_one
    tree_fixed_batch = _pure.tree_fixed_batch
    tree_interp_one = _pure.tree_interp_one
    tree_interp_batch = _pure.tree_interp_batch
    mlp_fixed_one = _pure.mlp_fixed_one
    mlp_fixed_batch = _pure.mlp_fixed_batch
    mlp_interp_one = _pure.mlp_interp_one
    mlp_interp_batch = _pure.mlp_interp_batch


def warmup():
    """Force JIT compilation of every kernel (no-op on the pure backend)."""
    if BACKEND != "numba":
        return
    hist = np.zeros(256, dtype=np.int64)
    hist[0] = 4
    hist[255] = 4
    mul_raw(3, FX_ONE)
    add_raw(1, 2)
    sub_raw(1, 2)
    log2_raw(FX_ONE)
    entropy_raw(hist, 8)
    chi2_raw(hist, 8)
    entropy_batch(hist[None, :], np.array([8], dtype=np.int64))
    chi2_batch(hist[None, :], np.array([8], dtype=np.int64))
    feat = np.array([-1], dtype=np.int64)
    z1 = np.zeros(1, dtype=np.int64)
    x = np.zeros(12, dtype=np.int64)
    X = np.zeros((1, 12), dtype=np.int64)
    tree_fixed_one(feat, z1, z1, z1, z1, 0, x)
    tree_fixed_batch(feat, z1, z1, z1, z1, 0, 0, X)
    tree_interp_one(feat, z1, z1, z1, z1, 0, 0, 0, x)
    tree_interp_batch(feat, z1, z1, z1, z1, 0, 0, 0, X)
    w1 = np.zeros((8, 12), dtype=np.int64)
    b1 = np.zeros(8, dtype=np.int64)
    w2 = np.zeros(8, dtype=np.int64)
    b2 = np.zeros(1, dtype=np.int64)
    mlp_fixed_one(w1, b1, w2, b2, x)
    mlp_fixed_batch(w1, b1, w2, b2, X)
    mlp_interp_one(w1, b1, w2, b2, 0, x)
    mlp_interp_batch(w1, b1, w2, b2, 0, X)
