"""Twin-backend equality: the numba kernels and the pure-python fallback
must be bit-identical, since replay decisions and acceptance results must
not depend on which backend happens to be active."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ebpfml import _kernels, _pure
from ebpfml.fixedpoint import FX_MAX, FX_MIN, FX_ONE

numba_only = pytest.mark.skipif(
    _kernels.BACKEND != "numba", reason="numba backend not active"
)

EDGES = [FX_MIN, FX_MIN + 1, -FX_ONE, -2, -1, 0, 1, 2, FX_ONE, FX_MAX - 1, FX_MAX]

raws = st.integers(min_value=FX_MIN, max_value=FX_MAX)


@numba_only
def test_arith_twins_on_edges():
    for a in EDGES:
        for b in EDGES:
            assert _kernels.add_raw(a, b) == _pure.add_raw(a, b), (a, b, "+")
            assert _kernels.sub_raw(a, b) == _pure.sub_raw(a, b), (a, b, "-")
            assert _kernels.mul_raw(a, b) == _pure.mul_raw(a, b), (a, b, "*")


@numba_only
@given(raws, raws)
def test_arith_twins_random(a, b):
    assert _kernels.add_raw(a, b) == _pure.add_raw(a, b)
    assert _kernels.sub_raw(a, b) == _pure.sub_raw(a, b)
    assert _kernels.mul_raw(a, b) == _pure.mul_raw(a, b)


@numba_only
@given(st.integers(min_value=1, max_value=FX_MAX))
def test_log2_twins(v):
    assert _kernels.log2_raw(v) == _pure.log2_raw(v)


@numba_only
def test_entropy_chi2_twins(rng):
    for _ in range(50):
        hist = rng.integers(0, 2000, size=256).astype(np.int64)
        n = int(hist.sum())
        if n == 0:
            continue
        assert _kernels.entropy_raw(hist, n) == _pure.entropy_raw(hist, n)
        assert _kernels.chi2_raw(hist, n) == _pure.chi2_raw(hist, n)


@numba_only
def test_huge_count_histograms_dispatch_to_exact_path():
    # counts large enough to overflow the 64-bit scaled sums inside the jit
    # kernel must come out equal to the big-int path anyway
    hist = np.zeros(256, dtype=np.int64)
    hist[0] = 1 << 40
    hist[255] = 1 << 40
    n = int(hist.sum())
    assert _kernels.entropy_raw(hist, n) == _pure.entropy_raw(hist, n)
    assert _kernels.chi2_raw(hist, n) == _pure.chi2_raw(hist, n)
    # two equal buckets: entropy exactly 1 bit
    assert abs(_kernels.entropy_raw(hist, n) - FX_ONE) <= 2


@numba_only
def test_batch_kernels_match_scalar(rng):
    hists = rng.integers(0, 500, size=(40, 256)).astype(np.int64)
    ns = hists.sum(axis=1)
    ent = _kernels.entropy_batch(hists, ns)
    chi = _kernels.chi2_batch(hists, ns)
    for i in range(len(hists)):
        assert ent[i] == _pure.entropy_raw(hists[i], int(ns[i]))
        assert chi[i] == _pure.chi2_raw(hists[i], int(ns[i]))


def test_env_flag_selects_pure_backend():
    env = dict(os.environ, EBPFML_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import ebpfml; print(ebpfml.backend())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "pure"


def test_backend_reports_a_known_value():
    assert _kernels.BACKEND in ("numba", "pure")


def test_warmup_idempotent():
    _kernels.warmup()
    _kernels.warmup()
