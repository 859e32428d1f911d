import numpy as np

from ebpfml import backend
from ebpfml.bench import PipelineConfig, build_traces, kernel_bench, run_pipeline, snapshots_dataset
from ebpfml.tracegen import dumps_trace


def test_build_traces_deterministic_and_disjoint():
    cfg = PipelineConfig()
    a = build_traces(3, cfg, train=True)
    b = build_traces(3, cfg, train=True)
    assert dumps_trace(a) == dumps_trace(b)
    held_out = build_traces(3, cfg, train=False)
    assert dumps_trace(a) != dumps_trace(held_out)
    labs = set(a.labels.values())
    assert labs == {0, 1}


def test_snapshots_dataset_is_float_feature_space():
    cfg = PipelineConfig()
    trace = build_traces(1, cfg, train=False)
    ds = snapshots_dataset(trace, cfg.protected_prefixes)
    assert ds.X.dtype == np.float64
    assert ds.X.shape[1] == 12
    assert ds.n == len(ds.y)


def test_run_pipeline_one_seed():
    out = run_pipeline(9, PipelineConfig())
    assert set(out["f1"]) == {"tree", "mlp"}
    assert 0.0 <= out["f1"]["tree"] <= 1.0
    assert len(out["reports"]) == 6
    paths = {(r.model_kind, r.path) for r in out["reports"]}
    assert len(paths) == 6


def test_kernel_bench_small():
    out = kernel_bench(n_hist=200, n_vec=1000, seed=1)
    assert "entropy" in out["text"] and "mlp-classify" in out["text"]
    assert out["backend"] == backend()
    for row in out["rows"]:
        assert row["pure_ns"] > 0
        if backend() == "numba":
            assert row["numba_ns"] > 0 and row["speedup"] > 1.0
