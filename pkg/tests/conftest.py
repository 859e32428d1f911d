import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ebpfml import _kernels


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance verdicts")
        for line in lines:
            terminalreporter.write_line(line)

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the jit kernels once so timing-sensitive tests see steady state
    _kernels.warmup()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0xE6)


@pytest.fixture(scope="session")
def small_dataset():
    """Linearly separable 2-cluster data in feature space."""
    from ebpfml.training import Dataset

    g = np.random.default_rng(42)
    n = 200
    benign = g.normal(loc=0.0, scale=1.0, size=(n, 12)) + np.array([2.0] * 12)
    mal = g.normal(loc=0.0, scale=1.0, size=(n, 12)) + np.array([8.0] * 12)
    X = np.vstack([benign, mal])
    y = np.array([0] * n + [1] * n, dtype=np.int64)
    return Dataset(X=np.abs(X), y=y)


@pytest.fixture(scope="session")
def mixed_trace():
    from ebpfml.tracegen import BenignProfile, RansomwareProfile, gen_benign, gen_ransomware, merge

    benign = gen_benign(BenignProfile(compress_prob=0.3), seed=901, duration=6.0)
    ransom = gen_ransomware(RansomwareProfile(files=80, fanout=2), seed=902)
    return merge(benign, ransom)


@pytest.fixture(scope="session")
def trained_models(mixed_trace):
    """One tree + one MLP trained on a mixed trace, with quantized twins."""
    from ebpfml.compiler import quantize
    from ebpfml.replay import extract_snapshots
    from ebpfml.training import Dataset, TrainConfig, train_mlp, train_tree

    X, y, _, _ = extract_snapshots(mixed_trace, ("/data",))
    ds = Dataset(X=X.astype(np.float64) / 65536.0, y=y)
    tree = train_tree(ds)
    mlp = train_mlp(ds, TrainConfig(seed=3, max_epochs=4000))
    return {
        "dataset": ds,
        "tree": tree,
        "mlp": mlp,
        "ftree": quantize(tree),
        "fmlp": quantize(mlp),
    }
