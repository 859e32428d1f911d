"""Trace replay: feature extraction, snapshot-triggered inference on a
chosen path, macro-F1 scoring, and nanosecond latency statistics.

Timing covers exactly the inference call. Feature extraction happens before
the timed region, each path gets 100 unrecorded warm-up calls, and a no-op
calibration ceiling lets tests prove the harness is not timing anything
else.
"""

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .compiler import EmitMode, make_interpreter
from .features import N_FEATURES, EventKind, StateTable, ingest, snapshot
from .models import (
    FixedModel,
    MlpModel,
    TreeModel,
    classify_logit,
    logit_threshold,
    mlp_logit,
    mlp_logit_fixed,
    tree_predict,
    tree_predict_fixed,
)

SNAPSHOT_EVERY = 64
WARMUP_CALLS = 100


class InferencePath(Enum):
    FLOAT_REFERENCE = "float"
    FIXED_POINT = "fixed"
    GENERATED_INTERPRETED = "generated"


@dataclass
class MetricsReport:
    path: str
    model_kind: str
    sample_size: int
    macro_f1: float
    mean_ns: int
    std_ns: int
    median_ns: int
    single_class: bool = False

    def to_dict(self):
        return {
            "path": self.path,
            "model_kind": self.model_kind,
            "sample_size": self.sample_size,
            "macro_f1": self.macro_f1,
            "latency_ns": {"mean": self.mean_ns, "std": self.std_ns, "median": self.median_ns},
            "single_class": self.single_class,
        }


def macro_f1(predictions, labels):
    """Unweighted mean of per-class F1 over the classes that occur.

    A class with some support (in labels or predictions) but zero
    precision+recall contributes 0.  A class absent from both sides is
    skipped, so single-class inputs are scored over the present class only.
    """
    preds = np.asarray(predictions, dtype=np.int64)
    labs = np.asarray(labels, dtype=np.int64)
    if preds.shape != labs.shape or preds.size == 0:
        raise ValueError("predictions and labels must be equal-length and non-empty")
    scores = []
    for c in (0, 1):
        tp = int(((preds == c) & (labs == c)).sum())
        fp = int(((preds == c) & (labs != c)).sum())
        fn = int(((preds != c) & (labs == c)).sum())
        if tp + fp + fn == 0:
            continue
        denom = 2 * tp + fp + fn
        scores.append((2 * tp / denom) if denom else 0.0)
    return float(np.mean(scores))


def latency_stats(durations):
    """Integer-nanosecond mean, population std, lower-middle median."""
    if len(durations) == 0:
        raise ValueError("no latency samples")
    d = np.asarray(durations, dtype=np.float64)
    ordered = np.sort(np.asarray(durations))
    return {
        "mean": int(round(float(d.mean()))),
        "std": int(round(float(d.std()))),
        "median": int(ordered[(len(ordered) - 1) // 2]),
    }


def measure(fn, inputs, warmup=WARMUP_CALLS):
    """Run fn over each input, returning (outputs, per-call duration ns).

    Warm-up calls on the first input are not recorded.  Durations are
    clamped to >= 1 ns.
    """
    if len(inputs) == 0:
        return [], []
    for _ in range(warmup):
        fn(inputs[0])
    outputs = []
    durations = []
    clock = time.perf_counter_ns
    for x in inputs:
        t0 = clock()
        out = fn(x)
        dt = clock() - t0
        outputs.append(out)
        durations.append(dt if dt > 0 else 1)
    return outputs, durations


def noop_ceiling(samples=2000):
    """Calibration ceiling: generous multiple of the cost of timing nothing.

    A measurement loop that times only its callable stays under this; one
    that accidentally includes feature extraction (microseconds) does not.
    """
    x = np.zeros(N_FEATURES, dtype=np.int64)
    _, ds = measure(lambda _: 0, [x] * samples)
    return 20 * latency_stats(ds)["median"] + 2000


def _build_infer(model, path, mode, t):
    if path == InferencePath.FLOAT_REFERENCE:
        if isinstance(model, TreeModel):
            return lambda xf: tree_predict(model, xf, t)[1]
        if isinstance(model, MlpModel):
            zt = logit_threshold(t)
            return lambda xf: 1 if mlp_logit(model, xf) >= zt else 0
        raise ValueError("float path needs a float model")
    if not isinstance(model, FixedModel):
        raise ValueError(f"{path.value} path needs a quantized model")
    if path == InferencePath.FIXED_POINT:
        if model.kind == "tree":
            return lambda xr: tree_predict_fixed(model, xr)[1]
        thr = model.decision_threshold_logit
        return lambda xr: classify_logit(mlp_logit_fixed(model, xr), thr)
    return make_interpreter(model, mode)


def _model_kind(model):
    if isinstance(model, TreeModel):
        return "tree"
    if isinstance(model, MlpModel):
        return "mlp"
    return model.kind


def extract_snapshots(trace, protected_prefixes):
    """Replay feature extraction only.

    Snapshot cadence: every accepted write, plus every 64th accepted event
    of a pid.  Returns (vectors_raw, labels, pids, timestamps).
    """
    table = StateTable()
    vecs = []
    labels = []
    pids = []
    stamps = []
    for ev in trace.events:
        ingest(table, ev, protected_prefixes)
        pid = table.last_accepted_pid
        if pid is None:
            continue
        st = table.states[pid]
        if ev.kind == EventKind.VfsWrite or st.accepted % SNAPSHOT_EVERY == 0:
            vecs.append(snapshot(st))
            labels.append(trace.labels[pid])
            pids.append(pid)
            stamps.append(ev.ts)
    X = np.array(vecs, dtype=np.int64) if vecs else np.zeros((0, N_FEATURES), dtype=np.int64)
    return X, np.array(labels, dtype=np.int64), pids, stamps


def replay(trace, model, path, protected_prefixes=("/data",), mode=EmitMode.RODATA, t=0.5):
    """Replay a trace through one inference path.

    Returns (predictions, MetricsReport) where predictions is a list of
    (ts, pid, predicted_label, true_label).
    """
    if isinstance(path, str):
        path = InferencePath(path)
    n_in = model_input_width(model)
    if n_in != N_FEATURES:
        raise ValueError(f"model expects {n_in} features, traces provide {N_FEATURES}")
    X, labels, pids, stamps = extract_snapshots(trace, protected_prefixes)
    if len(X) == 0:
        raise ValueError("trace produced no snapshots (no tainted activity)")
    infer = _build_infer(model, path, mode, t)
    if path == InferencePath.FLOAT_REFERENCE:
        inputs = [x / 65536.0 for x in X]
    else:
        inputs = list(X)
    outputs, durations = measure(infer, inputs)
    preds = np.array(outputs, dtype=np.int64)
    stats = latency_stats(durations)
    report = MetricsReport(
        path=path.value,
        model_kind=_model_kind(model),
        sample_size=len(preds),
        macro_f1=macro_f1(preds, labels),
        mean_ns=stats["mean"],
        std_ns=stats["std"],
        median_ns=stats["median"],
        single_class=len(set(labels.tolist())) == 1,
    )
    predictions = list(zip(stamps, pids, preds.tolist(), labels.tolist()))
    return predictions, report


def model_input_width(model):
    if isinstance(model, TreeModel):
        return N_FEATURES  # feature indices validated against N_FEATURES
    if isinstance(model, MlpModel):
        return model.layers[0][0].shape[1]
    if isinstance(model, FixedModel):
        if model.kind == "mlp":
            return model.layers[0][0].shape[1]
        return N_FEATURES
    raise ValueError(f"unknown model type {type(model).__name__}")


_TABLE_HEADER = (
    f"{'model':<7}{'path':<12}{'samples':>8}  {'macro_f1':>8}  "
    f"{'mean_ns':>9}  {'std_ns':>9}  {'median_ns':>9}"
)


def report_table(reports):
    """Fixed-width text table, byte-stable for identical report values."""
    lines = [_TABLE_HEADER, "-" * len(_TABLE_HEADER)]
    for r in reports:
        f1 = f"{r.macro_f1:.3f}" + ("*" if r.single_class else "")
        lines.append(
            f"{r.model_kind:<7}{r.path:<12}{r.sample_size:>8}  {f1:>8}  "
            f"{r.mean_ns:>9}  {r.std_ns:>9}  {r.median_ns:>9}"
        )
    if any(r.single_class for r in reports):
        lines.append("* single-class trace: F1 computed over the present class only")
    return "\n".join(lines) + "\n"
