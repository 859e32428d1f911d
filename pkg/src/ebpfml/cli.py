"""Operator command line: generate traces, build datasets, train, quantize,
emit restricted C, lint, replay, and benchmark.

Exit codes: 0 success, 2 usage, 3 data error, 4 lint violations.  Failures
print a single machine-parseable `error: ...` line on stderr.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .bench import PipelineConfig, kernel_bench, run_bench, seedsweep
from .compiler import (
    EmitError,
    EmitMode,
    LintParseError,
    QuantizationError,
    emit,
    lint_restricted,
    pack_blob,
    quantize,
    support_source,
)
from .features import N_FEATURES
from .fixedpoint import FxDomainError
from .models import ModelFormatError, load_model, save_model
from .replay import InferencePath, extract_snapshots, replay, report_table
from .tracegen import (
    BenignProfile,
    MergeError,
    RansomwareProfile,
    TraceFormatError,
    gen_benign,
    gen_ransomware,
    load_trace,
    merge,
    save_trace,
)
from .training import (
    Dataset,
    DatasetFormatError,
    TrainConfig,
    TrainingError,
    load_dataset,
    save_dataset,
    train_mlp,
    train_tree,
)

_DATA_ERRORS = (
    TraceFormatError,
    DatasetFormatError,
    ModelFormatError,
    TrainingError,
    QuantizationError,
    EmitError,
    LintParseError,
    FxDomainError,
    MergeError,
    ValueError,
    OSError,
)


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_gen(args):
    bp = BenignProfile(
        compress_prob=args.compress_prob,
        files=args.files,
        rate=args.rate,
        workers=args.workers,
    )
    rp = RansomwareProfile(
        files=args.ransom_files,
        fanout=args.fanout,
        burst=args.burst,
        action=args.action,
    )
    if args.scenario == "benign":
        trace = gen_benign(bp, seed=args.seed, duration=args.duration)
    elif args.scenario == "ransomware":
        trace = gen_ransomware(rp, seed=args.seed)
    else:
        trace = merge(
            gen_benign(bp, seed=args.seed, duration=args.duration),
            gen_ransomware(rp, seed=args.seed),
        )
        trace.header["scenario"] = "mixed"
    save_trace(trace, args.out)
    print(f"wrote {args.out}: {len(trace.events)} events, sha256 {_sha256_file(args.out)}")
    return 0


def cmd_dataset(args):
    Xs, ys, meta_traces = [], [], []
    for tpath in args.traces:
        trace = load_trace(tpath)
        X, y, _, _ = extract_snapshots(trace, tuple(args.prefix))
        Xs.append(X)
        ys.append(y)
        meta_traces.append({
            "path": os.path.basename(tpath),
            "sha256": _sha256_file(tpath),
            "seed": trace.header.get("seed"),
            "scenario": trace.scenario,
        })
    X = np.concatenate(Xs) if Xs else np.zeros((0, N_FEATURES), dtype=np.int64)
    y = np.concatenate(ys) if ys else np.zeros(0, dtype=np.int64)
    if len(X) == 0:
        raise DatasetFormatError("traces produced no snapshots")
    ds = Dataset(X=X.astype(np.float64) / 65536.0, y=y.astype(np.int64))
    save_dataset(ds, args.out, meta={"traces": meta_traces, "prefixes": list(args.prefix)})
    print(f"wrote {args.out}: {ds.n} rows ({int(ds.y.sum())} malicious)")
    return 0


def cmd_train(args):
    ds, header = load_dataset(args.dataset)
    cfg = TrainConfig(seed=args.seed, lr=args.lr, max_epochs=args.max_epochs)
    if args.kind == "tree":
        model = train_tree(ds)
    else:
        model = train_mlp(ds, cfg)
    meta = {
        "dataset_sha256": _sha256_file(args.dataset),
        "seed": args.seed,
        "train_config": {"lr": cfg.lr, "max_epochs": cfg.max_epochs},
    }
    save_model(model, args.out, meta=meta)
    print(f"wrote {args.out}: {args.kind} model, sha256 {_sha256_file(args.out)}")
    return 0


def cmd_quantize(args):
    model = load_model(args.model)
    fm = quantize(model, args.threshold)
    meta = {"source_model_sha256": _sha256_file(args.model), "threshold": args.threshold}
    save_model(fm, args.out, decision_threshold=args.threshold, meta=meta)
    print(f"wrote {args.out}: quantized {fm.kind}, sha256 {_sha256_file(args.out)}")
    return 0


def cmd_emit(args):
    fm = load_model(args.model)
    if not hasattr(fm, "kind") or not hasattr(fm, "decision_threshold_logit"):
        raise ModelFormatError("emit needs a quantized model file")
    mode = EmitMode(args.mode)
    gen = emit(fm, mode)
    os.makedirs(args.out_dir, exist_ok=True)
    c_path = os.path.join(args.out_dir, "classify.c")
    m_path = os.path.join(args.out_dir, "manifest.json")
    s_path = os.path.join(args.out_dir, "support.c")
    with open(c_path, "w", encoding="utf-8") as f:
        f.write(gen.source_text)
    _write_json(m_path, gen.manifest)
    with open(s_path, "w", encoding="utf-8") as f:
        f.write(support_source())
    written = [c_path, m_path, s_path]
    if mode == EmitMode.MAP_LOADED:
        b_path = os.path.join(args.out_dir, "params.bin")
        with open(b_path, "wb") as f:
            f.write(pack_blob(fm))
        written.append(b_path)
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_lint(args):
    with open(args.source, "r", encoding="utf-8") as f:
        src = f.read()
    violations = lint_restricted(src)
    for v in violations:
        print(f"{args.source}:{v['line']}: {v['rule']}: {v['detail']}")
    if violations:
        return 4
    print("ok")
    return 0


def cmd_replay(args):
    trace = load_trace(args.trace)
    model = load_model(args.model)
    predictions, report = replay(
        trace, model, InferencePath(args.path),
        protected_prefixes=tuple(args.prefix),
        mode=EmitMode(args.mode),
        t=args.threshold,
    )
    print(report_table([report]), end="")
    if args.out:
        doc = {
            "schema": 1,
            "inputs": {
                "trace_sha256": _sha256_file(args.trace),
                "model_sha256": _sha256_file(args.model),
                "trace_seed": trace.header.get("seed"),
            },
            "report": report.to_dict(),
            "predictions": [
                {"ts": ts, "pid": pid, "pred": int(p), "label": int(l)}
                for ts, pid, p, l in predictions
            ],
        }
        _write_json(args.out, doc)
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args):
    seeds = tuple(int(s) for s in args.seeds.split(","))
    cfg = PipelineConfig(seeds=seeds, emit_mode=EmitMode(args.mode))
    out = run_bench(cfg)
    print(out["text"], end="")
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        _write_json(
            os.path.join(args.out_dir, "bench.json"),
            {
                "schema": 1,
                "seeds": list(seeds),
                "per_seed": out["per_seed"],
                "min_f1": out["min_f1"],
                "reports": [r.to_dict() for r in out["reports"]],
            },
        )
        with open(os.path.join(args.out_dir, "bench.txt"), "w", encoding="utf-8") as f:
            f.write(out["text"])
        print(f"wrote {args.out_dir}/bench.json")
    return 0


def cmd_seedsweep(args):
    out = seedsweep(args.n, base_seed=args.base_seed)
    print(out["text"], end="")
    return 0


def cmd_kernelbench(args):
    out = kernel_bench()
    print(out["text"], end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    ap = argparse.ArgumentParser(
        prog="ebpfml",
        description="train, quantize, and compile tiny detectors to restricted C; replay traces to verify them",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic event trace")
    p.add_argument("scenario", choices=["benign", "ransomware", "mixed"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=10.0, help="benign workload seconds")
    p.add_argument("--out", required=True)
    p.add_argument("--compress-prob", type=float, default=0.0)
    p.add_argument("--files", type=int, default=40)
    p.add_argument("--rate", type=float, default=400.0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--ransom-files", type=int, default=50)
    p.add_argument("--fanout", type=int, default=1)
    p.add_argument("--burst", type=int, default=32)
    p.add_argument("--action", choices=["rename", "unlink"], default="rename")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("dataset", help="extract labeled snapshot vectors from traces")
    p.add_argument("traces", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--prefix", action="append", default=None)
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("dataset")
    p.add_argument("--kind", choices=["tree", "mlp"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--max-epochs", type=int, default=10000)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("quantize", help="convert a float model to Q47.16")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(fn=cmd_quantize)

    p = sub.add_parser("emit", help="emit restricted C + manifest from a quantized model")
    p.add_argument("model")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mode", choices=["rodata", "maploaded"], default="rodata")
    p.set_defaults(fn=cmd_emit)

    p = sub.add_parser("lint", help="check C source against the restricted subset")
    p.add_argument("source")
    p.set_defaults(fn=cmd_lint)

    p = sub.add_parser("replay", help="replay a trace through one inference path")
    p.add_argument("trace")
    p.add_argument("model")
    p.add_argument("--path", choices=[ip.value for ip in InferencePath], required=True)
    p.add_argument("--mode", choices=["rodata", "maploaded"], default="rodata")
    p.add_argument("--prefix", action="append", default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("bench", help="full pipeline benchmark across seeds")
    p.add_argument("--seeds", default="1,2,3,4,5")
    p.add_argument("--mode", choices=["rodata", "maploaded"], default="rodata")
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("seedsweep", help="F1 spread over n training seeds")
    p.add_argument("n", type=int)
    p.add_argument("--base-seed", type=int, default=1)
    p.set_defaults(fn=cmd_seedsweep)

    p = sub.add_parser("kernelbench", help="numba backend vs pure fallback on hot kernels")
    p.set_defaults(fn=cmd_kernelbench)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "prefix", None) is not None and not args.prefix:
        args.prefix = None
    if hasattr(args, "prefix") and args.prefix is None:
        args.prefix = ["/data"]
    try:
        return args.fn(args)
    except _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
