"""Deterministic synthesis of labeled process-event traces.

Two generators: a benign client-workload emulator (file reads, writes,
deletes with text-like or compressed content) and a ransomware behavior
emulator (directory enumeration bursts, read-encrypt-write sweeps, renames
or unlinks).  Byte histograms are synthesized directly from target byte
distributions; no file contents are materialized since downstream feature
extraction consumes histograms only.

Trace file format (schema 1): one JSON header line, then one event per
line, tab-separated: ts, pid, kind code, path, bytes, histogram.  The
histogram field is "-" when absent, sparse "idx:count,..." pairs, or 256
comma-separated counts.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .features import HIST_SAMPLE_BYTES, Event, EventKind

TRACE_SCHEMA = 1

BENIGN_PID_BASE = 1000
RANSOM_PID_BASE = 2000


class TraceFormatError(ValueError):
    pass


class MergeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# byte distributions

# representative latin filler text; its byte frequency profile is what the
# benign generator's plain-text writes follow
_TEXT_SAMPLE = (
    "lorem ipsum dolor sit amet consectetur adipiscing elit sed do eiusmod "
    "tempor incididunt ut labore et dolore magna aliqua ut enim ad minim "
    "veniam quis nostrud exercitation ullamco laboris nisi ut aliquip ex ea "
    "commodo consequat duis aute irure dolor in reprehenderit in voluptate "
    "velit esse cillum dolore eu fugiat nulla pariatur excepteur sint "
    "occaecat cupidatat non proident sunt in culpa qui officia deserunt "
    "mollit anim id est laborum. Sed ut perspiciatis unde omnis iste natus "
    "error sit voluptatem accusantium doloremque laudantium, totam rem "
    "aperiam, eaque ipsa quae ab illo inventore veritatis et quasi "
    "architecto beatae vitae dicta sunt explicabo. Nemo enim ipsam "
    "voluptatem quia voluptas sit aspernatur aut odit aut fugit.\n"
)


def _text_dist():
    counts = np.zeros(256, dtype=np.float64)
    for b in _TEXT_SAMPLE.encode("ascii"):
        counts[b] += 1
    return counts / counts.sum()


TEXT_DIST = _text_dist()
UNIFORM_DIST = np.full(256, 1.0 / 256)


def float_entropy(hist):
    """Float Shannon entropy (bits) of a byte-count histogram. Oracle-side."""
    hist = np.asarray(hist, dtype=np.float64)
    n = hist.sum()
    if n <= 0:
        return 0.0
    p = hist[hist > 0] / n
    return float(-(p * np.log2(p)).sum())


def dist_entropy(p):
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def dist_for_entropy(target):
    """Mix of text and uniform byte distributions with the given entropy.

    Bisection on the mixing weight; monotone because entropy of the mixture
    increases with the uniform share.
    """
    lo_h = dist_entropy(TEXT_DIST)
    hi_h = dist_entropy(UNIFORM_DIST)
    if target <= lo_h:
        return TEXT_DIST.copy()
    if target >= hi_h:
        return UNIFORM_DIST.copy()
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        h = dist_entropy((1 - mid) * TEXT_DIST + mid * UNIFORM_DIST)
        if h < target:
            lo = mid
        else:
            hi = mid
    m = (lo + hi) / 2
    return (1 - m) * TEXT_DIST + m * UNIFORM_DIST


def _sample_hist(rng, dist, nbytes):
    n = min(int(nbytes), HIST_SAMPLE_BYTES)
    return rng.multinomial(n, dist).astype(np.int64)


# ---------------------------------------------------------------------------
# profiles and traces


@dataclass
class BenignProfile:
    files: int = 40
    min_size: int = 1024
    max_size: int = 4 * 1024 * 1024
    extensions: tuple = (".txt", ".md", ".doc", ".pdf", ".jpg", ".png", ".c", ".py", ".csv", ".html")
    compress_prob: float = 0.0
    read_frac: float = 0.45
    write_frac: float = 0.45
    delete_frac: float = 0.10
    rate: float = 400.0
    workers: int = 4
    root: str = "/data"
    pid_base: int = BENIGN_PID_BASE

    def validate(self):
        if self.files < 1:
            raise ValueError("files must be >= 1")
        if self.min_size < 1024:
            raise ValueError("sizes must be >= 1 KiB")
        if self.max_size < self.min_size:
            raise ValueError("max_size < min_size")
        for name in ("compress_prob", "read_frac", "write_frac", "delete_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        total = self.read_frac + self.write_frac + self.delete_frac
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("read/write/delete mix must sum to 1")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self


@dataclass
class RansomwareProfile:
    files: int = 50
    burst: int = 32
    read_write_ratio: float = 1.0
    entropy_target: float = 7.9
    action: str = "rename"
    fanout: int = 1
    mixed: bool = False
    min_size: int = 1024
    max_size: int = 1024 * 1024
    gap_us: float = 50.0
    root: str = "/data"
    pid_base: int = RANSOM_PID_BASE

    def validate(self):
        if self.files < 1:
            raise ValueError("files must be >= 1")
        if self.burst < 1:
            raise ValueError("burst must be >= 1")
        if not 7.5 < self.entropy_target <= 8.0:
            raise ValueError("entropy_target must be in (7.5, 8]")
        if self.action not in ("rename", "unlink"):
            raise ValueError("action must be 'rename' or 'unlink'")
        if self.fanout < 1:
            raise ValueError("fanout must be >= 1")
        if self.read_write_ratio <= 0:
            raise ValueError("read_write_ratio must be positive")
        if self.min_size < 1024 or self.max_size < self.min_size:
            raise ValueError("bad size range")
        return self


@dataclass
class Trace:
    header: dict
    events: list = field(default_factory=list)

    @property
    def scenario(self):
        return self.header["scenario"]

    @property
    def labels(self):
        return self.header["labels"]

    def validate(self):
        if self.header.get("schema") != TRACE_SCHEMA:
            raise TraceFormatError(f"unsupported trace schema {self.header.get('schema')}")
        last = -1
        for ev in self.events:
            if ev.ts < last:
                raise TraceFormatError("timestamps must be non-decreasing")
            last = ev.ts
            if ev.pid not in self.header["labels"]:
                raise TraceFormatError(f"pid {ev.pid} missing from label table")
            ev.validate()
        return self


def _log_uniform_size(rng, lo, hi):
    if lo >= hi:
        return lo
    return int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))


def gen_benign(profile=None, seed=0, duration=10.0):
    """Benign client workload: open/read/write/create/delete on a file pool."""
    profile = (profile or BenignProfile()).validate()
    rng = np.random.default_rng([int(seed), 0xBE])
    n_events = int(duration * profile.rate)
    pids = [profile.pid_base + i for i in range(profile.workers)]
    names = [
        f"{profile.root}/docs/file_{i:04d}{profile.extensions[i % len(profile.extensions)]}"
        for i in range(profile.files)
    ]
    exists = [False] * profile.files
    events = []
    ts = 1_000_000_000
    mix = np.array([profile.read_frac, profile.write_frac, profile.delete_frac])
    made = 0
    while made < n_events:
        ts += max(1, int(rng.exponential(1e9 / profile.rate)))
        pid = pids[int(rng.integers(len(pids)))]
        fi = int(rng.integers(profile.files))
        path = names[fi]
        op = int(rng.choice(3, p=mix))
        if op == 2 and not exists[fi]:
            op = 0
        if op == 0:
            if not exists[fi]:
                op = 1  # nothing to read yet, write it first
            else:
                size = _log_uniform_size(rng, profile.min_size, profile.max_size)
                events.append(Event(ts, pid, EventKind.FileOpen, path))
                ts += 1 + int(rng.integers(2000))
                events.append(Event(ts, pid, EventKind.VfsRead, path, bytes=size))
                made += 2
                continue
        if op == 1:
            size = _log_uniform_size(rng, profile.min_size, profile.max_size)
            if not exists[fi]:
                events.append(Event(ts, pid, EventKind.InodeCreate, path))
                ts += 1 + int(rng.integers(500))
                made += 1
                exists[fi] = True
            events.append(Event(ts, pid, EventKind.FileOpen, path))
            ts += 1 + int(rng.integers(2000))
            compressed = rng.random() < profile.compress_prob
            dist = UNIFORM_DIST if compressed else TEXT_DIST
            hist = _sample_hist(rng, dist, size)
            events.append(Event(ts, pid, EventKind.VfsWrite, path, bytes=size, hist=hist))
            made += 2
        else:
            events.append(Event(ts, pid, EventKind.InodeUnlink, path))
            exists[fi] = False
            made += 1
    header = {
        "schema": TRACE_SCHEMA,
        "seed": int(seed),
        "scenario": "benign",
        "labels": {pid: 0 for pid in pids},
    }
    return Trace(header=header, events=events).validate()


def gen_ransomware(profile=None, seed=0, duration=None):
    """Ransomware pattern: getdents bursts, then per-file read/encrypted
    write, then a rename or unlink.  fanout > 1 splits the victim pool over
    several pids, each running the full pattern."""
    profile = (profile or RansomwareProfile()).validate()
    rng = np.random.default_rng([int(seed), 0xBAD])
    dist = dist_for_entropy(profile.entropy_target)
    names = [f"{profile.root}/docs/victim_{i:04d}.dat" for i in range(profile.files)]
    pid_files = {
        profile.pid_base + j: [names[i] for i in range(profile.files) if i % profile.fanout == j]
        for j in range(profile.fanout)
    }
    # pattern length drives the clock; an explicit duration rescales the gap
    n_steps = profile.files * 6 + profile.files // profile.burst + profile.fanout
    gap_ns = (duration * 1e9 / n_steps) if duration else profile.gap_us * 1000.0
    events = []
    ts = 1_000_000_000
    for pid, files in sorted(pid_files.items()):
        for start in range(0, len(files), profile.burst):
            group = files[start : start + profile.burst]
            dirpath = f"{profile.root}/docs"
            for _ in range(min(profile.burst, len(group))):
                ts += max(1, int(rng.exponential(gap_ns)))
                events.append(Event(ts, pid, EventKind.Getdents64, dirpath))
            for path in group:
                size = _log_uniform_size(rng, profile.min_size, profile.max_size)
                ts += max(1, int(rng.exponential(gap_ns)))
                events.append(Event(ts, pid, EventKind.FileOpen, path))
                n_reads = max(1, int(round(profile.read_write_ratio)))
                for _ in range(n_reads):
                    ts += max(1, int(rng.exponential(gap_ns)))
                    events.append(Event(ts, pid, EventKind.VfsRead, path, bytes=size))
                ts += max(1, int(rng.exponential(gap_ns)))
                hist = _sample_hist(rng, dist, size)
                events.append(Event(ts, pid, EventKind.VfsWrite, path, bytes=size, hist=hist))
                ts += max(1, int(rng.exponential(gap_ns)))
                if profile.action == "rename":
                    events.append(Event(ts, pid, EventKind.InodeRename, path))
                else:
                    events.append(Event(ts, pid, EventKind.InodeUnlink, path))
    header = {
        "schema": TRACE_SCHEMA,
        "seed": int(seed),
        "scenario": "ransomware",
        "labels": {pid: 1 for pid in sorted(pid_files)},
    }
    tr = Trace(header=header, events=events).validate()
    if profile.mixed:
        benign = gen_benign(seed=seed, duration=len(events) * gap_ns / 1e9)
        tr = merge(tr, benign)
        tr.header["scenario"] = "mixed"
    return tr


def merge(*traces):
    """Timestamp-stable merge of traces with disjoint pid spaces."""
    if not traces:
        raise MergeError("nothing to merge")
    labels = {}
    for tr in traces:
        for pid, lab in tr.labels.items():
            if pid in labels:
                raise MergeError(f"pid {pid} appears in more than one trace")
            labels[pid] = lab
    decorated = []
    for ti, tr in enumerate(traces):
        for si, ev in enumerate(tr.events):
            decorated.append((ev.ts, ti, si, ev))
    decorated.sort(key=lambda d: (d[0], d[1], d[2]))
    header = {
        "schema": TRACE_SCHEMA,
        "seed": traces[0].header.get("seed", 0),
        "scenario": "+".join(tr.scenario for tr in traces),
        "labels": labels,
    }
    return Trace(header=header, events=[d[3] for d in decorated]).validate()


# ---------------------------------------------------------------------------
# serialization (schema 1)


def _hist_to_text(hist):
    if hist is None:
        return "-"
    nz = np.nonzero(hist)[0]
    if len(nz) <= 128:
        return ",".join(f"{int(i)}:{int(hist[i])}" for i in nz) or "0:0"
    return ",".join(str(int(c)) for c in hist)


def _hist_from_text(text):
    if text == "-":
        return None
    parts = text.split(",")
    hist = np.zeros(256, dtype=np.int64)
    if ":" in parts[0]:
        for part in parts:
            idx, _, cnt = part.partition(":")
            i = int(idx)
            if not 0 <= i < 256:
                raise TraceFormatError(f"histogram index {i} out of range")
            hist[i] = int(cnt)
        return hist
    if len(parts) != 256:
        raise TraceFormatError(f"dense histogram needs 256 counts, got {len(parts)}")
    for i, part in enumerate(parts):
        hist[i] = int(part)
    return hist


def dumps_trace(trace):
    header = dict(trace.header)
    header["labels"] = {str(pid): int(lab) for pid, lab in trace.header["labels"].items()}
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for ev in trace.events:
        lines.append(
            f"{ev.ts}\t{ev.pid}\t{int(ev.kind)}\t{ev.path}\t{ev.bytes}\t{_hist_to_text(ev.hist)}"
        )
    return "\n".join(lines) + "\n"


def loads_trace(text):
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError("empty trace file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"bad trace header: {e}") from None
    if not isinstance(header, dict) or header.get("schema") != TRACE_SCHEMA:
        raise TraceFormatError("missing or unsupported trace schema")
    try:
        header["labels"] = {int(pid): int(lab) for pid, lab in header["labels"].items()}
    except (KeyError, TypeError, ValueError):
        raise TraceFormatError("bad label table") from None
    events = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise TraceFormatError(f"line {ln}: expected 6 tab-separated fields, got {len(parts)}")
        try:
            ts, pid, kind, path, nbytes, hist_text = parts
            ev = Event(
                ts=int(ts),
                pid=int(pid),
                kind=EventKind(int(kind)),
                path=path,
                bytes=int(nbytes),
                hist=_hist_from_text(hist_text),
            )
        except (ValueError, TraceFormatError) as e:
            raise TraceFormatError(f"line {ln}: {e}") from None
        events.append(ev)
    return Trace(header=header, events=events).validate()


def save_trace(trace, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_trace(trace))


def load_trace(path):
    with open(path, "r", encoding="utf-8") as f:
        return loads_trace(f.read())
