"""Per-process feature extraction from kernel-style event streams.

Events are filtered by protected path prefix and by process taint: a pid
becomes tainted the moment it touches a protected path, and from then on
every one of its events is counted regardless of path.  Write payloads
carry a 256-bucket byte histogram from which Shannon entropy and Pearson
chi-squared are computed entirely in Q47.16.
"""

import struct
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels
from .fixedpoint import FX_MAX, FX_ONE, FxDomainError, to_fixed

WINDOW = 32
N_FEATURES = 12
HIST_SAMPLE_BYTES = 4096

FEATURE_NAMES = [
    "file_permission_count",
    "file_open_count",
    "inode_create_count",
    "inode_unlink_count",
    "inode_rmdir_count",
    "inode_rename_count",
    "getdents64_count",
    "vfs_read_count",
    "vfs_write_count",
    "entropy_mean",
    "chi2_mean",
    "bytes_written",
]


class EventKind(IntEnum):
    FilePermission = 0
    FileOpen = 1
    InodeCreate = 2
    InodeUnlink = 3
    InodeRmdir = 4
    InodeRename = 5
    Getdents64 = 6
    VfsRead = 7
    VfsWrite = 8


@dataclass
class Event:
    ts: int
    pid: int
    kind: EventKind
    path: str
    bytes: int = 0
    hist: "np.ndarray | None" = None

    def validate(self):
        if self.ts < 0:
            raise ValueError("event ts must be non-negative")
        if self.pid < 0:
            raise ValueError("event pid must be non-negative")
        if (self.hist is not None) != (self.kind == EventKind.VfsWrite):
            raise ValueError("hist present iff kind is VfsWrite")
        if self.hist is not None:
            if len(self.hist) != 256:
                raise ValueError("hist must have 256 buckets")
            if int(np.sum(self.hist)) > self.bytes:
                raise ValueError("hist covers at most `bytes` bytes")
        if self.kind not in (EventKind.VfsRead, EventKind.VfsWrite) and self.bytes != 0:
            raise ValueError("bytes only meaningful for read/write events")


@dataclass
class ProcessState:
    pid: int
    counts: "list[int]" = field(default_factory=lambda: [0] * 9)
    bytes_written: int = 0
    entropy_window: deque = field(default_factory=lambda: deque(maxlen=WINDOW))
    chi2_window: deque = field(default_factory=lambda: deque(maxlen=WINDOW))
    tainted: bool = False
    accepted: int = 0


class StateTable:
    """Single-writer table of per-pid states plus a dropped-event counter."""

    def __init__(self):
        self.states = {}
        self.drops = 0
        # set by ingest(): pid of the event just accepted, or None if dropped
        self.last_accepted_pid = None

    def get(self, pid):
        return self.states.get(pid)


def shannon_entropy(hist):
    """Shannon entropy of a 256-bucket count histogram, as raw Fx bits.

    Clamped to [0, 8].  Empty histogram is a domain error.
    """
    hist = np.ascontiguousarray(hist, dtype=np.int64)
    n = int(hist.sum())
    if n <= 0:
        raise FxDomainError("entropy of an empty histogram")
    return int(_kernels.entropy_raw(hist, n))


def chi_squared(hist):
    """Pearson chi-squared against the uniform byte distribution, as raw Fx.

    Empty histogram is a domain error.
    """
    hist = np.ascontiguousarray(hist, dtype=np.int64)
    n = int(hist.sum())
    if n <= 0:
        raise FxDomainError("chi-squared of an empty histogram")
    return int(_kernels.chi2_raw(hist, n))


def path_is_protected(path, protected_prefixes):
    for pfx in protected_prefixes:
        if not pfx:
            continue
        p = pfx.rstrip("/") or "/"
        if path == p or p == "/" or path.startswith(p + "/"):
            return True
    return False


def ingest(table, event, protected_prefixes):
    """Feed one event into the state table; returns the table.

    Tainting: an event on a protected path taints its pid (and is itself
    counted).  Tainted pids are counted on every path.  Everything else is
    dropped silently into table.drops.
    """
    state = table.states.get(event.pid)
    if path_is_protected(event.path, protected_prefixes):
        if state is None:
            state = ProcessState(pid=event.pid)
            table.states[event.pid] = state
        state.tainted = True
    if state is None or not state.tainted:
        table.drops += 1
        table.last_accepted_pid = None
        return table
    state.counts[int(event.kind)] += 1
    state.accepted += 1
    if event.kind == EventKind.VfsWrite:
        state.bytes_written += event.bytes
        if event.hist is not None:
            h = np.ascontiguousarray(event.hist, dtype=np.int64)
            n = int(h.sum())
            if n > 0:
                state.entropy_window.append(int(_kernels.entropy_raw(h, n)))
                state.chi2_window.append(int(_kernels.chi2_raw(h, n)))
    table.last_accepted_pid = event.pid
    return table


def _window_mean_raw(window):
    if not window:
        return 0
    return sum(window) // len(window)


def snapshot(state):
    """Materialize the 12-entry Fx feature vector for a tainted state."""
    if not state.tainted:
        raise ValueError("snapshot of an untainted process state")
    vec = np.zeros(N_FEATURES, dtype=np.int64)
    for k in range(9):
        vec[k] = to_fixed(state.counts[k])
    vec[9] = _window_mean_raw(state.entropy_window)
    vec[10] = _window_mean_raw(state.chi2_window)
    vec[11] = to_fixed(state.bytes_written)
    return vec


# Packed little-endian mirror of ProcessState shared with the kernel-side
# component; offsets here are the single source of truth and are copied
# into every compiler manifest.
STATE_RECORD_LAYOUT = [
    {"name": "counts", "offset": 0, "size": 72, "type": "u64[9]"},
    {"name": "bytes_written", "offset": 72, "size": 8, "type": "u64"},
    {"name": "entropy_sum", "offset": 80, "size": 8, "type": "s64"},
    {"name": "chi2_sum", "offset": 88, "size": 8, "type": "s64"},
    {"name": "entropy_len", "offset": 96, "size": 4, "type": "u32"},
    {"name": "chi2_len", "offset": 100, "size": 4, "type": "u32"},
    {"name": "tainted", "offset": 104, "size": 4, "type": "u32"},
    {"name": "_pad", "offset": 108, "size": 4, "type": "u32"},
]
STATE_RECORD_SIZE = 112

VERDICT_RECORD_LAYOUT = [
    {"name": "ts", "offset": 0, "size": 8, "type": "u64"},
    {"name": "pid", "offset": 8, "size": 4, "type": "u32"},
    {"name": "label", "offset": 12, "size": 4, "type": "s32"},
    {"name": "inference_ns", "offset": 16, "size": 8, "type": "u64"},
]
VERDICT_RECORD_SIZE = 24


def pack_state_record(state):
    """Encode a ProcessState into the shared little-endian record layout."""
    return struct.pack(
        "<9QQqqIIII",
        *[c & 0xFFFFFFFFFFFFFFFF for c in state.counts],
        state.bytes_written & 0xFFFFFFFFFFFFFFFF,
        sum(state.entropy_window),
        sum(state.chi2_window),
        len(state.entropy_window),
        len(state.chi2_window),
        1 if state.tainted else 0,
        0,
    )


def pack_verdict_record(ts, pid, label, inference_ns):
    return struct.pack("<QIiQ", ts, pid, label, inference_ns)
