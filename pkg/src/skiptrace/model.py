"""Trace data model and Chrome-trace-event parsing.

All timestamps are stored as integer nanosecond ticks. Source files carry
decimal microseconds; values are converted exactly once at parse time
(microseconds x 1000, rounded half to even) so that every downstream
metric is exact integer arithmetic, reproducible bit-for-bit across
platforms.
"""

from __future__ import annotations

import gzip
import json
import logging
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import EmptyTrace, MalformedTrace, MissingField, MissingInput

log = logging.getLogger(__name__)

# Nanoseconds since the trace epoch. Values must stay inside the signed
# 64-bit range so reports are portable to fixed-width consumers.
Tick = int

TICK_MAX = 2**63 - 1

LAUNCH_NAMES = frozenset(
    {"cudaLaunchKernel", "cuLaunchKernel", "cudaLaunchKernelExC"}
)
SYNC_NAMES = frozenset(
    {"cudaDeviceSynchronize", "cudaStreamSynchronize", "cudaEventSynchronize"}
)

# Argument keys probed for each logical field, in priority order. Profiler
# export key names vary across framework versions; a user-supplied mapping
# replaces the defaults per field.
DEFAULT_FIELD_KEYS: dict[str, tuple[str, ...]] = {
    "correlation": ("correlation", "Correlation Id", "External id"),
    "stream": ("stream",),
    "device": ("device",),
}


class EventKind(Enum):
    """Classification of a trace record."""

    CPU_OP = "CpuOp"
    RUNTIME_CALL = "RuntimeCall"
    KERNEL = "Kernel"
    SYNC = "Sync"
    MEMCPY = "Memcpy"
    OTHER = "Other"


# Tie-break order for events sharing a begin tick: CPU operators sort
# before the runtime calls they contain, which sort before device events.
KIND_PRIORITY: dict[EventKind, int] = {
    EventKind.CPU_OP: 0,
    EventKind.RUNTIME_CALL: 1,
    EventKind.KERNEL: 2,
    EventKind.SYNC: 3,
    EventKind.MEMCPY: 4,
    EventKind.OTHER: 5,
}

_CANONICAL_CATEGORY: dict[EventKind, str] = {
    EventKind.CPU_OP: "cpu_op",
    EventKind.RUNTIME_CALL: "cuda_runtime",
    EventKind.KERNEL: "kernel",
    EventKind.SYNC: "cuda_runtime",
    EventKind.MEMCPY: "gpu_memcpy",
    EventKind.OTHER: "other",
}


def classify_event(category: str, name: str) -> EventKind:
    """Map a raw (category, name) pair onto an EventKind.

    Total function: anything unrecognized is OTHER, never an error.
    """
    if category == "cpu_op":
        return EventKind.CPU_OP
    if category == "cuda_runtime":
        if name in LAUNCH_NAMES:
            return EventKind.RUNTIME_CALL
        if name in SYNC_NAMES:
            return EventKind.SYNC
        return EventKind.OTHER
    if category == "kernel":
        return EventKind.KERNEL
    if category in ("gpu_memcpy", "gpu_memset"):
        return EventKind.MEMCPY
    return EventKind.OTHER


def us_to_ns(value: int | Decimal) -> Tick:
    """Convert a decimal-microsecond value to integer nanoseconds.

    Multiplies by 1000 and rounds half to even. Exact for any decimal
    literal the JSON parser hands us (parse_float=Decimal).
    """
    if isinstance(value, int):
        return value * 1000
    return int((value * 1000).to_integral_value(rounding=ROUND_HALF_EVEN))


def ns_to_us_json(ns: Tick) -> int | float:
    """Inverse of us_to_ns for serialization.

    Integer microseconds stay integers; sub-microsecond ticks become the
    float nearest ns/1000, whose shortest repr re-parses to the same tick.
    """
    if ns % 1000 == 0:
        return ns // 1000
    return ns / 1000


@dataclass(frozen=True, slots=True)
class FieldMap:
    """Per-field argument-key overrides for parsing."""

    correlation: tuple[str, ...] = DEFAULT_FIELD_KEYS["correlation"]
    stream: tuple[str, ...] = DEFAULT_FIELD_KEYS["stream"]
    device: tuple[str, ...] = DEFAULT_FIELD_KEYS["device"]

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> "FieldMap":
        kwargs = {}
        for name in ("correlation", "stream", "device"):
            if name in obj:
                keys = obj[name]
                if isinstance(keys, str):
                    keys = [keys]
                kwargs[name] = tuple(str(k) for k in keys)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "FieldMap":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        if not isinstance(obj, dict):
            raise MalformedTrace(f"field map {path} must be a JSON object")
        return cls.from_mapping(obj)


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """One timestamped profiler record.

    tid holds the CPU thread for CPU-side events and mirrors the source
    file's thread field for device events (kineto uses the stream there).
    """

    kind: EventKind
    name: str
    category: str
    pid: int
    tid: int
    begin: Tick
    duration: Tick
    correlation: int | None = None
    stream: int | None = None
    device: int | None = None

    @property
    def end(self) -> Tick:
        return self.begin + self.duration

    def sort_key(self) -> tuple[int, int]:
        return (self.begin, KIND_PRIORITY[self.kind])


@dataclass(frozen=True)
class Trace:
    """A validated, time-ordered event collection plus source metadata."""

    events: tuple[TraceEvent, ...]
    meta: dict[str, Any] = field(default_factory=dict)

    def kind_counts(self) -> dict[str, int]:
        counts = {kind.value: 0 for kind in EventKind}
        for ev in self.events:
            counts[ev.kind.value] += 1
        return counts

    def events_of(self, *kinds: EventKind) -> list[TraceEvent]:
        wanted = set(kinds)
        return [ev for ev in self.events if ev.kind in wanted]


def _read_json_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _as_int(value: Any) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, Decimal):
        if value == value.to_integral_value():
            return int(value)
        return None
    if isinstance(value, str):
        try:
            return int(value, 0)
        except ValueError:
            return None
    return None


def _lookup(args: Mapping[str, Any], keys: Iterable[str]) -> int | None:
    for key in keys:
        if key in args:
            got = _as_int(args[key])
            if got is not None:
                return got
    return None


def parse_trace(
    path: str | Path,
    overrides: FieldMap | None = None,
    extra_meta: Mapping[str, Any] | None = None,
) -> Trace:
    """Parse a Chrome-trace-event file into a validated, sorted Trace.

    Accepts a top-level ``{"traceEvents": [...]}`` object or a bare event
    array, optionally gzip-compressed. Only complete duration events
    (``"ph": "X"``) are kept; unrecognized categories are retained as
    OTHER. Raises MalformedTrace, MissingField, or EmptyTrace.
    """
    path = Path(path)
    fmap = overrides or FieldMap()
    if not path.is_file():
        raise MissingInput(f"no such trace file: {path}")
    try:
        doc = json.loads(_read_json_bytes(path), parse_float=Decimal)
    except (ValueError, OSError, EOFError) as exc:
        raise MalformedTrace(f"{path}: not a JSON trace ({exc})") from exc

    if isinstance(doc, dict):
        raw_events = doc.get("traceEvents")
        if not isinstance(raw_events, list):
            raise MalformedTrace(f"{path}: missing 'traceEvents' array")
    elif isinstance(doc, list):
        raw_events = doc
    else:
        raise MalformedTrace(f"{path}: top level must be object or array")

    warnings = {
        "missing_duration": 0,
        "negative_duration": 0,
        "skipped_non_duration": 0,
        "skipped_unplaceable": 0,
    }
    events: list[TraceEvent] = []
    kernel_correlations: set[int] = set()

    for raw in raw_events:
        if not isinstance(raw, dict):
            raise MalformedTrace(f"{path}: event entries must be objects")
        if raw.get("ph", "X") != "X":
            warnings["skipped_non_duration"] += 1
            continue
        category = str(raw.get("cat", ""))
        name = str(raw.get("name", ""))
        kind = classify_event(category, name)

        ts = raw.get("ts")
        if ts is None or not isinstance(ts, (int, Decimal)):
            if kind is EventKind.OTHER:
                warnings["skipped_unplaceable"] += 1
                continue
            raise MissingField(f"{path}: {category} event {name!r} lacks 'ts'")
        begin = us_to_ns(ts)

        dur = raw.get("dur")
        if dur is None or not isinstance(dur, (int, Decimal)):
            duration = 0
            warnings["missing_duration"] += 1
        else:
            duration = us_to_ns(dur)
            if duration < 0:
                duration = 0
                warnings["negative_duration"] += 1

        if abs(begin) > TICK_MAX or begin + duration > TICK_MAX:
            raise MalformedTrace(
                f"{path}: timestamp out of 64-bit tick range ({begin} ns)"
            )

        pid = _as_int(raw.get("pid"))
        tid = _as_int(raw.get("tid"))
        if pid is None or tid is None:
            if kind is EventKind.OTHER:
                pid = pid if pid is not None else 0
                tid = tid if tid is not None else 0
            else:
                raise MissingField(
                    f"{path}: {category} event {name!r} lacks pid/tid"
                )

        args = raw.get("args")
        if not isinstance(args, dict):
            args = {}
        correlation = _lookup(args, fmap.correlation)
        stream = _lookup(args, fmap.stream)
        device = _lookup(args, fmap.device)

        if kind is EventKind.KERNEL:
            if stream is None:
                raise MissingField(
                    f"{path}: kernel {name!r} lacks a stream id"
                )
            if correlation is not None:
                if correlation in kernel_correlations:
                    raise MalformedTrace(
                        f"{path}: duplicate kernel correlation {correlation}"
                    )
                kernel_correlations.add(correlation)
        if kind is EventKind.RUNTIME_CALL and correlation is None:
            raise MissingField(
                f"{path}: launch call {name!r} lacks a correlation id"
            )

        events.append(
            TraceEvent(
                kind=kind,
                name=name,
                category=category,
                pid=pid,
                tid=tid,
                begin=begin,
                duration=duration,
                correlation=correlation,
                stream=stream,
                device=device,
            )
        )

    if not events:
        raise EmptyTrace(f"{path}: zero events after filtering")

    events.sort(key=TraceEvent.sort_key)

    label = path.name
    for suffix in (".gz", ".json"):
        if label.endswith(suffix):
            label = label[: -len(suffix)]
    meta: dict[str, Any] = {
        "label": label,
        "source": str(path),
        "n_events": len(events),
        "warnings": warnings,
    }
    trace = Trace(events=tuple(events), meta=meta)
    meta["kind_counts"] = trace.kind_counts()
    if extra_meta:
        meta.update(dict(extra_meta))
    for counter, count in warnings.items():
        if count:
            log.info("%s: %d %s events", path, count, counter)
    return trace


def trace_to_obj(trace: Trace) -> dict[str, Any]:
    """Render a Trace back to a Chrome-trace-event object."""
    out = []
    for ev in trace.events:
        args: dict[str, Any] = {}
        if ev.correlation is not None:
            args["correlation"] = ev.correlation
        if ev.stream is not None:
            args["stream"] = ev.stream
        if ev.device is not None:
            args["device"] = ev.device
        entry: dict[str, Any] = {
            "ph": "X",
            "cat": ev.category or _CANONICAL_CATEGORY[ev.kind],
            "name": ev.name,
            "pid": ev.pid,
            "tid": ev.tid,
            "ts": ns_to_us_json(ev.begin),
            "dur": ns_to_us_json(ev.duration),
        }
        if args:
            entry["args"] = args
        out.append(entry)
    return {"traceEvents": out}


def write_trace(trace: Trace, path: str | Path, compress: bool = False) -> Path:
    """Write a Trace as a Chrome-trace-event JSON file (optionally gzip)."""
    path = Path(path)
    payload = json.dumps(trace_to_obj(trace), sort_keys=True).encode("utf-8")
    if compress:
        # mtime pinned so identical traces produce identical bytes
        payload = gzip.compress(payload, mtime=0)
    path.write_bytes(payload)
    return path


def shift_trace(trace: Trace, offset: Tick) -> Trace:
    """Return a copy of the trace with every begin shifted by offset."""
    shifted = tuple(replace(ev, begin=ev.begin + offset) for ev in trace.events)
    return Trace(events=shifted, meta=dict(trace.meta))
