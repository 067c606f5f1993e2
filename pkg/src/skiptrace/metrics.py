"""Kernel-level performance metrics over a dependency graph.

All metrics are exact: ticks are integers and averages are rationals.
Decimal rendering (fixed 6 places, half-even) is presentation only.

Definitions
-----------
launch latency   kernel begin - launch-call begin, per matched pair
tklqt            sum of launch latencies over all matched pairs
akd              mean kernel duration (rational)
il               last kernel end - first root operator begin
gpu_idle         il - sum of kernel durations; may go negative when
                 kernels overlap across streams (multi_stream flag set);
                 a union-of-intervals variant is reported alongside
cpu_idle         il - busy time of CPU-op/launch events on the analyzed
                 process's launching threads, clipped to the il window,
                 clamped at >= 0 (union definition)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .errors import ClockSkew, EmptyInput, NoKernels, NoRoots
from .graph import DependencyGraph
from .model import EventKind, Tick

SCHEMA_VERSION = 1
DECIMAL_PLACES = 6

TOP_K_KEYS = ("count", "total_duration", "total_launch_latency")


@dataclass(frozen=True, slots=True)
class LaunchRecord:
    """One matched launch-call/kernel pair."""

    kernel_name: str
    launch_begin: Tick
    kernel_begin: Tick
    kernel_duration: Tick
    launch_latency: Tick
    correlation: int | None = None


@dataclass(frozen=True, slots=True)
class KernelAggregate:
    """Per-kernel-name aggregation over launch records."""

    name: str
    count: int
    total_duration: Tick
    total_launch_latency: Tick
    mean_duration: Fraction


@dataclass(frozen=True)
class MetricReport:
    """Per-trace metric summary."""

    tklqt: Tick
    akd: Fraction
    il: Tick
    gpu_idle: Tick
    gpu_idle_union: Tick
    cpu_idle: Tick
    multi_stream: bool
    n_kernels: int
    n_launches: int
    top_k: tuple[KernelAggregate, ...]
    meta: Mapping[str, Any]


def format_fraction(value: Fraction, places: int = DECIMAL_PLACES) -> str:
    """Render a rational as a fixed-place decimal string, half-even."""
    with localcontext() as ctx:
        ctx.prec = 50
        quantum = Decimal(1).scaleb(-places)
        dec = Decimal(value.numerator) / Decimal(value.denominator)
        return str(dec.quantize(quantum, rounding=ROUND_HALF_EVEN))


def merge_intervals(
    intervals: Iterable[tuple[Tick, Tick]]
) -> list[tuple[Tick, Tick]]:
    """Merge half-open intervals; empty/negative spans are dropped."""
    spans = sorted((b, e) for b, e in intervals if e > b)
    merged: list[tuple[Tick, Tick]] = []
    for begin, end in spans:
        if merged and begin <= merged[-1][1]:
            if end > merged[-1][1]:
                merged[-1] = (merged[-1][0], end)
        else:
            merged.append((begin, end))
    return merged


def union_length(
    intervals: Iterable[tuple[Tick, Tick]],
    window: tuple[Tick, Tick] | None = None,
) -> Tick:
    """Total covered length, optionally clipped to a window."""
    total = 0
    for begin, end in merge_intervals(intervals):
        if window is not None:
            begin = max(begin, window[0])
            end = min(end, window[1])
        if end > begin:
            total += end - begin
    return total


def launch_records(graph: DependencyGraph) -> list[LaunchRecord]:
    """One record per matched pair, in kernel begin order.

    Raises ClockSkew if any kernel begins before its launch call.
    """
    records = []
    for launch, kernel in graph.launch_pairs:
        latency = kernel.begin - launch.begin
        if latency < 0:
            raise ClockSkew(
                f"kernel {kernel.name!r} (correlation {kernel.correlation}) "
                f"begins {-latency} ns before its launch call"
            )
        records.append(
            LaunchRecord(
                kernel_name=kernel.name,
                launch_begin=launch.begin,
                kernel_begin=kernel.begin,
                kernel_duration=kernel.duration,
                launch_latency=latency,
                correlation=kernel.correlation,
            )
        )
    records.sort(key=lambda r: (r.kernel_begin, r.correlation or 0))
    return records


def tklqt(records: Sequence[LaunchRecord]) -> Tick:
    """Exact sum of launch latencies."""
    if not records:
        raise EmptyInput("tklqt needs at least one launch record")
    return sum(r.launch_latency for r in records)


def akd(records: Sequence[LaunchRecord]) -> Fraction:
    """Mean kernel duration as an exact rational."""
    if not records:
        raise EmptyInput("akd needs at least one launch record")
    return Fraction(sum(r.kernel_duration for r in records), len(records))


def _il_window(graph: DependencyGraph) -> tuple[Tick, Tick]:
    if not graph.kernels:
        raise NoKernels("trace has no kernel events")
    if not graph.roots:
        raise NoRoots("trace has no parentless CPU operators")
    start = graph.roots[0].begin
    end = max(ev.end for ev in graph.kernels)
    return start, end


def inference_latency(graph: DependencyGraph) -> Tick:
    """Last kernel end minus first root operator begin."""
    start, end = _il_window(graph)
    return end - start


def gpu_idle(graph: DependencyGraph) -> Tick:
    """Latency minus summed kernel durations (may be negative when
    kernels overlap across streams)."""
    il = inference_latency(graph)
    return il - sum(ev.duration for ev in graph.kernels)


def gpu_idle_union(graph: DependencyGraph) -> Tick:
    """Latency minus the union of kernel intervals (overlap-aware)."""
    window = _il_window(graph)
    il = window[1] - window[0]
    busy = union_length(
        ((ev.begin, ev.end) for ev in graph.kernels), window=window
    )
    return il - busy


def is_multi_stream(graph: DependencyGraph) -> bool:
    return len({ev.stream for ev in graph.kernels}) > 1


def cpu_idle(graph: DependencyGraph) -> Tick:
    """Latency minus CPU busy time on launching threads (union
    definition), clamped at zero."""
    window = _il_window(graph)
    il = window[1] - window[0]
    launching_tids = {
        n.event.tid
        for n in graph.nodes
        if n.event.kind is EventKind.RUNTIME_CALL
    }
    busy_events = [
        n.event for n in graph.nodes if n.event.tid in launching_tids
    ]
    busy = union_length(
        ((ev.begin, ev.end) for ev in busy_events), window=window
    )
    return max(il - busy, 0)


def top_k_kernels(
    records: Sequence[LaunchRecord], k: int, key: str = "count"
) -> list[KernelAggregate]:
    """Aggregate records by kernel name; top k by the chosen key,
    ties broken by name ascending."""
    if not records:
        raise EmptyInput("top_k_kernels needs at least one launch record")
    if k < 1:
        raise ValueError("k must be >= 1")
    if key not in TOP_K_KEYS:
        raise ValueError(f"key must be one of {TOP_K_KEYS}")
    grouped: dict[str, list[LaunchRecord]] = {}
    for rec in records:
        grouped.setdefault(rec.kernel_name, []).append(rec)
    aggregates = []
    for name, members in grouped.items():
        total_dur = sum(r.kernel_duration for r in members)
        aggregates.append(
            KernelAggregate(
                name=name,
                count=len(members),
                total_duration=total_dur,
                total_launch_latency=sum(r.launch_latency for r in members),
                mean_duration=Fraction(total_dur, len(members)),
            )
        )
    aggregates.sort(key=lambda a: (-getattr(a, key), a.name))
    return aggregates[:k]


def compute_report(
    graph: DependencyGraph, k: int = 10, key: str = "count"
) -> MetricReport:
    """Run the full metric pipeline over a built graph."""
    records = launch_records(graph)
    if not records:
        raise NoKernels("no matched launch/kernel pairs in trace")
    return MetricReport(
        tklqt=tklqt(records),
        akd=akd(records),
        il=inference_latency(graph),
        gpu_idle=gpu_idle(graph),
        gpu_idle_union=gpu_idle_union(graph),
        cpu_idle=cpu_idle(graph),
        multi_stream=is_multi_stream(graph),
        n_kernels=len(graph.kernels),
        n_launches=len(graph.launch_pairs) + len(graph.orphan_launches),
        top_k=tuple(top_k_kernels(records, k=k, key=key)),
        meta=dict(graph.trace.meta),
    )


def report_to_obj(report: MetricReport) -> dict[str, Any]:
    """JSON-ready dict with stable content (exact values as strings)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "label": report.meta.get("label", ""),
        "tklqt": report.tklqt,
        "akd": format_fraction(report.akd),
        "akd_exact": f"{report.akd.numerator}/{report.akd.denominator}",
        "il": report.il,
        "gpu_idle": report.gpu_idle,
        "gpu_idle_union": report.gpu_idle_union,
        "cpu_idle": report.cpu_idle,
        "multi_stream": report.multi_stream,
        "n_kernels": report.n_kernels,
        "n_launches": report.n_launches,
        "top_k": [
            {
                "name": agg.name,
                "count": agg.count,
                "total_duration": agg.total_duration,
                "total_launch_latency": agg.total_launch_latency,
                "mean_duration": format_fraction(agg.mean_duration),
            }
            for agg in report.top_k
        ],
        "warnings": dict(report.meta.get("warnings", {})),
    }


def report_to_json(report: MetricReport) -> str:
    return json.dumps(report_to_obj(report), sort_keys=True, indent=2) + "\n"


CSV_HEADER = (
    "schema_version,label,n_kernels,n_launches,tklqt_ns,akd_ns,il_ns,"
    "gpu_idle_ns,gpu_idle_union_ns,cpu_idle_ns,multi_stream"
)


def report_to_csv(report: MetricReport) -> str:
    """One CSV row (with header) matching CSV_HEADER."""
    row = ",".join(
        str(v)
        for v in (
            SCHEMA_VERSION,
            report.meta.get("label", ""),
            report.n_kernels,
            report.n_launches,
            report.tklqt,
            format_fraction(report.akd),
            report.il,
            report.gpu_idle,
            report.gpu_idle_union,
            report.cpu_idle,
            int(report.multi_stream),
        )
    )
    return CSV_HEADER + "\n" + row + "\n"
