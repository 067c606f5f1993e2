"""Operator -> launch -> kernel dependency forest construction.

Parent attribution uses begin-time containment on half-open intervals
[begin, end): among all same-thread operators whose interval contains a
child's begin tick, the tightest (shortest, then latest-starting) one is
the parent. Operators sharing a begin tick are disambiguated by
longest-duration-as-parent and counted as ambiguous nestings. Launch
calls are linked to kernels through their correlation ids.
"""

from __future__ import annotations

import heapq
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from .model import EventKind, Tick, Trace, TraceEvent

log = logging.getLogger(__name__)

_FOREST_KINDS = (EventKind.CPU_OP, EventKind.RUNTIME_CALL)


@dataclass(eq=False)
class OpNode:
    """A CPU operator or launch call in the dependency forest.

    Mutable only during construction; treat as read-only afterwards.
    """

    event: TraceEvent
    index: int
    parent: "OpNode | None" = None
    children: list["OpNode"] = field(default_factory=list)
    launched_kernel: TraceEvent | None = None

    @property
    def begin(self) -> Tick:
        return self.event.begin

    @property
    def end(self) -> Tick:
        return self.event.end

    @property
    def duration(self) -> Tick:
        return self.event.duration


@dataclass
class DependencyGraph:
    """Forest plus launch/kernel pairing for one analyzed process."""

    trace: Trace
    pid: int | None
    nodes: list[OpNode]
    roots: list[OpNode]
    launch_pairs: list[tuple[TraceEvent, TraceEvent]]
    orphan_kernels: list[TraceEvent]
    orphan_launches: list[TraceEvent]
    kernels: list[TraceEvent]
    no_kernels: bool
    warnings: dict[str, int]

    def launch_events(self) -> list[TraceEvent]:
        return [n.event for n in self.nodes if n.event.kind is EventKind.RUNTIME_CALL]


def pick_pid(trace: Trace) -> int | None:
    """Choose the process to analyze: most CpuOp events, ties to the
    smallest pid; falls back to launch-call counts if no CpuOps exist."""
    cpu_counts: Counter[int] = Counter()
    launch_counts: Counter[int] = Counter()
    for ev in trace.events:
        if ev.kind is EventKind.CPU_OP:
            cpu_counts[ev.pid] += 1
        elif ev.kind is EventKind.RUNTIME_CALL:
            launch_counts[ev.pid] += 1
    pool = cpu_counts or launch_counts
    if not pool:
        return None
    return min(pool, key=lambda pid: (-pool[pid], pid))


def _assign_parents(
    ordered: list[OpNode], warnings: dict[str, int]
) -> None:
    """Link parents within one thread.

    ordered must be sorted by (begin, -duration, index). A lazily pruned
    min-heap keyed by (duration, -begin, index) yields, for each node, the
    tightest still-open operator containing its begin tick.
    """
    heap: list[tuple[int, int, int, OpNode]] = []
    for node in ordered:
        while heap and heap[0][3].end <= node.begin:
            heapq.heappop(heap)
        if heap:
            parent = heap[0][3]
            parent.children.append(node)
            node.parent = parent
            if parent.begin == node.begin:
                warnings["ambiguous_nesting"] += 1
            if node.end > parent.end:
                warnings["ragged_nesting"] += 1
        heapq.heappush(heap, (node.duration, -node.begin, node.index, node))


def build_graph(trace: Trace, pid: int | None = None) -> DependencyGraph:
    """Construct the dependency forest and launch/kernel pairing.

    CPU-side analysis is restricted to a single process (the one with the
    most CpuOp events unless pid is given); kernels are device-side
    records and are matched regardless of pid. A kernel-free trace still
    yields a graph, flagged no_kernels.
    """
    if pid is None:
        pid = pick_pid(trace)
    warnings = {
        "ambiguous_nesting": 0,
        "ragged_nesting": 0,
        "duplicate_launch_correlation": 0,
    }

    nodes: list[OpNode] = []
    by_tid: dict[int, list[OpNode]] = defaultdict(list)
    for index, ev in enumerate(trace.events):
        if ev.kind in _FOREST_KINDS and ev.pid == pid:
            node = OpNode(event=ev, index=index)
            nodes.append(node)
            by_tid[ev.tid].append(node)

    for tid_nodes in by_tid.values():
        tid_nodes.sort(key=lambda n: (n.begin, -n.duration, n.index))
        _assign_parents(tid_nodes, warnings)

    for node in nodes:
        node.children.sort(key=lambda n: (n.begin, n.index))

    roots = [
        n
        for n in nodes
        if n.parent is None and n.event.kind is EventKind.CPU_OP
    ]
    roots.sort(key=lambda n: (n.begin, n.index))

    kernels = trace.events_of(EventKind.KERNEL)
    kernels.sort(key=lambda ev: (ev.begin, ev.correlation or 0))
    kernel_by_corr = {
        ev.correlation: ev for ev in kernels if ev.correlation is not None
    }

    launch_pairs: list[tuple[TraceEvent, TraceEvent]] = []
    orphan_launches: list[TraceEvent] = []
    claimed: set[int] = set()
    launch_nodes = [
        n for n in nodes if n.event.kind is EventKind.RUNTIME_CALL
    ]
    launch_nodes.sort(key=lambda n: (n.begin, n.index))
    for node in launch_nodes:
        corr = node.event.correlation
        if corr in kernel_by_corr and corr not in claimed:
            kernel = kernel_by_corr[corr]
            node.launched_kernel = kernel
            launch_pairs.append((node.event, kernel))
            claimed.add(corr)
        else:
            if corr in claimed:
                warnings["duplicate_launch_correlation"] += 1
            orphan_launches.append(node.event)
    launch_pairs.sort(key=lambda pair: (pair[1].begin, pair[1].correlation or 0))

    orphan_kernels = [
        ev
        for ev in kernels
        if ev.correlation is None or ev.correlation not in claimed
    ]

    no_kernels = not kernels
    if no_kernels:
        log.warning("trace %s has no kernel events", trace.meta.get("label"))
    if warnings["ambiguous_nesting"]:
        log.info(
            "%d ambiguous nestings resolved longest-duration-as-parent",
            warnings["ambiguous_nesting"],
        )

    return DependencyGraph(
        trace=trace,
        pid=pid,
        nodes=nodes,
        roots=roots,
        launch_pairs=launch_pairs,
        orphan_kernels=orphan_kernels,
        orphan_launches=orphan_launches,
        kernels=kernels,
        no_kernels=no_kernels,
        warnings=warnings,
    )


def kernels_in_stream_order(
    graph: DependencyGraph,
) -> dict[int, list[TraceEvent]]:
    """Group kernel events by stream, each list sorted by begin then
    correlation ascending."""
    streams: dict[int, list[TraceEvent]] = defaultdict(list)
    for ev in graph.kernels:
        streams[ev.stream if ev.stream is not None else -1].append(ev)
    for kernel_list in streams.values():
        kernel_list.sort(key=lambda ev: (ev.begin, ev.correlation or 0))
    return dict(sorted(streams.items()))


def _node_label(node: OpNode) -> str:
    ev = node.event
    label = f"{ev.name} [{ev.begin}, {ev.end}) tid={ev.tid}"
    if node.launched_kernel is not None:
        label += f" -> kernel {node.launched_kernel.name!r}"
    return label


def to_text_tree(graph: DependencyGraph) -> str:
    """Render the forest as an indented text tree for inspection."""
    lines: list[str] = []

    def walk(node: OpNode, depth: int) -> None:
        lines.append("  " * depth + _node_label(node))
        for child in node.children:
            walk(child, depth + 1)

    top = [n for n in graph.nodes if n.parent is None]
    top.sort(key=lambda n: (n.begin, n.index))
    for node in top:
        walk(node, 0)
    return "\n".join(lines) + ("\n" if lines else "")


def to_dot(graph: DependencyGraph) -> str:
    """Render the forest (plus launch->kernel edges) in DOT format."""
    lines = ["digraph trace {", "  rankdir=TB;"]
    ids = {id(n): f"n{i}" for i, n in enumerate(graph.nodes)}
    for node in graph.nodes:
        shape = "box" if node.event.kind is EventKind.CPU_OP else "ellipse"
        name = node.event.name.replace('"', "'")
        lines.append(
            f'  {ids[id(node)]} [label="{name}\\n[{node.begin},{node.end})" shape={shape}];'
        )
    for node in graph.nodes:
        for child in node.children:
            lines.append(f"  {ids[id(node)]} -> {ids[id(child)]};")
    owner_by_event = {id(n.event): n for n in graph.nodes}
    for i, (launch, kernel) in enumerate(graph.launch_pairs):
        kname = kernel.name.replace('"', "'")
        lines.append(
            f'  k{i} [label="{kname}\\ncorr={kernel.correlation}" shape=ellipse style=dashed];'
        )
        owner = owner_by_event.get(id(launch))
        if owner is not None:
            lines.append(f"  {ids[id(owner)]} -> k{i} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
