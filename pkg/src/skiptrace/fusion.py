"""Kernel-chain mining and idealized fusion planning.

Chains are keyed by kernel name. For a chain C of length L, the
proximity score is f(C) / f(head), where f(C) counts sliding windows
(overlaps allowed) equal to C across all sequences and f(head) counts the
positions where the head kernel starts a full-length window (>= L-1
successors remaining). Under that head definition a score of 1 means
every opportunity realizes the chain; the raw-occurrence variant is
reported alongside as ps_raw. A chain must occur at least twice to be a
candidate: a pattern seen once is not a repeated pattern.

Fused-launch accounting: consuming a non-overlapping occurrence of a
length-L chain replaces L launches by one, so
k_fused = k_eager - c_fused * (L - 1) and speedup = k_eager / k_fused.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import BadLength, BadThreshold, DegenerateEager, NoKernels
from .graph import DependencyGraph, kernels_in_stream_order
from .model import EventKind, TraceEvent

PER_STREAM = "per_stream"
SPLIT_ON_SYNC = "split_on_sync"
POLICIES = (PER_STREAM, SPLIT_ON_SYNC)

MIN_SUPPORT = 2


@dataclass(frozen=True)
class KernelSequence:
    """A maximal run of kernels on one stream with no internal barrier."""

    names: tuple[str, ...]
    stream: int


@dataclass(frozen=True)
class FusionCandidate:
    chain: tuple[str, ...]
    f_chain: int
    f_head: int
    ps: Fraction
    ps_raw: Fraction
    nonoverlap_count: int

    @property
    def length(self) -> int:
        return len(self.chain)


@dataclass(frozen=True)
class FusionPlan:
    length: int
    k_eager: int
    c_fused: int
    k_fused: int
    speedup: Fraction
    chains: tuple[FusionCandidate, ...]
    fused_counts: tuple[int, ...]  # aligned with chains


def _is_device_to_host_copy(ev: TraceEvent) -> bool:
    return ev.kind is EventKind.MEMCPY and "dtoh" in ev.name.lower()


def _barrier_begins(graph: DependencyGraph) -> list[int]:
    """Begin ticks of events that delimit kernel sequences: CPU-side
    synchronize calls on the analyzed process and device-to-host copies
    (direction is only visible on the device-side copy record)."""
    begins = []
    for ev in graph.trace.events:
        if ev.kind is EventKind.SYNC and ev.pid == graph.pid:
            begins.append(ev.begin)
        elif _is_device_to_host_copy(ev):
            begins.append(ev.begin)
    begins.sort()
    return begins


def segment_sequences(
    graph: DependencyGraph, policy: str = SPLIT_ON_SYNC
) -> list[KernelSequence]:
    """Build kernel-name sequences per stream.

    per_stream keeps one sequence per stream; split_on_sync additionally
    cuts wherever a barrier begins strictly between the launch calls of
    consecutive kernels (kernels without a matched launch fall back to
    their own begin tick).
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    if not graph.kernels:
        raise NoKernels("cannot segment a trace with no kernel events")

    launch_begin_by_corr = {
        kernel.correlation: launch.begin
        for launch, kernel in graph.launch_pairs
    }
    barriers = _barrier_begins(graph) if policy == SPLIT_ON_SYNC else []

    sequences: list[KernelSequence] = []
    for stream, kernels in kernels_in_stream_order(graph).items():
        anchors = [
            launch_begin_by_corr.get(ev.correlation, ev.begin)
            for ev in kernels
        ]
        current: list[str] = [kernels[0].name]
        for prev_anchor, anchor, ev in zip(anchors, anchors[1:], kernels[1:]):
            lo = bisect.bisect_right(barriers, prev_anchor)
            hi = bisect.bisect_left(barriers, anchor)
            if hi > lo:  # a barrier begins strictly between the launches
                sequences.append(KernelSequence(tuple(current), stream))
                current = []
            current.append(ev.name)
        sequences.append(KernelSequence(tuple(current), stream))
    return sequences


def window_counts(
    seqs: Sequence[KernelSequence], length: int
) -> tuple[Counter, Counter]:
    """Exact sliding-window counts for one chain length.

    Returns (chain counts, head-opportunity counts): position i of a
    sequence is an opportunity for its name iff a full window fits.
    """
    if length < 2:
        raise BadLength(f"chain length must be >= 2, got {length}")
    chains: Counter = Counter()
    heads: Counter = Counter()
    for seq in seqs:
        names = seq.names
        for i in range(len(names) - length + 1):
            heads[names[i]] += 1
            chains[names[i : i + length]] += 1
    return chains, heads


def select_nonoverlapping(
    seqs: Sequence[KernelSequence], chain: Sequence[str]
) -> int:
    """Greedy left-to-right count of disjoint occurrences of one chain."""
    chain = tuple(chain)
    length = len(chain)
    total = 0
    for seq in seqs:
        names = seq.names
        i = 0
        limit = len(names) - length
        while i <= limit:
            if names[i : i + length] == chain:
                total += 1
                i += length
            else:
                i += 1
    return total


def _as_threshold(value) -> Fraction:
    threshold = value if isinstance(value, Fraction) else Fraction(str(value))
    if not 0 < threshold <= 1:
        raise BadThreshold(f"threshold must satisfy 0 < T <= 1, got {threshold}")
    return threshold


def mine_chains(
    seqs: Sequence[KernelSequence],
    lengths: Iterable[int],
    threshold=Fraction(1),
) -> list[FusionCandidate]:
    """Mine repeated chains of the given lengths scoring at or above the
    threshold, sorted by (ps desc, f_chain desc, chain ascending)."""
    t = _as_threshold(threshold)
    raw_heads: Counter = Counter()
    for seq in seqs:
        raw_heads.update(seq.names)

    candidates: list[FusionCandidate] = []
    for length in sorted(set(lengths)):
        chains, heads = window_counts(seqs, length)
        for chain, f_chain in chains.items():
            if f_chain < MIN_SUPPORT:
                continue
            f_head = heads[chain[0]]
            ps = Fraction(f_chain, f_head)
            if ps < t:
                continue
            candidates.append(
                FusionCandidate(
                    chain=chain,
                    f_chain=f_chain,
                    f_head=f_head,
                    ps=ps,
                    ps_raw=Fraction(f_chain, raw_heads[chain[0]]),
                    nonoverlap_count=select_nonoverlapping(seqs, chain),
                )
            )
    candidates.sort(key=lambda c: (-c.ps, -c.f_chain, c.chain))
    return candidates


def fusion_plan(
    seqs: Sequence[KernelSequence], length: int, threshold=Fraction(1)
) -> FusionPlan:
    """Plan fusions for one chain length.

    Cross-candidate overlaps are resolved by a single greedy scan in
    sequence order: the first matching candidate at a position consumes
    its window, and the scan resumes after it.
    """
    if length < 2:
        raise BadLength(f"chain length must be >= 2, got {length}")
    k_eager = sum(len(seq.names) for seq in seqs)
    if k_eager == 0:
        raise DegenerateEager("no kernel launches to fuse")

    selected = mine_chains(seqs, [length], threshold)
    chain_set = {c.chain for c in selected}
    fused: Counter = Counter()
    if chain_set:
        for seq in seqs:
            names = seq.names
            i = 0
            limit = len(names) - length
            while i <= limit:
                window = names[i : i + length]
                if window in chain_set:
                    fused[window] += 1
                    i += length
                else:
                    i += 1
    c_fused = sum(fused.values())
    k_fused = k_eager - c_fused * (length - 1)
    return FusionPlan(
        length=length,
        k_eager=k_eager,
        c_fused=c_fused,
        k_fused=k_fused,
        speedup=Fraction(k_eager, k_fused),
        chains=tuple(selected),
        fused_counts=tuple(fused.get(c.chain, 0) for c in selected),
    )
