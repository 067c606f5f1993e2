"""Trace analysis toolkit for kernel-launch performance work.

Pipeline: parse profiler traces (trace model) -> build the
operator/launch/kernel dependency forest (graph) -> compute exact
launch/queuing metrics (metrics) -> classify batch-size sweeps as CPU- or
GPU-bound (boundedness) and mine deterministic kernel chains for fusion
recommendations (fusion). A seeded synthetic generator (synth) provides
ground-truth traces for testing.
"""

from .boundedness import BoundednessVerdict, SweepPoint, SweepSeries, classify, sweet_spot
from .errors import SkiptraceError, exit_code_table
from .fusion import (
    FusionCandidate,
    FusionPlan,
    KernelSequence,
    fusion_plan,
    mine_chains,
    segment_sequences,
    select_nonoverlapping,
)
from .graph import DependencyGraph, OpNode, build_graph, kernels_in_stream_order
from .metrics import (
    KernelAggregate,
    LaunchRecord,
    MetricReport,
    akd,
    compute_report,
    cpu_idle,
    gpu_idle,
    gpu_idle_union,
    inference_latency,
    launch_records,
    tklqt,
    top_k_kernels,
)
from .model import (
    EventKind,
    FieldMap,
    Tick,
    Trace,
    TraceEvent,
    classify_event,
    parse_trace,
    write_trace,
)
from .synth import DistSpec, GenSpec, PlantedChain, generate, generate_sweep, generate_to

__version__ = "0.1.0"

__all__ = [
    "BoundednessVerdict",
    "DependencyGraph",
    "DistSpec",
    "EventKind",
    "FieldMap",
    "FusionCandidate",
    "FusionPlan",
    "GenSpec",
    "KernelAggregate",
    "KernelSequence",
    "LaunchRecord",
    "MetricReport",
    "OpNode",
    "PlantedChain",
    "SkiptraceError",
    "SweepPoint",
    "SweepSeries",
    "Tick",
    "Trace",
    "TraceEvent",
    "akd",
    "build_graph",
    "classify",
    "classify_event",
    "compute_report",
    "cpu_idle",
    "exit_code_table",
    "fusion_plan",
    "generate",
    "generate_sweep",
    "generate_to",
    "gpu_idle",
    "gpu_idle_union",
    "inference_latency",
    "kernels_in_stream_order",
    "launch_records",
    "mine_chains",
    "parse_trace",
    "segment_sequences",
    "select_nonoverlapping",
    "sweet_spot",
    "tklqt",
    "top_k_kernels",
    "write_trace",
]
