"""Synthetic trace generation with construction-time ground truth.

Every generated file ships with a sidecar of expected metric and fusion
values computed while the events are being placed (closed forms and
direct counting), never by running the analyzers, so the sidecar is a
genuine oracle for the pipeline.

Timing model: a single CPU thread issues operators back to back; each
operator launches one or more kernels. A kernel begins at
max(launch begin + overhead draw, stream cursor), so queuing emerges
whenever kernels outlast the launch pace. Under queuing_mode "none" the
CPU waits just long enough between launches that the queue never builds
and every launch latency equals its overhead draw exactly;
"saturate_after" switches to rapid-fire launching once the CPU clock
passes the configured tick.

Noise kernel naming ("paired" mode) emits every noise name exactly twice
with different successors (a shuffled pool followed by its reversal), so
noise windows are never deterministic chains. That guarantee holds for
single-stream traces without sync splits; multi-stream or synced traces
still get exact sidecars because chain counts are direct counts over the
emitted sequences.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import InvalidSpec
from .model import EventKind, Tick, Trace, TraceEvent, write_trace

SCHEMA_VERSION = 1

CPU_PID = 1000
CPU_TID = 1000
DEVICE_PID = 0
FIRST_CORRELATION = 1001

QUEUE_NONE = "none"
QUEUE_SATURATE = "saturate_after"

PLACEMENT_HEAD = "head"
PLACEMENT_TAIL = "tail"
PLACEMENT_SPREAD = "spread"
PLACEMENTS = (PLACEMENT_HEAD, PLACEMENT_TAIL, PLACEMENT_SPREAD)

NOISE_PAIRED = "paired"
NOISE_RANDOM = "random"


@dataclass(frozen=True, slots=True)
class DistSpec:
    """Integer distribution: fixed value, uniform range, or choice set."""

    kind: str
    value: int = 0
    lo: int = 0
    hi: int = 0
    choices: tuple[int, ...] = ()

    @classmethod
    def fixed(cls, value: int) -> "DistSpec":
        return cls(kind="fixed", value=value)

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "DistSpec":
        return cls(kind="uniform_int", lo=lo, hi=hi)

    @classmethod
    def choice(cls, values: Iterable[int]) -> "DistSpec":
        return cls(kind="choice", choices=tuple(values))

    @classmethod
    def from_json(cls, obj: Any) -> "DistSpec":
        if isinstance(obj, int):
            return cls.fixed(obj)
        if isinstance(obj, dict):
            if "fixed" in obj:
                return cls.fixed(int(obj["fixed"]))
            if "uniform_int" in obj:
                lo, hi = obj["uniform_int"]
                return cls.uniform(int(lo), int(hi))
            if "choice" in obj:
                return cls.choice(int(v) for v in obj["choice"])
        raise InvalidSpec(f"bad distribution spec: {obj!r}")

    def sample(self, rng: random.Random) -> int:
        if self.kind == "fixed":
            return self.value
        if self.kind == "uniform_int":
            return rng.randint(self.lo, self.hi)
        return rng.choice(self.choices)

    def minimum(self) -> int:
        if self.kind == "fixed":
            return self.value
        if self.kind == "uniform_int":
            return self.lo
        return min(self.choices)

    def maximum(self) -> int:
        if self.kind == "fixed":
            return self.value
        if self.kind == "uniform_int":
            return self.hi
        return max(self.choices)

    def scaled(self, factor: int) -> "DistSpec":
        if self.kind == "fixed":
            return DistSpec.fixed(self.value * factor)
        if self.kind == "uniform_int":
            return DistSpec.uniform(self.lo * factor, self.hi * factor)
        return DistSpec.choice(v * factor for v in self.choices)


@dataclass(frozen=True, slots=True)
class PlantedChain:
    chain: tuple[str, ...]
    repeats: int
    placement: str = PLACEMENT_TAIL

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "PlantedChain":
        return cls(
            chain=tuple(str(n) for n in obj["chain"]),
            repeats=int(obj["repeats"]),
            placement=str(obj.get("placement", PLACEMENT_TAIL)),
        )


@dataclass(frozen=True)
class GenSpec:
    """Declarative generator configuration. Same seed, same bytes."""

    seed: int = 0
    label: str = ""
    n_ops: int = 20
    kernels_per_op: DistSpec = DistSpec.fixed(1)
    launch_overhead: DistSpec = DistSpec.fixed(2500)
    kernel_duration: DistSpec = DistSpec.fixed(1000)
    queuing_mode: str = QUEUE_NONE
    saturate_after: Tick = 0
    planted_chains: tuple[PlantedChain, ...] = ()
    n_streams: int = 1
    sync_probability: float = 0.0
    noise_mode: str = NOISE_PAIRED
    alphabet: int = 24
    report_lengths: tuple[int, ...] = (2, 4, 8, 16)
    # CPU pacing constants (ns)
    start_ns: Tick = 1000
    op_prologue_ns: Tick = 100
    launch_call_ns: Tick = 1000
    intra_gap_ns: Tick = 200
    op_padding_ns: Tick = 200
    inter_op_gap_ns: Tick = 300
    sync_call_ns: Tick = 500

    def validate(self) -> None:
        if self.n_ops < 0:
            raise InvalidSpec("n_ops must be >= 0")
        if self.n_ops == 0 and not self.planted_chains:
            raise InvalidSpec("spec generates no kernels at all")
        for name, dist, low in (
            ("kernels_per_op", self.kernels_per_op, 1),
            ("launch_overhead", self.launch_overhead, 1),
            ("kernel_duration", self.kernel_duration, 1),
        ):
            if dist.minimum() < low:
                raise InvalidSpec(f"{name} bound must be >= {low}")
        if self.queuing_mode not in (QUEUE_NONE, QUEUE_SATURATE):
            raise InvalidSpec(f"unknown queuing_mode {self.queuing_mode!r}")
        if self.n_streams < 1:
            raise InvalidSpec("n_streams must be >= 1")
        if not 0.0 <= self.sync_probability <= 1.0:
            raise InvalidSpec("sync_probability must be in [0, 1]")
        if self.noise_mode not in (NOISE_PAIRED, NOISE_RANDOM):
            raise InvalidSpec(f"unknown noise_mode {self.noise_mode!r}")
        if self.alphabet < 1:
            raise InvalidSpec("alphabet must be >= 1")
        for planted in self.planted_chains:
            if len(planted.chain) < 2:
                raise InvalidSpec("planted chains need length >= 2")
            if len(set(planted.chain)) != len(planted.chain):
                raise InvalidSpec("planted chain names must be distinct")
            if planted.repeats < 1:
                raise InvalidSpec("planted repeats must be >= 1")
            if planted.placement not in PLACEMENTS:
                raise InvalidSpec(f"bad placement {planted.placement!r}")
        if any(length < 2 for length in self.report_lengths):
            raise InvalidSpec("report lengths must be >= 2")
        for name in (
            "op_prologue_ns",
            "launch_call_ns",
            "intra_gap_ns",
            "op_padding_ns",
            "inter_op_gap_ns",
            "sync_call_ns",
        ):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be >= 0")

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "GenSpec":
        kwargs: dict[str, Any] = {}
        simple = (
            "seed",
            "label",
            "n_ops",
            "n_streams",
            "sync_probability",
            "noise_mode",
            "alphabet",
            "start_ns",
            "op_prologue_ns",
            "launch_call_ns",
            "intra_gap_ns",
            "op_padding_ns",
            "inter_op_gap_ns",
            "sync_call_ns",
        )
        for key in simple:
            if key in obj:
                kwargs[key] = obj[key]
        for key in ("kernels_per_op", "launch_overhead", "kernel_duration"):
            if key in obj:
                kwargs[key] = DistSpec.from_json(obj[key])
        mode = obj.get("queuing_mode", QUEUE_NONE)
        if isinstance(mode, dict):
            kwargs["queuing_mode"] = QUEUE_SATURATE
            kwargs["saturate_after"] = int(mode[QUEUE_SATURATE])
        else:
            kwargs["queuing_mode"] = str(mode)
            if "saturate_after" in obj:
                kwargs["saturate_after"] = int(obj["saturate_after"])
        if "planted_chains" in obj:
            kwargs["planted_chains"] = tuple(
                PlantedChain.from_json(p) for p in obj["planted_chains"]
            )
        if "report_lengths" in obj:
            kwargs["report_lengths"] = tuple(
                int(v) for v in obj["report_lengths"]
            )
        spec = cls(**kwargs)
        spec.validate()
        return spec

    @classmethod
    def from_file(cls, path: str | Path) -> "GenSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass
class _Op:
    names: list[str]
    planted: bool


def _noise_names(spec: GenSpec, total: int, rng: random.Random) -> list[str]:
    if total == 0:
        return []
    if spec.noise_mode == NOISE_RANDOM:
        pool = [f"nk_{i:04d}" for i in range(spec.alphabet)]
        return [rng.choice(pool) for _ in range(total)]
    # Paired: a shuffled pool followed by its reversal. Each name occurs
    # exactly twice with different successors, so no noise window repeats.
    half = total // 2
    pool = [f"nk_{i:04d}" for i in range(half)]
    rng.shuffle(pool)
    return pool + pool[::-1]


def _build_schedule(spec: GenSpec, rng: random.Random) -> list[_Op]:
    counts = [spec.kernels_per_op.sample(rng) for _ in range(spec.n_ops)]
    if spec.noise_mode == NOISE_PAIRED and sum(counts) % 2:
        counts.append(1)  # pad with one extra operator so names pair up
    names = _noise_names(spec, sum(counts), rng)
    noise_ops: list[_Op] = []
    offset = 0
    for count in counts:
        noise_ops.append(_Op(names=names[offset : offset + count], planted=False))
        offset += count

    head: list[_Op] = []
    tail: list[_Op] = []
    spread: list[tuple[int, int, _Op]] = []
    for chain_index, planted in enumerate(spec.planted_chains):
        ops = [
            _Op(names=list(planted.chain), planted=True)
            for _ in range(planted.repeats)
        ]
        if planted.placement == PLACEMENT_HEAD:
            head.extend(ops)
        elif planted.placement == PLACEMENT_TAIL:
            tail.extend(ops)
        else:
            for i, op in enumerate(ops):
                position = (i + 1) * len(noise_ops) // (planted.repeats + 1)
                spread.append((position, chain_index, op))

    spread.sort(key=lambda item: (item[0], item[1]))
    schedule = list(head)
    spread_iter = iter(spread)
    pending = next(spread_iter, None)
    for index, op in enumerate(noise_ops):
        schedule.append(op)
        while pending is not None and pending[0] == index:
            schedule.append(pending[2])
            pending = next(spread_iter, None)
    while pending is not None:
        schedule.append(pending[2])
        pending = next(spread_iter, None)
    schedule.extend(tail)
    return schedule


def _merge_length(intervals: list[tuple[Tick, Tick]], window: tuple[Tick, Tick]) -> Tick:
    spans = sorted(intervals)
    total = 0
    cur_b: Tick | None = None
    cur_e = 0
    for begin, end in spans:
        if cur_b is None:
            cur_b, cur_e = begin, end
        elif begin <= cur_e:
            cur_e = max(cur_e, end)
        else:
            total += max(0, min(cur_e, window[1]) - max(cur_b, window[0]))
            cur_b, cur_e = begin, end
    if cur_b is not None:
        total += max(0, min(cur_e, window[1]) - max(cur_b, window[0]))
    return total


def _fusion_truth(
    segments: list[list[str]], length: int
) -> dict[str, Any]:
    """Direct per-length chain accounting over emitted name sequences."""
    windows: dict[tuple[str, ...], int] = {}
    heads: dict[str, int] = {}
    k_eager = sum(len(seg) for seg in segments)
    for seg in segments:
        for i in range(len(seg) - length + 1):
            window = tuple(seg[i : i + length])
            windows[window] = windows.get(window, 0) + 1
            heads[seg[i]] = heads.get(seg[i], 0) + 1
    deterministic = {
        w
        for w, count in windows.items()
        if count >= 2 and count == heads[w[0]]
    }
    c_fused = 0
    for seg in segments:
        i = 0
        while i <= len(seg) - length:
            if tuple(seg[i : i + length]) in deterministic:
                c_fused += 1
                i += length
            else:
                i += 1
    k_fused = k_eager - c_fused * (length - 1)
    speedup = Fraction(k_eager, k_fused) if k_fused else Fraction(1)
    return {
        "k_eager": k_eager,
        "c_fused": c_fused,
        "k_fused": k_fused,
        "speedup": f"{speedup.numerator}/{speedup.denominator}",
        "unique_candidates": len(windows),
        "total_instances": sum(windows.values()),
        "deterministic_chains": len(deterministic),
    }


def generate(spec: GenSpec) -> tuple[Trace, dict[str, Any]]:
    """Emit a trace and its ground-truth sidecar."""
    spec.validate()
    rng = random.Random(spec.seed)
    schedule = _build_schedule(spec, rng)

    events: list[TraceEvent] = []
    cursors = {s: spec.start_ns for s in range(spec.n_streams)}
    max_cursor = spec.start_ns
    corr = FIRST_CORRELATION
    ov_min = spec.launch_overhead.minimum()

    tklqt_sum = 0
    duration_sum = 0
    n_kernels = 0
    n_syncs = 0
    kernel_intervals: list[tuple[Tick, Tick]] = []
    op_intervals: list[tuple[Tick, Tick]] = []
    streams_used: set[int] = set()
    name_count: dict[str, int] = {}
    name_duration: dict[str, int] = {}
    segments_done: list[list[str]] = []
    open_segment: dict[int, list[str]] = {s: [] for s in cursors}

    t = spec.start_ns
    first_op_begin: Tick | None = None

    def adaptive_now() -> bool:
        if spec.queuing_mode == QUEUE_NONE:
            return True
        return (t - spec.start_ns) < spec.saturate_after

    for op in schedule:
        op_begin = t
        if first_op_begin is None:
            first_op_begin = op_begin
        t = op_begin + spec.op_prologue_ns
        for kernel_name in op.names:
            if adaptive_now():
                t = max(t, max_cursor - ov_min)
            launch_begin = t
            overhead = spec.launch_overhead.sample(rng)
            duration = spec.kernel_duration.sample(rng)
            stream = (
                0
                if op.planted or spec.n_streams == 1
                else rng.randrange(spec.n_streams)
            )
            kernel_begin = max(launch_begin + overhead, cursors[stream])
            kernel_end = kernel_begin + duration
            cursors[stream] = kernel_end
            max_cursor = max(max_cursor, kernel_end)

            events.append(
                TraceEvent(
                    kind=EventKind.RUNTIME_CALL,
                    name="cudaLaunchKernel",
                    category="cuda_runtime",
                    pid=CPU_PID,
                    tid=CPU_TID,
                    begin=launch_begin,
                    duration=spec.launch_call_ns,
                    correlation=corr,
                )
            )
            events.append(
                TraceEvent(
                    kind=EventKind.KERNEL,
                    name=kernel_name,
                    category="kernel",
                    pid=DEVICE_PID,
                    tid=stream,
                    begin=kernel_begin,
                    duration=duration,
                    correlation=corr,
                    stream=stream,
                    device=0,
                )
            )
            corr += 1

            tklqt_sum += kernel_begin - launch_begin
            duration_sum += duration
            n_kernels += 1
            kernel_intervals.append((kernel_begin, kernel_end))
            streams_used.add(stream)
            name_count[kernel_name] = name_count.get(kernel_name, 0) + 1
            name_duration[kernel_name] = (
                name_duration.get(kernel_name, 0) + duration
            )
            open_segment[stream].append(kernel_name)

            t = launch_begin + spec.launch_call_ns + spec.intra_gap_ns

        op_end = t - spec.intra_gap_ns + spec.op_padding_ns
        events.append(
            TraceEvent(
                kind=EventKind.CPU_OP,
                name="aten::synth_op",
                category="cpu_op",
                pid=CPU_PID,
                tid=CPU_TID,
                begin=op_begin,
                duration=op_end - op_begin,
            )
        )
        op_intervals.append((op_begin, op_end))
        t = op_end + spec.inter_op_gap_ns

        if spec.sync_probability and rng.random() < spec.sync_probability:
            sync_begin = t
            sync_end = max(sync_begin + spec.sync_call_ns, max_cursor)
            events.append(
                TraceEvent(
                    kind=EventKind.SYNC,
                    name="cudaDeviceSynchronize",
                    category="cuda_runtime",
                    pid=CPU_PID,
                    tid=CPU_TID,
                    begin=sync_begin,
                    duration=sync_end - sync_begin,
                )
            )
            n_syncs += 1
            for stream, names in open_segment.items():
                if names:
                    segments_done.append(names)
                    open_segment[stream] = []
            t = sync_end + spec.inter_op_gap_ns

    for names in open_segment.values():
        if names:
            segments_done.append(names)

    assert first_op_begin is not None
    il_start = first_op_begin
    il_end = max(end for _, end in kernel_intervals)
    il = il_end - il_start
    window = (il_start, il_end)
    gpu_busy = _merge_length(kernel_intervals, window)
    cpu_busy = _merge_length(op_intervals, window)
    akd = Fraction(duration_sum, n_kernels)

    def top_name(tallies: dict[str, int]) -> str:
        return min(tallies, key=lambda name: (-tallies[name], name))

    lengths = sorted(
        set(spec.report_lengths)
        | {len(p.chain) for p in spec.planted_chains}
    )
    truth: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "seed": spec.seed,
        "label": spec.label,
        "n_events": len(events),
        "counts": {
            "CpuOp": len(schedule),
            "RuntimeCall": n_kernels,
            "Kernel": n_kernels,
            "Sync": n_syncs,
            "Memcpy": 0,
            "Other": 0,
        },
        "tklqt": tklqt_sum,
        "akd": f"{akd.numerator}/{akd.denominator}",
        "il": il,
        "gpu_idle": il - duration_sum,
        "gpu_idle_union": il - gpu_busy,
        "cpu_idle": max(il - cpu_busy, 0),
        "multi_stream": len(streams_used) > 1,
        "n_kernels": n_kernels,
        "n_launches": n_kernels,
        "top_kernel_by_count": top_name(name_count),
        "top_kernel_by_total_duration": top_name(name_duration),
        "fusion": {
            str(length): _fusion_truth(segments_done, length)
            for length in lengths
        },
    }

    events.sort(key=TraceEvent.sort_key)
    trace = Trace(events=tuple(events), meta={"label": spec.label or "synthetic"})
    return trace, truth


def sidecar_path_for(trace_path: str | Path) -> Path:
    trace_path = Path(trace_path)
    stem = trace_path.name
    for suffix in (".gz", ".json"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return trace_path.parent / f"{stem}.sidecar.json"


def generate_to(
    spec: GenSpec, out_dir: str | Path, stem: str | None = None
) -> tuple[Path, Path]:
    """Write <stem>.json and <stem>.sidecar.json under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or spec.label or f"trace_seed{spec.seed}"
    trace, truth = generate(spec)
    trace_path = out_dir / f"{stem}.json"
    write_trace(trace, trace_path)
    sidecar = sidecar_path_for(trace_path)
    sidecar.write_text(
        json.dumps(truth, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return trace_path, sidecar


def _sweep_pacing(
    spec: GenSpec, batch_sizes: Sequence[int], transition_batch: int | None
) -> tuple[Tick, int]:
    """Pick the launch-to-launch spacing and the flat-region kernel
    duration scale for a sweep. Returns (spacing delta, base duration)."""
    base = spec.kernel_duration
    if base.kind != "fixed":
        raise InvalidSpec("sweep generation needs a fixed kernel_duration")
    if spec.launch_overhead.kind != "fixed":
        raise InvalidSpec("sweep generation needs a fixed launch_overhead")
    base_kd = base.value
    if transition_batch is None:
        delta = base_kd * max(batch_sizes) + 1000
    else:
        if transition_batch not in batch_sizes:
            raise InvalidSpec("transition_batch must be one of batch_sizes")
        index = list(batch_sizes).index(transition_batch)
        if index < 2:
            raise InvalidSpec(
                "transition_batch needs at least two smaller batch sizes"
            )
        prev = batch_sizes[index - 1]
        delta = base_kd * (prev + transition_batch) // 2
    floor = spec.op_prologue_ns + spec.launch_call_ns + spec.inter_op_gap_ns
    if delta < floor + 1:
        raise InvalidSpec(
            f"kernel_duration too small for sweep pacing (spacing {delta} ns "
            f"below CPU floor {floor} ns)"
        )
    return delta, base_kd


def generate_sweep(
    spec: GenSpec,
    batch_sizes: Sequence[int],
    out_dir: str | Path,
    transition_batch: int | None = None,
    stem: str | None = None,
) -> Path:
    """Generate one trace per batch size plus a manifest.

    Kernel durations scale linearly with batch size while the launch pace
    stays fixed, so the launch-and-queuing total is flat until kernels
    outlast the pace and climbs steeply afterwards. The configured
    transition batch (if any) is recorded in the manifest.
    """
    spec.validate()
    batch_sizes = list(batch_sizes)
    if len(batch_sizes) < 3:
        raise InvalidSpec("a sweep needs at least 3 batch sizes")
    if any(a >= b for a, b in zip(batch_sizes, batch_sizes[1:])):
        raise InvalidSpec("batch_sizes must be strictly increasing")
    if spec.kernels_per_op != DistSpec.fixed(1):
        raise InvalidSpec("sweep generation uses one kernel per operator")
    if spec.n_streams != 1 or spec.sync_probability:
        raise InvalidSpec("sweep generation uses one stream and no syncs")
    if spec.planted_chains:
        raise InvalidSpec(
            "planted chains would break the sweep's constant launch pacing"
        )

    delta, base_kd = _sweep_pacing(spec, batch_sizes, transition_batch)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or spec.label or f"sweep_seed{spec.seed}"

    entries = []
    for batch_size in batch_sizes:
        padding = delta - (
            spec.op_prologue_ns + spec.launch_call_ns + spec.inter_op_gap_ns
        )
        per_batch = replace(
            spec,
            label=f"{stem}_bs{batch_size}",
            kernel_duration=DistSpec.fixed(base_kd * batch_size),
            queuing_mode=QUEUE_SATURATE,
            saturate_after=0,
            op_padding_ns=padding,
            intra_gap_ns=0,
        )
        trace_path, _ = generate_to(per_batch, out_dir, stem=per_batch.label)
        entries.append(
            {"file": trace_path.name, "batch_size": batch_size}
        )

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "label": stem,
        "expected_transition": transition_batch,
        "traces": entries,
    }
    manifest_path = out_dir / f"{stem}_manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path
