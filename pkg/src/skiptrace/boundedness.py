"""CPU-bound vs GPU-bound classification over a batch-size sweep.

The launch-and-queuing total stays flat while the accelerator has spare
capacity and starts climbing once kernels queue behind each other. The
knee rule here is deliberately parameter-light: take the median of the
first few points as the plateau, then find the first point that exceeds
(1 + epsilon) x plateau and never dips back down.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import MalformedTrace, MissingInput, NonPositiveEpsilon, TooFewPoints
from .metrics import MetricReport, Tick

CPU_BOUND = "CpuBound"
GPU_BOUND = "GpuBound"

MIN_POINTS = 3

_BS_PATTERN = re.compile(r"bs(\d+)")


@dataclass(frozen=True, slots=True)
class SweepPoint:
    batch_size: int
    tklqt: Tick
    report: MetricReport | None = None


@dataclass(frozen=True)
class SweepSeries:
    """(batch size -> tklqt) series, strictly increasing batch sizes."""

    points: tuple[SweepPoint, ...]
    label: str = ""

    def __post_init__(self) -> None:
        sizes = [p.batch_size for p in self.points]
        if any(b <= 0 for b in sizes):
            raise ValueError("batch sizes must be positive")
        if any(a >= b for a, b in zip(sizes, sizes[1:])):
            raise ValueError("batch sizes must be strictly increasing")


@dataclass(frozen=True)
class BoundednessVerdict:
    transition_batch: int | None
    labels: tuple[str, ...]
    plateau_level: Fraction
    ratio_at_transition: Fraction | None


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value))


def _median(values: Sequence[int]) -> Fraction:
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return Fraction(ordered[mid])
    return Fraction(ordered[mid - 1] + ordered[mid], 2)


def classify(
    series: SweepSeries, epsilon=Fraction(1, 4), min_plateau: int = 2
) -> BoundednessVerdict:
    """Label each sweep point and locate the CPU->GPU-bound transition.

    The transition is the first point whose tklqt exceeds
    (1 + epsilon) x plateau with every later point staying above that
    bound and non-decreasing. No qualifying point means the series is
    CPU-bound throughout.
    """
    eps = _as_fraction(epsilon)
    if eps <= 0:
        raise NonPositiveEpsilon(f"epsilon must be > 0, got {eps}")
    n = len(series.points)
    if n < MIN_POINTS:
        raise TooFewPoints(f"classification needs >= {MIN_POINTS} points, got {n}")
    if not 1 <= min_plateau <= n:
        raise TooFewPoints(
            f"min_plateau {min_plateau} out of range for {n} points"
        )

    values = [p.tklqt for p in series.points]
    plateau = _median(values[:min_plateau])
    bound = (1 + eps) * plateau

    transition_index = None
    for i in range(n):
        if values[i] <= bound:
            continue
        tail = values[i:]
        if all(v > bound for v in tail) and all(
            a <= b for a, b in zip(tail, tail[1:])
        ):
            transition_index = i
            break

    if transition_index is None:
        labels = (CPU_BOUND,) * n
        return BoundednessVerdict(
            transition_batch=None,
            labels=labels,
            plateau_level=plateau,
            ratio_at_transition=None,
        )
    labels = tuple(
        CPU_BOUND if i < transition_index else GPU_BOUND for i in range(n)
    )
    ratio = (
        Fraction(values[transition_index]) / plateau if plateau > 0 else None
    )
    return BoundednessVerdict(
        transition_batch=series.points[transition_index].batch_size,
        labels=labels,
        plateau_level=plateau,
        ratio_at_transition=ratio,
    )


def sweet_spot(
    series: SweepSeries,
    theta_gpu=Fraction(3, 10),
    theta_cpu=Fraction(3, 10),
) -> tuple[int, int] | None:
    """Batch-size range where both idle fractions stay at or below the
    thresholds; the longest contiguous run wins (ties to the earliest).
    Returns None when no point qualifies."""
    tg = _as_fraction(theta_gpu)
    tc = _as_fraction(theta_cpu)
    n = len(series.points)
    if n < MIN_POINTS:
        raise TooFewPoints(f"sweet_spot needs >= {MIN_POINTS} points, got {n}")
    if any(p.report is None for p in series.points):
        raise ValueError("sweet_spot needs per-point metric reports")

    def ok(point: SweepPoint) -> bool:
        rep = point.report
        assert rep is not None
        return (
            Fraction(rep.gpu_idle) <= tg * rep.il
            and Fraction(rep.cpu_idle) <= tc * rep.il
        )

    best: tuple[int, int] | None = None
    best_len = 0
    run_start = None
    flags = [ok(p) for p in series.points] + [False]
    for i, good in enumerate(flags):
        if good and run_start is None:
            run_start = i
        elif not good and run_start is not None:
            length = i - run_start
            if length > best_len:
                best_len = length
                best = (
                    series.points[run_start].batch_size,
                    series.points[i - 1].batch_size,
                )
            run_start = None
    return best


def find_sweep_inputs(path: str | Path) -> list[tuple[int, Path]]:
    """Resolve a sweep directory or manifest file to (batch_size, file)
    pairs sorted by batch size.

    Directories are scanned for trace files carrying a ``bs<INT>`` tag in
    the name; a manifest is a JSON object with a ``traces`` array of
    ``{"file": ..., "batch_size": ...}`` entries (paths relative to the
    manifest).
    """
    path = Path(path)
    pairs: list[tuple[int, Path]] = []
    if path.is_dir():
        for child in sorted(path.iterdir()):
            if child.suffix not in (".json", ".gz") or child.name.endswith(
                (".sidecar.json", "manifest.json")
            ):
                continue
            match = _BS_PATTERN.search(child.name)
            if match:
                pairs.append((int(match.group(1)), child))
    elif path.is_file():
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            entries = doc["traces"]
            for entry in entries:
                pairs.append(
                    (int(entry["batch_size"]), path.parent / entry["file"])
                )
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedTrace(f"bad sweep manifest {path}: {exc}") from exc
    else:
        raise MissingInput(f"no such sweep input: {path}")
    pairs.sort(key=lambda pair: pair[0])
    seen = set()
    for batch_size, _ in pairs:
        if batch_size in seen:
            raise MalformedTrace(f"duplicate batch size {batch_size} in sweep")
        seen.add(batch_size)
    return pairs
