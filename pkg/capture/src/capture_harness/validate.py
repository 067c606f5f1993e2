"""Schema validator for traces this harness emits.

Checks, without importing any ML framework, that a trace file carries
everything the analysis toolkit needs: duration events with complete core
fields, a stream and correlation id on every kernel, a correlation id on
every launch call, and launch/kernel correlations that actually pair up.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path

LAUNCH_NAMES = {"cudaLaunchKernel", "cuLaunchKernel", "cudaLaunchKernelExC"}
CORRELATION_KEYS = ("correlation", "Correlation Id", "External id")

_CORE_FIELDS = ("name", "cat", "pid", "tid", "ts", "dur")


@dataclass
class ValidationReport:
    path: str
    counts: dict[str, int] = field(default_factory=dict)
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_obj(self) -> dict:
        return {
            "path": self.path,
            "ok": self.ok,
            "counts": self.counts,
            "issues": self.issues,
        }


def _correlation_of(args: dict) -> int | None:
    for key in CORRELATION_KEYS:
        value = args.get(key)
        if isinstance(value, int):
            return value
    return None


def validate_trace_file(path: str | Path) -> ValidationReport:
    """Validate one emitted trace file against the expected schema."""
    path = Path(path)
    report = ValidationReport(path=str(path))
    try:
        raw = path.read_bytes()
        if raw[:2] == b"\x1f\x8b":
            raw = gzip.decompress(raw)
        doc = json.loads(raw)
    except (OSError, ValueError) as exc:
        report.issues.append(f"unreadable: {exc}")
        return report

    events = doc.get("traceEvents") if isinstance(doc, dict) else doc
    if not isinstance(events, list):
        report.issues.append("no traceEvents array")
        return report

    counts = {"cpu_op": 0, "launch": 0, "kernel": 0, "other": 0}
    kernel_correlations: dict[int, int] = {}
    launch_correlations: set[int] = set()

    for i, event in enumerate(events):
        if not isinstance(event, dict) or event.get("ph") != "X":
            continue
        cat = event.get("cat", "")
        name = event.get("name", "")
        missing = [f for f in _CORE_FIELDS if f not in event]
        args = event.get("args")
        args = args if isinstance(args, dict) else {}

        if cat == "cpu_op":
            counts["cpu_op"] += 1
        elif cat == "cuda_runtime" and name in LAUNCH_NAMES:
            counts["launch"] += 1
            if _correlation_of(args) is None:
                report.issues.append(f"event {i}: launch call without correlation id")
        elif cat == "kernel":
            counts["kernel"] += 1
            if not isinstance(args.get("stream"), int):
                report.issues.append(f"event {i}: kernel without stream id")
            corr = _correlation_of(args)
            if corr is None:
                report.issues.append(f"event {i}: kernel without correlation id")
            elif corr in kernel_correlations:
                report.issues.append(
                    f"event {i}: duplicate kernel correlation {corr}"
                )
            else:
                kernel_correlations[corr] = i
        else:
            counts["other"] += 1
        if missing and cat in ("cpu_op", "cuda_runtime", "kernel"):
            report.issues.append(f"event {i}: missing fields {missing}")
        if cat == "cuda_runtime" and name in LAUNCH_NAMES:
            corr = _correlation_of(args)
            if corr is not None:
                launch_correlations.add(corr)

    for corr, index in sorted(kernel_correlations.items()):
        if corr not in launch_correlations:
            report.issues.append(
                f"event {index}: kernel correlation {corr} has no launch call"
            )

    if counts["cpu_op"] == 0:
        report.issues.append("no cpu_op events")
    if counts["kernel"] == 0:
        report.issues.append("no kernel events")
    if counts["launch"] == 0:
        report.issues.append("no kernel launch calls")

    report.counts = counts
    return report
