"""Shared fixtures plus a per-criterion summary for the acceptance suite."""

from pathlib import Path

import pytest

from skiptrace.model import EventKind, Trace, TraceEvent

DATA_DIR = Path(__file__).parent / "data"

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_outcomes[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in sorted(_acceptance_outcomes.items()):
        status = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{name}: {status}")


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def ev(
    kind: EventKind,
    name: str,
    begin: int,
    duration: int,
    pid: int = 1,
    tid: int = 1,
    correlation: int | None = None,
    stream: int | None = None,
) -> TraceEvent:
    """Terse TraceEvent builder for hand-written fixtures (ns ticks)."""
    category = {
        EventKind.CPU_OP: "cpu_op",
        EventKind.RUNTIME_CALL: "cuda_runtime",
        EventKind.KERNEL: "kernel",
        EventKind.SYNC: "cuda_runtime",
        EventKind.MEMCPY: "gpu_memcpy",
        EventKind.OTHER: "other",
    }[kind]
    if kind is EventKind.KERNEL and stream is None:
        stream = 0
    return TraceEvent(
        kind=kind,
        name=name,
        category=category,
        pid=pid,
        tid=tid,
        begin=begin,
        duration=duration,
        correlation=correlation,
        stream=stream,
    )


def make_trace(events, label: str = "fixture") -> Trace:
    ordered = tuple(sorted(events, key=TraceEvent.sort_key))
    return Trace(events=ordered, meta={"label": label})
