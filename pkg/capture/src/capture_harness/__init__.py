"""Capture harness: records profiler traces the analysis toolkit consumes."""

from .capture import CaptureSpec, EnvironmentUnavailable, ModelLoadError, capture, write_manifest
from .validate import ValidationReport, validate_trace_file

__version__ = "0.1.0"

__all__ = [
    "CaptureSpec",
    "EnvironmentUnavailable",
    "ModelLoadError",
    "ValidationReport",
    "capture",
    "validate_trace_file",
    "write_manifest",
]
