"""Exception types shared across the toolkit.

Every error carries a distinct CLI exit code so scripted callers can
branch on failure class without parsing stderr. Code 0 is success, 1 is
reserved for unexpected internal errors, and 2 is argparse usage errors.
"""

from __future__ import annotations


class SkiptraceError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class MalformedTrace(SkiptraceError):
    """Input file is not parseable as a Chrome-trace-event document."""

    exit_code = 10


class MissingField(SkiptraceError):
    """An event of a recognized category lacks a required field."""

    exit_code = 11


class EmptyTrace(SkiptraceError):
    """The file parsed but contained zero usable events."""

    exit_code = 12


class NoKernels(SkiptraceError):
    """The operation needs at least one GPU kernel event."""

    exit_code = 13


class NoRoots(SkiptraceError):
    """The operation needs at least one parentless CPU operator."""

    exit_code = 14


class ClockSkew(SkiptraceError):
    """A kernel begins before its own launch call (negative latency)."""

    exit_code = 15


class EmptyInput(SkiptraceError):
    """A metric was requested over an empty record collection."""

    exit_code = 16


class TooFewPoints(SkiptraceError):
    """A sweep series has too few points to classify."""

    exit_code = 17


class NonPositiveEpsilon(SkiptraceError):
    """Classification threshold epsilon must be > 0."""

    exit_code = 18


class BadLength(SkiptraceError):
    """Chain length must be an integer >= 2."""

    exit_code = 19


class BadThreshold(SkiptraceError):
    """Proximity-score threshold must satisfy 0 < T <= 1."""

    exit_code = 20


class DegenerateEager(SkiptraceError):
    """A fusion plan was requested over zero kernel launches."""

    exit_code = 21


class InvalidSpec(SkiptraceError):
    """A generator spec failed validation."""

    exit_code = 22


class MissingInput(SkiptraceError):
    """An input path does not exist or cannot be read."""

    exit_code = 23


def exit_code_table() -> dict[str, int]:
    """Return the exhaustive error-name -> exit-code mapping."""
    table = {"Success": 0, "InternalError": 1, "UsageError": 2}
    for klass in SkiptraceError.__subclasses__():
        table[klass.__name__] = klass.exit_code
    return table
