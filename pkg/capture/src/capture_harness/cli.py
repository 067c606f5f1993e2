"""Capture-harness CLI: `capture` records traces, `validate` checks them.

Exit codes: 0 success, 2 usage, 3 environment unavailable, 4 model load
failure, 5 validation failure, 6 missing input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .capture import CaptureSpec, EnvironmentUnavailable, ModelLoadError, capture
from .validate import validate_trace_file

EXIT_ENV_UNAVAILABLE = 3
EXIT_MODEL_LOAD = 4
EXIT_INVALID = 5
EXIT_MISSING_INPUT = 6


def cmd_capture(args: argparse.Namespace) -> int:
    spec = CaptureSpec(
        model=args.model,
        batch_sizes=tuple(int(b) for b in args.batch_sizes.split(",")),
        sequence_length=args.sequence_length,
        warmup=args.warmup,
        out_dir=Path(args.out_dir),
    )
    try:
        manifest = capture(spec)
    except EnvironmentUnavailable as exc:
        sys.stderr.write(f"environment unavailable: {exc}\n")
        return EXIT_ENV_UNAVAILABLE
    except ModelLoadError as exc:
        sys.stderr.write(f"model load failure: {exc}\n")
        return EXIT_MODEL_LOAD
    sys.stdout.write(f"{manifest}\n")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    worst = 0
    for name in args.traces:
        path = Path(name)
        if not path.is_file():
            sys.stderr.write(f"no such file: {path}\n")
            return EXIT_MISSING_INPUT
        report = validate_trace_file(path)
        sys.stdout.write(json.dumps(report.to_obj(), sort_keys=True, indent=2) + "\n")
        if not report.ok:
            worst = EXIT_INVALID
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skiptrace-capture",
        description="Record profiler traces for the skiptrace analysis toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capture", help="profile a model across batch sizes")
    p.add_argument("model", help="model identifier (hub name or local path)")
    p.add_argument("--batch-sizes", default="1,2", help="comma-separated batch sizes")
    p.add_argument("--sequence-length", type=int, default=512)
    p.add_argument("--warmup", type=int, default=2,
                   help="iterations excluded from the exported window")
    p.add_argument("--out-dir", default="captures")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("validate", help="check emitted trace files")
    p.add_argument("traces", nargs="+", help="trace files to validate")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
