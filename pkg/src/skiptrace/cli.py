"""Command-line frontend.

Subcommands: metrics, classify, fuse, gen, inspect. Global flags:
--format {json,csv,table}, --out PATH, --map FILE, --pid N. The env var
SKIPTRACE_LOG sets verbosity (debug/info/warning/error; logs on stderr).

All outputs are deterministic for fixed inputs and flags: keys sorted,
decimals fixed at 6 places, no timestamps. Exit codes: 0 success, 1
internal error, 2 usage error, then one distinct code per error type
(see errors.exit_code_table).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import boundedness, fusion, metrics, synth
from .errors import MissingInput, SkiptraceError, exit_code_table
from .graph import build_graph, to_dot, to_text_tree
from .model import FieldMap, parse_trace

log = logging.getLogger("skiptrace")

FORMATS = ("json", "csv", "table")


def _setup_logging() -> None:
    level_name = os.environ.get("SKIPTRACE_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _field_map(args: argparse.Namespace) -> FieldMap | None:
    if getattr(args, "map", None):
        if not Path(args.map).is_file():
            raise MissingInput(f"no such field-map file: {args.map}")
        return FieldMap.from_file(args.map)
    return None


def _load_report(args: argparse.Namespace, path: str | Path) -> metrics.MetricReport:
    trace = parse_trace(path, overrides=_field_map(args))
    graph = build_graph(trace, pid=args.pid)
    return metrics.compute_report(graph, k=args.top_k, key=args.top_key)


def cmd_metrics(args: argparse.Namespace) -> int:
    report = _load_report(args, args.trace)
    if args.format == "json":
        _emit(metrics.report_to_json(report), args.out)
    elif args.format == "csv":
        _emit(metrics.report_to_csv(report), args.out)
    else:
        lines = [
            f"trace           {report.meta.get('label', '')}",
            f"kernels         {report.n_kernels}",
            f"launches        {report.n_launches}",
            f"tklqt           {report.tklqt} ns",
            f"akd             {metrics.format_fraction(report.akd)} ns",
            f"latency         {report.il} ns",
            f"gpu idle        {report.gpu_idle} ns",
            f"gpu idle union  {report.gpu_idle_union} ns",
            f"cpu idle        {report.cpu_idle} ns (union definition)",
            f"multi stream    {'yes' if report.multi_stream else 'no'}",
            "top kernels     (by " + args.top_key + ")",
        ]
        for agg in report.top_k:
            lines.append(
                f"  {agg.count:>6} x {agg.name}  "
                f"total {agg.total_duration} ns, "
                f"launch latency {agg.total_launch_latency} ns"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _sweep_reports(
    args: argparse.Namespace, pairs: list[tuple[int, Path]]
) -> list[tuple[int, metrics.MetricReport]]:
    def worker(pair: tuple[int, Path]) -> tuple[int, metrics.MetricReport]:
        batch, path = pair
        return batch, _load_report(args, path)

    if len(pairs) > 1 and args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(worker, pairs))
    else:
        results = [worker(p) for p in pairs]
    results.sort(key=lambda item: item[0])
    return results


def cmd_classify(args: argparse.Namespace) -> int:
    pairs = boundedness.find_sweep_inputs(args.sweep)
    if not pairs:
        raise MissingInput(f"no sweep traces found under {args.sweep}")
    reports = _sweep_reports(args, pairs)
    series = boundedness.SweepSeries(
        points=tuple(
            boundedness.SweepPoint(batch_size=b, tklqt=r.tklqt, report=r)
            for b, r in reports
        ),
        label=Path(args.sweep).name,
    )
    verdict = boundedness.classify(
        series, epsilon=args.epsilon, min_plateau=args.min_plateau
    )
    spot = boundedness.sweet_spot(
        series, theta_gpu=args.theta_gpu, theta_cpu=args.theta_cpu
    )

    if args.format == "csv":
        lines = ["batch_size,tklqt,label"]
        for point, label in zip(series.points, verdict.labels):
            lines.append(f"{point.batch_size},{point.tklqt},{label}")
        _emit("\n".join(lines) + "\n", args.out)
    elif args.format == "json":
        obj = {
            "schema_version": metrics.SCHEMA_VERSION,
            "label": series.label,
            "epsilon": metrics.format_fraction(Fraction(str(args.epsilon))),
            "min_plateau": args.min_plateau,
            "transition_batch": verdict.transition_batch,
            "plateau_level": metrics.format_fraction(verdict.plateau_level),
            "ratio_at_transition": (
                metrics.format_fraction(verdict.ratio_at_transition)
                if verdict.ratio_at_transition is not None
                else None
            ),
            "sweet_spot": list(spot) if spot else None,
            "points": [
                {"batch_size": p.batch_size, "tklqt": p.tklqt, "label": label}
                for p, label in zip(series.points, verdict.labels)
            ],
        }
        _emit(json.dumps(obj, sort_keys=True, indent=2) + "\n", args.out)
    else:
        lines = [f"sweep {series.label}: {len(series.points)} points"]
        for point, label in zip(series.points, verdict.labels):
            mark = " <- transition" if point.batch_size == verdict.transition_batch else ""
            lines.append(
                f"  bs {point.batch_size:>6}  tklqt {point.tklqt:>14} ns  {label}{mark}"
            )
        if verdict.transition_batch is None:
            lines.append("no transition (CPU-bound throughout)")
        else:
            lines.append(
                f"transition at batch size {verdict.transition_batch} "
                f"(tklqt {metrics.format_fraction(verdict.ratio_at_transition)}x plateau)"
            )
        lines.append(
            f"sweet spot: batch sizes {spot[0]}..{spot[1]}" if spot else "sweet spot: none"
        )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _parse_lengths(raw: str) -> list[int]:
    try:
        lengths = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise SkiptraceError(f"bad --lengths value {raw!r}") from exc
    if not lengths:
        raise SkiptraceError("--lengths must name at least one chain length")
    return lengths


def cmd_fuse(args: argparse.Namespace) -> int:
    trace = parse_trace(args.trace, overrides=_field_map(args))
    graph = build_graph(trace, pid=args.pid)
    seqs = fusion.segment_sequences(graph, policy=args.policy)
    threshold = Fraction(str(args.threshold))

    per_length = []
    chain_rows = []
    for length in _parse_lengths(args.lengths):
        plan = fusion.fusion_plan(seqs, length, threshold)
        window_totals, _ = fusion.window_counts(seqs, length)
        per_length.append(
            {
                "length": length,
                "unique_candidates": len(window_totals),
                "total_instances": sum(window_totals.values()),
                "n_selected": len(plan.chains),
                "c_fused": plan.c_fused,
                "k_eager": plan.k_eager,
                "k_fused": plan.k_fused,
                "speedup": metrics.format_fraction(plan.speedup),
                "speedup_exact": f"{plan.speedup.numerator}/{plan.speedup.denominator}",
            }
        )
        for cand, fused_count in zip(plan.chains, plan.fused_counts):
            chain_rows.append(
                {
                    "length": length,
                    "chain": list(cand.chain),
                    "ps": metrics.format_fraction(cand.ps),
                    "ps_raw": metrics.format_fraction(cand.ps_raw),
                    "f_chain": cand.f_chain,
                    "f_head": cand.f_head,
                    "nonoverlap_count": cand.nonoverlap_count,
                    "fused_count": fused_count,
                }
            )

    if args.format == "csv":
        lines = [
            "length,unique_candidates,total_instances,n_selected,c_fused,"
            "k_eager,k_fused,speedup"
        ]
        for row in per_length:
            lines.append(
                ",".join(
                    str(row[k])
                    for k in (
                        "length",
                        "unique_candidates",
                        "total_instances",
                        "n_selected",
                        "c_fused",
                        "k_eager",
                        "k_fused",
                        "speedup",
                    )
                )
            )
        _emit("\n".join(lines) + "\n", args.out)
    elif args.format == "json":
        obj = {
            "schema_version": metrics.SCHEMA_VERSION,
            "label": trace.meta.get("label", ""),
            "policy": args.policy,
            "threshold": metrics.format_fraction(threshold),
            "per_length": per_length,
            "chains": chain_rows,
        }
        _emit(json.dumps(obj, sort_keys=True, indent=2) + "\n", args.out)
    else:
        header = (
            f"{'L':>5} {'unique':>8} {'instances':>10} {'selected':>9} "
            f"{'c_fused':>8} {'k_eager':>8} {'k_fused':>8} {'speedup':>10}"
        )
        lines = [header]
        for row in per_length:
            lines.append(
                f"{row['length']:>5} {row['unique_candidates']:>8} "
                f"{row['total_instances']:>10} {row['n_selected']:>9} "
                f"{row['c_fused']:>8} {row['k_eager']:>8} {row['k_fused']:>8} "
                f"{row['speedup']:>10}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise MissingInput(f"no such spec file: {spec_path}")
    with open(spec_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    spec = synth.GenSpec.from_json(raw)
    out_dir = Path(args.out_dir)
    written: list[Path]
    if "sweep" in raw:
        sweep = raw["sweep"]
        manifest = synth.generate_sweep(
            spec,
            [int(b) for b in sweep["batch_sizes"]],
            out_dir,
            transition_batch=(
                int(sweep["transition_batch"])
                if sweep.get("transition_batch") is not None
                else None
            ),
            stem=args.stem,
        )
        written = [manifest]
    else:
        trace_path, sidecar = synth.generate_to(spec, out_dir, stem=args.stem)
        written = [trace_path, sidecar]
    for path in written:
        sys.stdout.write(f"{path}\n")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    trace = parse_trace(args.trace, overrides=_field_map(args))
    graph = build_graph(trace, pid=args.pid)
    if args.tree:
        Path(args.tree).write_text(to_text_tree(graph), encoding="utf-8")
    if args.dot:
        Path(args.dot).write_text(to_dot(graph), encoding="utf-8")
    streams = sorted(
        {ev.stream for ev in graph.kernels if ev.stream is not None}
    )
    obj = {
        "schema_version": metrics.SCHEMA_VERSION,
        "label": trace.meta.get("label", ""),
        "n_events": len(trace.events),
        "kind_counts": trace.kind_counts(),
        "analyzed_pid": graph.pid,
        "roots": len(graph.roots),
        "launch_pairs": len(graph.launch_pairs),
        "orphan_kernels": len(graph.orphan_kernels),
        "orphan_launches": len(graph.orphan_launches),
        "streams": streams,
        "no_kernels": graph.no_kernels,
        "span_ns": (
            trace.events[-1].end - trace.events[0].begin if trace.events else 0
        ),
        "parse_warnings": trace.meta.get("warnings", {}),
        "graph_warnings": graph.warnings,
    }
    _emit(json.dumps(obj, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _add_common(parser: argparse.ArgumentParser, with_trace_opts: bool = True) -> None:
    parser.add_argument(
        "--format", choices=FORMATS, default="json", help="output format"
    )
    parser.add_argument("--out", default=None, help="write output to a file")
    if with_trace_opts:
        parser.add_argument(
            "--map", default=None, help="JSON file overriding trace field keys"
        )
        parser.add_argument(
            "--pid", type=int, default=None, help="analyze this process id"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skiptrace",
        description=(
            "Kernel-launch trace analysis: per-trace metrics, batch-sweep "
            "boundedness classification, and fusion recommendation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="per-trace launch/queuing metrics")
    p.add_argument("trace", help="trace file (Chrome trace event JSON, optionally .gz)")
    _add_common(p)
    p.add_argument("--top-k", type=int, default=10, help="top-k kernel table size")
    p.add_argument(
        "--top-key",
        choices=metrics.TOP_K_KEYS,
        default="count",
        help="top-k ranking key",
    )
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("classify", help="CPU/GPU-bound classification over a sweep")
    p.add_argument("sweep", help="sweep directory (bs<N> filenames) or manifest file")
    _add_common(p)
    p.add_argument("--epsilon", default="0.25", help="relative rise threshold")
    p.add_argument("--min-plateau", type=int, default=2, help="plateau sample count")
    p.add_argument("--theta-gpu", default="0.3", help="sweet-spot GPU idle fraction")
    p.add_argument("--theta-cpu", default="0.3", help="sweet-spot CPU idle fraction")
    p.add_argument("--jobs", type=int, default=min(4, os.cpu_count() or 1))
    p.add_argument("--top-k", type=int, default=1, help=argparse.SUPPRESS)
    p.add_argument("--top-key", default="count", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("fuse", help="mine chains and plan idealized fusions")
    p.add_argument("trace")
    _add_common(p)
    p.add_argument("--lengths", default="2,4,8,16", help="comma-separated chain lengths")
    p.add_argument("--threshold", default="1", help="proximity-score threshold")
    p.add_argument(
        "--policy",
        choices=fusion.POLICIES,
        default=fusion.SPLIT_ON_SYNC,
        help="sequence segmentation policy",
    )
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("gen", help="generate a synthetic trace (plus ground truth)")
    p.add_argument("spec", help="generator spec JSON")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--stem", default=None, help="output file stem")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("inspect", help="summarize a trace and its graph")
    p.add_argument("trace")
    _add_common(p)
    p.add_argument("--tree", default=None, help="write the forest as a text tree")
    p.add_argument("--dot", default=None, help="write the forest in DOT format")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SkiptraceError as exc:
        sys.stderr.write(f"skiptrace: error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"skiptrace: error: {exc}\n")
        return MissingInput.exit_code
    except Exception as exc:  # pragma: no cover - internal errors
        if log.isEnabledFor(logging.DEBUG):
            raise
        sys.stderr.write(f"skiptrace: internal error: {exc}\n")
        return 1


EXIT_CODES = exit_code_table()

if __name__ == "__main__":
    sys.exit(main())
