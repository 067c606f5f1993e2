#!/usr/bin/env python3
"""End-to-end demo: generate a batch sweep, classify it, and mine fusions.

Generates a synthetic workload whose kernels outgrow the launch pace at a
configured batch size, runs the full analysis pipeline on every trace,
prints the per-batch metric table with the detected transition, then mines
fusion candidates on the most launch-bound point.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from skiptrace.boundedness import SweepPoint, SweepSeries, classify, find_sweep_inputs, sweet_spot
from skiptrace.fusion import fusion_plan, segment_sequences
from skiptrace.graph import build_graph
from skiptrace.metrics import compute_report, format_fraction
from skiptrace.model import parse_trace
from skiptrace.synth import DistSpec, GenSpec, generate_sweep


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--ops", type=int, default=40)
    parser.add_argument("--transition", type=int, default=16)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    out_dir = Path(args.out_dir) if args.out_dir else Path(tempfile.mkdtemp(prefix="skiptrace_demo_"))
    spec = GenSpec(
        seed=args.seed,
        label="demo",
        n_ops=args.ops,
        launch_overhead=DistSpec.fixed(2500),
        kernel_duration=DistSpec.fixed(1500),
    )
    batches = [1, 2, 4, 8, 16, 32, 64]
    manifest = generate_sweep(spec, batches, out_dir, transition_batch=args.transition)
    print(f"generated sweep under {out_dir}")

    points = []
    for batch, path in find_sweep_inputs(manifest):
        report = compute_report(build_graph(parse_trace(path)))
        points.append(SweepPoint(batch, report.tklqt, report))
    series = SweepSeries(tuple(points), label="demo")
    verdict = classify(series)

    print(f"{'batch':>6} {'tklqt_ns':>14} {'il_ns':>14} {'gpu_idle':>12} {'cpu_idle':>12}  label")
    for point, label in zip(series.points, verdict.labels):
        rep = point.report
        print(
            f"{point.batch_size:>6} {point.tklqt:>14} {rep.il:>14} "
            f"{rep.gpu_idle:>12} {rep.cpu_idle:>12}  {label}"
        )
    print(f"transition batch: {verdict.transition_batch}")
    spot = sweet_spot(series)
    print(f"sweet spot: {spot if spot else 'none'}")

    # fusion study on the most launch-bound trace (smallest batch)
    _, first_path = find_sweep_inputs(manifest)[0]
    graph = build_graph(parse_trace(first_path))
    seqs = segment_sequences(graph)
    print(f"\nfusion potential at batch {series.points[0].batch_size}:")
    print(f"{'L':>5} {'c_fused':>8} {'k_eager':>8} {'k_fused':>8} {'speedup':>10}")
    for length in (2, 4, 8, 16):
        plan = fusion_plan(seqs, length)
        print(
            f"{length:>5} {plan.c_fused:>8} {plan.k_eager:>8} {plan.k_fused:>8} "
            f"{format_fraction(plan.speedup):>10}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
