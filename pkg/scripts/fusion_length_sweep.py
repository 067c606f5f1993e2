#!/usr/bin/env python3
"""Idealized speedup versus chain length on a planted-chain trace.

Plants a deterministic kernel chain in a noisy trace and tabulates how the
launch-count reduction scales with the fused chain length, including the
plateau once the length exceeds what the trace contains.
"""

import argparse
import sys

from skiptrace.fusion import fusion_plan, segment_sequences
from skiptrace.graph import build_graph
from skiptrace.metrics import format_fraction
from skiptrace.synth import DistSpec, GenSpec, PlantedChain, generate


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--noise-ops", type=int, default=120)
    parser.add_argument("--chain-length", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=8)
    args = parser.parse_args()

    chain = tuple(f"ck{i:03d}" for i in range(args.chain_length))
    spec = GenSpec(
        seed=args.seed,
        n_ops=args.noise_ops,
        planted_chains=(PlantedChain(chain, args.repeats, "tail"),),
        kernel_duration=DistSpec.uniform(400, 1200),
    )
    trace, _ = generate(spec)
    seqs = segment_sequences(build_graph(trace))

    lengths = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]
    print(f"{'L':>6} {'candidates':>11} {'c_fused':>8} {'k_fused':>8} {'speedup':>10}")
    for length in lengths:
        plan = fusion_plan(seqs, length)
        print(
            f"{length:>6} {len(plan.chains):>11} {plan.c_fused:>8} "
            f"{plan.k_fused:>8} {format_fraction(plan.speedup):>10}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
