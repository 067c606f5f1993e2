"""Brute-force reference implementations the fast paths are tested against.

These stay deliberately naive (quadratic scans, full window enumeration)
and independent of the package internals.
"""

from __future__ import annotations


def parent_oracle(ops: list[tuple[int, int, int, int]]) -> list[int | None]:
    """O(n^2) smallest-enclosing-interval parent assignment.

    ops: (tid, begin, duration, index) per operator, index being the
    position in the trace's event order. Candidate parents share the tid
    and contain the child's begin in [begin, end); at identical begins the
    longer (then earlier-indexed) operator is the outer one. Among
    candidates the smallest duration wins, ties to the latest begin, then
    the earliest index. Returns, per op, the index of its parent or None.
    """
    parents: list[int | None] = []
    for tid, begin, duration, index in ops:
        best_key = None
        best_index = None
        for p_tid, p_begin, p_duration, p_index in ops:
            if p_index == index or p_tid != tid:
                continue
            if p_begin < begin:
                contains = begin < p_begin + p_duration
            elif p_begin == begin:
                contains = p_duration > duration or (
                    p_duration == duration and p_index < index
                )
            else:
                contains = False
            if not contains:
                continue
            key = (p_duration, -p_begin, p_index)
            if best_key is None or key < best_key:
                best_key = key
                best_index = p_index
        parents.append(best_index)
    return parents


def window_oracle(
    sequences: list[list[str]], length: int
) -> tuple[dict[tuple[str, ...], int], dict[str, int]]:
    """Enumerate every full window of the given length.

    Returns ({window: occurrences}, {head name: start opportunities}).
    """
    windows: dict[tuple[str, ...], int] = {}
    heads: dict[str, int] = {}
    for names in sequences:
        for i in range(len(names)):
            if i + length > len(names):
                continue
            window = tuple(names[i : i + length])
            windows[window] = windows.get(window, 0) + 1
            heads[names[i]] = heads.get(names[i], 0) + 1
    return windows, heads


def greedy_oracle(sequences: list[list[str]], chain: tuple[str, ...]) -> int:
    """Left-to-right disjoint occurrence count for one chain."""
    count = 0
    for names in sequences:
        i = 0
        while i + len(chain) <= len(names):
            if tuple(names[i : i + len(chain)]) == chain:
                count += 1
                i += len(chain)
            else:
                i += 1
    return count
