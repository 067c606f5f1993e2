"""Transition detection and sweet-spot selection over sweep series."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skiptrace.boundedness import (
    CPU_BOUND,
    GPU_BOUND,
    SweepPoint,
    SweepSeries,
    classify,
    find_sweep_inputs,
    sweet_spot,
)
from skiptrace.errors import MalformedTrace, NonPositiveEpsilon, TooFewPoints
from skiptrace.metrics import MetricReport


def series(values, batches=None) -> SweepSeries:
    batches = batches or [2**i for i in range(len(values))]
    return SweepSeries(
        points=tuple(SweepPoint(b, v) for b, v in zip(batches, values))
    )


def test_classify_example():
    verdict = classify(series([100, 101, 99, 210, 400, 800], [1, 2, 4, 8, 16, 32]))
    assert verdict.transition_batch == 8
    assert verdict.labels == (CPU_BOUND,) * 3 + (GPU_BOUND,) * 3
    assert verdict.plateau_level == Fraction(201, 2)
    assert verdict.ratio_at_transition == Fraction(210) / Fraction(201, 2)


def test_flat_series_no_transition():
    verdict = classify(series([100, 100, 100, 100]))
    assert verdict.transition_batch is None
    assert set(verdict.labels) == {CPU_BOUND}


def test_dip_after_rise_is_not_a_transition():
    # the rise must be sustained: a fall back under the bound disqualifies
    verdict = classify(series([100, 100, 300, 100, 100]))
    assert verdict.transition_batch is None


def test_late_sustained_rise_found_after_spike():
    verdict = classify(series([100, 100, 300, 100, 400, 900]))
    assert verdict.transition_batch == 16  # batches 1,2,4,8,16,32


def test_four_x_transition_ratio_pair():
    loose = classify(
        series([100, 100, 100, 450, 900, 1800, 3600], [1, 2, 4, 8, 16, 32, 64])
    )
    close = classify(
        series([100, 100, 100, 101, 99, 430, 860], [1, 2, 4, 8, 16, 32, 64])
    )
    assert loose.transition_batch == 8
    assert close.transition_batch == 32
    assert close.transition_batch / loose.transition_batch == 4


def test_too_few_points_and_bad_epsilon():
    with pytest.raises(TooFewPoints):
        classify(series([1, 2]))
    with pytest.raises(NonPositiveEpsilon):
        classify(series([1, 2, 3]), epsilon=0)
    with pytest.raises(TooFewPoints):
        classify(series([1, 2, 3]), min_plateau=4)


def test_series_invariants():
    with pytest.raises(ValueError):
        SweepSeries(points=(SweepPoint(4, 1), SweepPoint(2, 1)))
    with pytest.raises(ValueError):
        SweepSeries(points=(SweepPoint(0, 1),))


@settings(max_examples=60, deadline=None)
@given(
    values=st.lists(st.integers(min_value=1, max_value=10**9), min_size=3, max_size=12),
    factor=st.integers(min_value=1, max_value=10**6),
)
def test_scale_invariance_and_monotone_labels(values, factor):
    base = classify(series(values))
    scaled = classify(series([v * factor for v in values]))
    assert base.transition_batch == scaled.transition_batch
    assert base.labels == scaled.labels
    # labels are monotone: never CpuBound after GpuBound
    seen_gpu = False
    for label in base.labels:
        if label == GPU_BOUND:
            seen_gpu = True
        else:
            assert not seen_gpu


@settings(max_examples=60, deadline=None)
@given(
    values=st.lists(st.integers(min_value=100, max_value=10**6), min_size=3, max_size=10)
)
def test_flat_series_totality(values):
    # any series whose spread stays within (1+epsilon) has no transition
    eps = Fraction(1, 4)
    if Fraction(max(values), min(values)) <= 1 + eps:
        verdict = classify(series(values), epsilon=eps)
        assert verdict.transition_batch is None


def _report(il, gpu, cpu) -> MetricReport:
    return MetricReport(
        tklqt=0, akd=Fraction(1), il=il, gpu_idle=gpu, gpu_idle_union=gpu,
        cpu_idle=cpu, multi_stream=False, n_kernels=1, n_launches=1,
        top_k=(), meta={},
    )


def _spot_series(rows):
    return SweepSeries(
        points=tuple(
            SweepPoint(b, 100, _report(il, gpu, cpu)) for b, il, gpu, cpu in rows
        )
    )


def test_sweet_spot_example():
    rows = [
        (1, 100, 90, 5),
        (2, 100, 70, 10),
        (4, 100, 50, 15),
        (8, 100, 25, 20),
        (16, 100, 10, 28),
        (32, 100, 5, 60),
    ]
    assert sweet_spot(_spot_series(rows)) == (8, 16)


def test_sweet_spot_empty_and_vacuous():
    rows = [(1, 100, 90, 5), (2, 100, 90, 5), (4, 100, 90, 5)]
    assert sweet_spot(_spot_series(rows)) is None
    assert sweet_spot(_spot_series(rows), theta_gpu=1, theta_cpu=1) == (1, 4)


def test_sweet_spot_too_few_points():
    rows = [(1, 100, 10, 10), (2, 100, 10, 10)]
    with pytest.raises(TooFewPoints):
        sweet_spot(_spot_series(rows))


def test_sweet_spot_longest_run_wins():
    rows = [
        (1, 100, 10, 10),
        (2, 100, 90, 90),
        (4, 100, 10, 10),
        (8, 100, 10, 10),
        (16, 100, 90, 90),
    ]
    assert sweet_spot(_spot_series(rows)) == (4, 8)


def test_find_sweep_inputs_directory(tmp_path):
    for name in ("model_bs4.json", "model_bs1.json", "model_bs16.json"):
        (tmp_path / name).write_text("{}")
    (tmp_path / "notes.txt").write_text("skip me")
    pairs = find_sweep_inputs(tmp_path)
    assert [b for b, _ in pairs] == [1, 4, 16]


def test_find_sweep_inputs_manifest(tmp_path):
    (tmp_path / "a.json").write_text("{}")
    (tmp_path / "b.json").write_text("{}")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {"traces": [{"file": "b.json", "batch_size": 8}, {"file": "a.json", "batch_size": 2}]}
        )
    )
    pairs = find_sweep_inputs(manifest)
    assert [(b, p.name) for b, p in pairs] == [(2, "a.json"), (8, "b.json")]


def test_find_sweep_inputs_bad_manifest(tmp_path):
    manifest = tmp_path / "manifest.json"
    manifest.write_text('{"nope": 1}')
    with pytest.raises(MalformedTrace):
        find_sweep_inputs(manifest)
    dup = tmp_path / "dup.json"
    dup.write_text(
        json.dumps({"traces": [{"file": "x", "batch_size": 2}, {"file": "y", "batch_size": 2}]})
    )
    with pytest.raises(MalformedTrace):
        find_sweep_inputs(dup)
