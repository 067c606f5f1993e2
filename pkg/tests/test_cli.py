"""CLI behavior: formats, exit codes, files, determinism."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from skiptrace.cli import main
from skiptrace.errors import exit_code_table
from skiptrace.synth import DistSpec, GenSpec, PlantedChain, generate_sweep, generate_to


def run_cli(*argv: str):
    proc = subprocess.run(
        [sys.executable, "-m", "skiptrace", *argv],
        capture_output=True,
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def demo_trace(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("demo")
    spec = GenSpec(
        seed=21, n_ops=14, kernels_per_op=DistSpec.uniform(1, 2),
        kernel_duration=DistSpec.uniform(700, 1400),
        planted_chains=(PlantedChain(("ka", "kb"), 5, "tail"),),
    )
    trace_path, _ = generate_to(spec, out, stem="demo")
    return trace_path


def test_metrics_json_and_golden(data_dir, tmp_path):
    code, stdout, _ = run_cli("metrics", str(data_dir / "mini_trace.json"))
    assert code == 0
    golden = (data_dir / "golden_metrics.json").read_bytes()
    assert stdout == golden
    report = json.loads(stdout)
    # hand-computed oracle values for the fixture
    assert report["tklqt"] == 60_000
    assert report["akd"] == "11250.000000"
    assert report["il"] == 162_500
    assert report["gpu_idle"] == 140_000
    assert report["cpu_idle"] == 32_500
    assert report["n_kernels"] == 2


def test_metrics_csv_row(data_dir):
    code, stdout, _ = run_cli("metrics", str(data_dir / "mini_trace.json"), "--format", "csv")
    assert code == 0
    header, row = stdout.decode().strip().split("\n")
    assert header == (
        "schema_version,label,n_kernels,n_launches,tklqt_ns,akd_ns,il_ns,"
        "gpu_idle_ns,gpu_idle_union_ns,cpu_idle_ns,multi_stream"
    )
    fields = row.split(",")
    assert fields[1] == "mini_trace"
    assert fields[4] == "60000"


def test_metrics_missing_file_exit_code(tmp_path):
    code, _, stderr = run_cli("metrics", str(tmp_path / "absent.json"))
    assert code == exit_code_table()["MissingInput"]
    assert b"error" in stderr


def test_metrics_no_kernels_exit_code(tmp_path):
    path = tmp_path / "cpu_only.json"
    path.write_text(
        json.dumps(
            {"traceEvents": [
                {"ph": "X", "cat": "cpu_op", "name": "op", "pid": 1, "tid": 1,
                 "ts": 0.0, "dur": 4.0}
            ]}
        )
    )
    code, _, stderr = run_cli("metrics", str(path))
    assert code == exit_code_table()["NoKernels"]


def test_metrics_malformed_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    code, _, _ = run_cli("metrics", str(path))
    assert code == exit_code_table()["MalformedTrace"]


def test_metrics_clock_skew_exit_code(tmp_path):
    doc = {
        "traceEvents": [
            {"ph": "X", "cat": "cpu_op", "name": "op", "pid": 1, "tid": 1,
             "ts": 0.0, "dur": 50.0},
            {"ph": "X", "cat": "cuda_runtime", "name": "cudaLaunchKernel",
             "pid": 1, "tid": 1, "ts": 20.0, "dur": 1.0, "args": {"correlation": 1}},
            {"ph": "X", "cat": "kernel", "name": "k", "pid": 0, "tid": 7,
             "ts": 5.0, "dur": 2.0, "args": {"correlation": 1, "stream": 7}},
        ]
    }
    path = tmp_path / "skew.json"
    path.write_text(json.dumps(doc))
    code, _, stderr = run_cli("metrics", str(path))
    assert code == exit_code_table()["ClockSkew"]
    assert b"correlation" in stderr


def test_unknown_flag_rejected(data_dir):
    code, _, stderr = run_cli("metrics", str(data_dir / "mini_trace.json"), "--bogus")
    assert code == 2
    assert b"usage" in stderr.lower()


def test_exit_codes_distinct():
    codes = list(exit_code_table().values())
    assert len(codes) == len(set(codes))


def test_classify_sweep_dir_and_manifest(tmp_path):
    spec = GenSpec(seed=13, n_ops=16, kernel_duration=DistSpec.fixed(1500))
    manifest = generate_sweep(
        spec, [1, 2, 4, 8, 16], tmp_path, transition_batch=8, stem="enc"
    )
    code, stdout, _ = run_cli("classify", str(manifest))
    assert code == 0
    verdict = json.loads(stdout)
    assert verdict["transition_batch"] == 8
    assert [p["label"] for p in verdict["points"]] == [
        "CpuBound", "CpuBound", "CpuBound", "GpuBound", "GpuBound",
    ]
    # directory mode discovers the same files via bs<N> names
    code, stdout, _ = run_cli("classify", str(tmp_path))
    assert code == 0
    assert json.loads(stdout)["transition_batch"] == 8


def test_classify_plot_csv(tmp_path):
    spec = GenSpec(seed=13, n_ops=16, kernel_duration=DistSpec.fixed(1500))
    manifest = generate_sweep(spec, [1, 2, 4], tmp_path, stem="flat")
    code, stdout, _ = run_cli("classify", str(manifest), "--format", "csv")
    assert code == 0
    lines = stdout.decode().strip().split("\n")
    assert lines[0] == "batch_size,tklqt,label"
    assert len(lines) == 4
    assert all(line.endswith("CpuBound") for line in lines[1:])


def test_classify_flat_table_message(tmp_path):
    spec = GenSpec(seed=13, n_ops=16, kernel_duration=DistSpec.fixed(1500))
    manifest = generate_sweep(spec, [1, 2, 4], tmp_path, stem="flat")
    code, stdout, _ = run_cli("classify", str(manifest), "--format", "table")
    assert code == 0
    assert b"no transition (CPU-bound throughout)" in stdout


def test_classify_malformed_manifest(tmp_path):
    bad = tmp_path / "manifest.json"
    bad.write_text('{"traces": "oops"}')
    code, _, stderr = run_cli("classify", str(bad))
    assert code == exit_code_table()["MalformedTrace"]


def test_fuse_outputs(demo_trace, tmp_path):
    out = tmp_path / "rec.json"
    code, stdout, _ = run_cli(
        "fuse", str(demo_trace), "--lengths", "2,4", "--out", str(out)
    )
    assert code == 0 and stdout == b""
    doc = json.loads(out.read_text())
    assert doc["policy"] == "split_on_sync"
    assert doc["threshold"] == "1.000000"
    lengths = {row["length"]: row for row in doc["per_length"]}
    assert set(lengths) == {2, 4}
    sidecar = json.loads(
        (demo_trace.parent / "demo.sidecar.json").read_text()
    )
    for length, row in lengths.items():
        expected = sidecar["fusion"][str(length)]
        assert row["c_fused"] == expected["c_fused"]
        assert row["k_eager"] == expected["k_eager"]
        assert row["k_fused"] == expected["k_fused"]
    chain_rows = [r for r in doc["chains"] if r["length"] == 2]
    assert any(r["chain"] == ["ka", "kb"] for r in chain_rows)


def test_fuse_oversized_length_plateaus(demo_trace):
    code, stdout, _ = run_cli(
        "fuse", str(demo_trace), "--lengths", "4096", "--format", "csv"
    )
    assert code == 0
    row = stdout.decode().strip().split("\n")[1].split(",")
    assert row[0] == "4096"
    assert row[4] == "0"  # c_fused
    assert row[-1] == "1.000000"


def test_fuse_bad_threshold(demo_trace):
    code, _, _ = run_cli("fuse", str(demo_trace), "--threshold", "2")
    assert code == exit_code_table()["BadThreshold"]


def test_gen_single_and_sweep(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps({"seed": 3, "label": "g", "n_ops": 6}))
    code, stdout, _ = run_cli("gen", str(spec_file), "--out-dir", str(tmp_path / "o"))
    assert code == 0
    trace_path, sidecar_path = [Path(line) for line in stdout.decode().split()]
    assert trace_path.is_file() and sidecar_path.is_file()

    sweep_file = tmp_path / "sweep.json"
    sweep_file.write_text(
        json.dumps(
            {
                "seed": 3, "label": "sw", "n_ops": 8,
                "kernel_duration": {"fixed": 1500},
                "sweep": {"batch_sizes": [1, 2, 4, 8], "transition_batch": 4},
            }
        )
    )
    code, stdout, _ = run_cli("gen", str(sweep_file), "--out-dir", str(tmp_path / "s"))
    assert code == 0
    manifest = Path(stdout.decode().strip())
    entries = json.loads(manifest.read_text())["traces"]
    assert [e["batch_size"] for e in entries] == [1, 2, 4, 8]
    assert all((manifest.parent / e["file"]).is_file() for e in entries)


def test_gen_invalid_spec_exit(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps({"n_ops": 0}))
    code, _, _ = run_cli("gen", str(spec_file), "--out-dir", str(tmp_path))
    assert code == exit_code_table()["InvalidSpec"]


def test_inspect_summary_and_exports(demo_trace, tmp_path):
    tree = tmp_path / "forest.txt"
    dot = tmp_path / "forest.dot"
    code, stdout, _ = run_cli(
        "inspect", str(demo_trace), "--tree", str(tree), "--dot", str(dot)
    )
    assert code == 0
    summary = json.loads(stdout)
    assert summary["analyzed_pid"] == 1000
    assert summary["kind_counts"]["Kernel"] == summary["launch_pairs"]
    assert tree.read_text().startswith("aten::synth_op")
    assert dot.read_text().startswith("digraph trace {")


def test_main_callable_in_process(data_dir, capsys):
    assert main(["metrics", str(data_dir / "mini_trace.json"), "--format", "csv"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("schema_version,")


def test_field_map_flag(tmp_path):
    doc = {
        "traceEvents": [
            {"ph": "X", "cat": "cpu_op", "name": "op", "pid": 1, "tid": 1,
             "ts": 0.0, "dur": 10.0},
            {"ph": "X", "cat": "cuda_runtime", "name": "cudaLaunchKernel",
             "pid": 1, "tid": 1, "ts": 1.0, "dur": 1.0, "args": {"corr_id": 5}},
            {"ph": "X", "cat": "kernel", "name": "k", "pid": 0, "tid": 9,
             "ts": 5.0, "dur": 2.0, "args": {"corr_id": 5, "queue": 9}},
        ]
    }
    trace = tmp_path / "t.json"
    trace.write_text(json.dumps(doc))
    code, _, _ = run_cli("metrics", str(trace))
    assert code == exit_code_table()["MissingField"]
    fmap = tmp_path / "map.json"
    fmap.write_text(json.dumps({"correlation": ["corr_id"], "stream": ["queue"]}))
    code, stdout, _ = run_cli("metrics", str(trace), "--map", str(fmap))
    assert code == 0
    assert json.loads(stdout)["n_kernels"] == 1
