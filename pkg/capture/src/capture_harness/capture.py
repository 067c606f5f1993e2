"""Run a model forward pass under the framework profiler per batch size.

Emits one Chrome-trace file per batch size, named ``<model>_bs<N>.json``,
plus the manifest the analysis toolkit's ``classify`` command consumes.
Profiling covers CPU and accelerator activity classes; warmup iterations
run outside the profiler so the exported window is exactly one
post-warmup forward pass.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

DEFAULT_SEQUENCE_LENGTH = 512


class EnvironmentUnavailable(RuntimeError):
    """The framework or an accelerator is not usable here."""


class ModelLoadError(RuntimeError):
    """The requested model could not be loaded."""


@dataclass(frozen=True)
class CaptureSpec:
    model: str
    batch_sizes: tuple[int, ...]
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH
    warmup: int = 2
    out_dir: Path = field(default_factory=lambda: Path("."))

    def validate(self) -> None:
        if not self.batch_sizes or any(b <= 0 for b in self.batch_sizes):
            raise ValueError("batch sizes must be positive")
        if self.sequence_length <= 0:
            raise ValueError("sequence length must be positive")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")

    @property
    def file_stem(self) -> str:
        return self.model.replace("/", "_")


def _require_accelerator():
    try:
        import torch
    except ImportError as exc:  # pragma: no cover - torch is normally present
        raise EnvironmentUnavailable(f"torch not importable: {exc}") from exc
    if not torch.cuda.is_available():
        raise EnvironmentUnavailable("no CUDA accelerator available")
    return torch


def _load_model(torch, name: str):
    try:
        import transformers

        config = transformers.AutoConfig.from_pretrained(name)
        model = transformers.AutoModel.from_pretrained(name)
    except Exception as exc:
        raise ModelLoadError(f"cannot load model {name!r}: {exc}") from exc
    model = model.eval().to("cuda")
    return model, config


def write_manifest(
    out_dir: Path, label: str, entries: list[tuple[str, int]]
) -> Path:
    """Write the sweep manifest the analysis CLI consumes."""
    manifest = {
        "schema_version": 1,
        "label": label,
        "expected_transition": None,
        "traces": [
            {"file": name, "batch_size": batch} for name, batch in entries
        ],
    }
    path = out_dir / f"{label}_manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def capture(spec: CaptureSpec) -> Path:
    """Profile one forward pass per batch size; returns the manifest path.

    Raises EnvironmentUnavailable without an accelerator and
    ModelLoadError when the model cannot be loaded.
    """
    spec.validate()
    torch = _require_accelerator()
    from torch.profiler import ProfilerActivity, profile

    model, config = _load_model(torch, spec.model)
    vocab = int(getattr(config, "vocab_size", 1000) or 1000)
    spec.out_dir.mkdir(parents=True, exist_ok=True)

    entries: list[tuple[str, int]] = []
    for batch_size in spec.batch_sizes:
        inputs = {
            "input_ids": torch.randint(
                1, vocab, (batch_size, spec.sequence_length), device="cuda"
            ),
            "attention_mask": torch.ones(
                batch_size, spec.sequence_length, dtype=torch.long, device="cuda"
            ),
        }
        with torch.no_grad():
            for _ in range(spec.warmup):
                model(**inputs)
            torch.cuda.synchronize()
            with profile(
                activities=[ProfilerActivity.CPU, ProfilerActivity.CUDA]
            ) as prof:
                model(**inputs)
                torch.cuda.synchronize()
        name = f"{spec.file_stem}_bs{batch_size}.json"
        prof.export_chrome_trace(str(spec.out_dir / name))
        entries.append((name, batch_size))
        log.info("captured batch size %d -> %s", batch_size, name)

    return write_manifest(spec.out_dir, spec.file_stem, entries)
