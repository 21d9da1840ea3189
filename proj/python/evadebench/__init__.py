"""Benchmark harness for detector-evading attacks on machine-generated text."""

import json
import os

from . import _core
from ._core import (
    BackendError,
    DegenerateError,
    Error,
    InputError,
    NgramModel,
    blend_assignment,
    command_names,
    compute_auc,
    detector_direction,
    flesch_reading_ease,
    metric_detector_names,
    metric_score,
    optimal_f1_threshold,
    raft_budget,
    rouge_l,
    split_sentences,
    tokenize,
)

__all__ = [
    "BackendError",
    "DegenerateError",
    "Error",
    "InputError",
    "NgramModel",
    "blend_assignment",
    "command_names",
    "compute_auc",
    "detector_direction",
    "flesch_reading_ease",
    "metric_detector_names",
    "metric_score",
    "optimal_f1_threshold",
    "raft_budget",
    "rouge_l",
    "run_command",
    "split_corpus",
    "split_sentences",
    "tokenize",
    "write_synthetic",
]


def split_corpus(samples, ratio=0.8, seed=0):
    """Return copies of ``samples`` (dicts) with stratified train/test splits."""
    jsonl = "".join(json.dumps(s) + "\n" for s in samples)
    return [json.loads(line) for line in _core.split_corpus(jsonl, ratio, seed).splitlines() if line]


def write_synthetic(directory, seed=1, per_class=200):
    """Write a synthetic corpus, reference models and a config to ``directory``."""
    return json.loads(_core.write_synthetic(os.fspath(directory), seed, per_class))


def run_command(command, config_path, out_dir, **overrides):
    """Run one harness subcommand and return its summary."""
    return json.loads(
        _core.run_command(command, os.fspath(config_path), os.fspath(out_dir), json.dumps(overrides))
    )
