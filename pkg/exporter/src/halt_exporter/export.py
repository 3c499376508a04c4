"""Score-file emission: one record per (example, premise window,
hypothesis window) key, header identifying the producing checkpoint.

Wire format (bit-compatible with the verification core's loader):

    #halt-nli-v1 <model name> <model version>
    <id> \\t <p idx> \\t <h idx> \\t <entail> \\t <neutral> \\t <contradict>
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import read_pairs
from .windowing import WINDOW_TOKENS, tokens_or_placeholder, window

WIRE_MAGIC = "#halt-nli-v1"


@dataclass
class ExportJob:
    dataset_path: str
    task: str
    model_id: str
    output_path: str
    batch_size: int = 16
    revision: str | None = None


def _window_pair_keys(pairs):
    """Yield (example id, p idx, h idx, premise text, hypothesis text) for
    the full cross product of windows, in deterministic order."""
    for pair in pairs:
        premise_windows = window(tokens_or_placeholder(pair.source), WINDOW_TOKENS)
        hypothesis_windows = window(tokens_or_placeholder(pair.output), WINDOW_TOKENS)
        for p_idx, premise in enumerate(premise_windows):
            for h_idx, hypothesis in enumerate(hypothesis_windows):
                yield pair.example_id, p_idx, h_idx, " ".join(premise), " ".join(hypothesis)


def export_scores(job: ExportJob, model=None) -> int:
    """Score every window pair of the dataset and write the score file.

    `model` defaults to loading `job.model_id` as a Hugging Face
    checkpoint; tests inject a stub with the same contract. Returns the
    number of records written.
    """
    if model is None:
        from .scoring import TransformersNliModel
        model = TransformersNliModel(job.model_id, revision=job.revision)
    if job.batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {job.batch_size}")

    keys = list(_window_pair_keys(read_pairs(job.dataset_path, job.task)))
    written = 0
    with Path(job.output_path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{WIRE_MAGIC} {model.name} {model.version}\n")
        for start in range(0, len(keys), job.batch_size):
            batch = keys[start:start + job.batch_size]
            probs = np.asarray(model.score_pairs([(p, h) for *_, p, h in batch]), dtype=float)
            probs = probs / probs.sum(axis=1, keepdims=True)
            for (example_id, p_idx, h_idx, _, _), row in zip(batch, probs):
                entail, neutral, contradict = (float(v) for v in row)
                fh.write(f"{example_id}\t{p_idx}\t{h_idx}\t"
                         f"{entail!r}\t{neutral!r}\t{contradict!r}\n")
                written += 1
    return written
