"""NLI checkpoint wrappers.

The scorer contract: `name`, `version`, and `score_pairs(pairs)` returning
an (n, 3) array of probabilities already in wire order (entail, neutral,
contradict). Class order is read from checkpoint metadata; a checkpoint
that does not declare recognizable entail/neutral/contradiction labels is
a hard error, because guessing the order would silently corrupt every
feature downstream.
"""

from __future__ import annotations

import numpy as np


class LabelOrderError(Exception):
    """Checkpoint metadata does not declare a usable NLI label order."""


_CANONICAL = {
    "entailment": 0, "entail": 0,
    "neutral": 1,
    "contradiction": 2, "contradict": 2,
}


def wire_permutation(id2label: dict | None) -> list[int]:
    """Map checkpoint class indices to wire columns: result[k] is the
    checkpoint column holding wire class k."""
    if not id2label:
        raise LabelOrderError("checkpoint config carries no id2label metadata")
    if len(id2label) != 3:
        raise LabelOrderError(f"expected 3 NLI classes, checkpoint declares {len(id2label)}")
    slots: dict[int, int] = {}
    for index, label in id2label.items():
        wire = _CANONICAL.get(str(label).strip().lower())
        if wire is None:
            raise LabelOrderError(
                f"unrecognized class label {label!r}; cannot infer entail/neutral/contradiction order"
            )
        if wire in slots:
            raise LabelOrderError(f"duplicate class label {label!r} in checkpoint metadata")
        slots[wire] = int(index)
    return [slots[0], slots[1], slots[2]]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


class TransformersNliModel:
    """Frozen Hugging Face sequence-classification checkpoint.

    Loaded lazily so the exporter package imports without torch; install
    the `models` extra to use it.
    """

    def __init__(self, model_id: str, revision: str | None = None,
                 device: str = "cpu", max_length: int = 512):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise ImportError(
                "transformers/torch are required to run checkpoints; "
                "pip install 'halt-nli-exporter[models]'"
            ) from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id, revision=revision)
        self._model = AutoModelForSequenceClassification.from_pretrained(
            model_id, revision=revision).to(device).eval()
        self._device = device
        self._max_length = max_length
        self._permutation = wire_permutation(self._model.config.id2label)
        self.name = model_id
        commit = getattr(self._model.config, "_commit_hash", None)
        self.version = (revision or commit or "unknown").replace(" ", "_")

    def score_pairs(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        tokens = self._tokenizer(
            [p for p, _ in pairs], [h for _, h in pairs],
            truncation=True, padding=True, max_length=self._max_length,
            return_tensors="pt",
        ).to(self._device)
        with self._torch.no_grad():
            logits = self._model(**tokens).logits.cpu().numpy()
        return _softmax(logits)[:, self._permutation]
