"""Exporter conformance: the score file must satisfy the verification
core's loader and window arithmetic exactly. A deterministic stub stands
in for the frozen checkpoints (same contract, no model download)."""

from __future__ import annotations

import hashlib
import json

import numpy as np
import pytest

from halt_exporter.datasets import DatasetError, read_pairs
from halt_exporter.export import ExportJob, export_scores
from halt_exporter.scoring import LabelOrderError, wire_permutation

from halt import features as core_features
from halt import nli as core_nli


class StubModel:
    """Deterministic fake checkpoint; declares a scrambled label order the
    way roberta-large-mnli does (contradiction, neutral, entailment)."""

    id2label = {0: "CONTRADICTION", 1: "NEUTRAL", 2: "ENTAILMENT"}

    def __init__(self):
        self.name = "stub-nli"
        self.version = "r1"
        self._permutation = wire_permutation(self.id2label)

    def _logits(self, premise: str, hypothesis: str) -> np.ndarray:
        digest = hashlib.blake2b(f"{premise}||{hypothesis}".encode(), digest_size=12).digest()
        raw = np.frombuffer(digest, dtype=np.uint32).astype(float)
        return raw / 2**32 * 4.0 - 2.0

    def score_pairs(self, pairs):
        logits = np.stack([self._logits(p, h) for p, h in pairs])
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs = shifted / shifted.sum(axis=1, keepdims=True)
        return probs[:, self._permutation]


def _toy_dataset(path, n_records=3, long_source=False):
    records = []
    for i in range(n_records):
        document = ("word " * 700).strip() if long_source and i == 0 else f"short document {i}"
        records.append({
            "document": document,
            "right_summary": f"faithful summary {i}",
            "hallucinated_summary": f"made up claim {i}",
        })
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def test_export_passes_core_validation(tmp_path):
    dataset = tmp_path / "toy.jsonl"
    _toy_dataset(dataset)
    out = tmp_path / "scores.tsv"
    job = ExportJob(dataset_path=str(dataset), task="summarization",
                    model_id="stub", output_path=str(out), batch_size=4)
    written = export_scores(job, model=StubModel())
    table = core_nli.load_score_table(out)
    assert len(table) == written == 6
    assert table.backend_id.name == "stub-nli"
    for dist in table.entries.values():
        assert abs(dist.entail + dist.neutral + dist.contradict - 1.0) <= 1e-6


def test_export_key_set_matches_core_window_arithmetic(tmp_path):
    dataset = tmp_path / "toy.jsonl"
    _toy_dataset(dataset, long_source=True)  # 700-token source -> 3 premise windows
    out = tmp_path / "scores.tsv"
    job = ExportJob(dataset_path=str(dataset), task="summarization",
                    model_id="stub", output_path=str(out))
    export_scores(job, model=StubModel())
    table = core_nli.load_score_table(out)

    from halt.corpus import load_halueval
    expected_keys = set()
    for example in load_halueval(dataset, "summarization"):
        premise_windows = core_features.make_windows(core_features.tokenize(example.source_text))
        hyp_windows = core_features.make_windows(core_features.tokenize(example.generated_text))
        for p_idx in range(len(premise_windows)):
            for h_idx in range(len(hyp_windows)):
                expected_keys.add((example.id, p_idx, h_idx))
    assert set(table.entries) == expected_keys
    assert {k[1] for k in table.entries if k[0] == "0_neg"} == {0, 1, 2}


def test_exported_scores_feed_feature_extraction_without_misses(tmp_path):
    dataset = tmp_path / "toy.jsonl"
    _toy_dataset(dataset, long_source=True)
    out = tmp_path / "scores.tsv"
    export_scores(ExportJob(dataset_path=str(dataset), task="summarization",
                            model_id="stub", output_path=str(out)), model=StubModel())
    backend = core_nli.LookupBackend(core_nli.load_score_table(out))
    from halt.corpus import load_halueval
    for example in load_halueval(dataset, "summarization"):
        vec = core_features.build_feature_vector(example, backend, backend)
        assert vec.shape == (17,)
        assert np.all(np.isfinite(vec))


def test_export_is_deterministic(tmp_path):
    dataset = tmp_path / "toy.jsonl"
    _toy_dataset(dataset)
    out1, out2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
    for out in (out1, out2):
        export_scores(ExportJob(dataset_path=str(dataset), task="summarization",
                                model_id="stub", output_path=str(out)), model=StubModel())
    assert out1.read_bytes() == out2.read_bytes()


def test_export_batching_does_not_change_output(tmp_path):
    dataset = tmp_path / "toy.jsonl"
    _toy_dataset(dataset, n_records=5)
    outputs = []
    for batch_size in (1, 3, 64):
        out = tmp_path / f"scores_{batch_size}.tsv"
        export_scores(ExportJob(dataset_path=str(dataset), task="summarization",
                                model_id="stub", output_path=str(out),
                                batch_size=batch_size), model=StubModel())
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_export_synthetic_task_uses_canonical_records(tmp_path):
    dataset = tmp_path / "examples.jsonl"
    records = [{"id": f"syn{i}", "source_text": f"alpha beta {i}",
                "generated_text": "alpha gamma", "label": i % 2, "task": "synthetic"}
               for i in range(4)]
    dataset.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    out = tmp_path / "scores.tsv"
    written = export_scores(ExportJob(dataset_path=str(dataset), task="synthetic",
                                      model_id="stub", output_path=str(out)), model=StubModel())
    assert written == 4
    table = core_nli.load_score_table(out)
    assert {k[0] for k in table.entries} == {f"syn{i}" for i in range(4)}


def test_wire_permutation_reorders_to_wire_layout():
    # checkpoint order (contradiction, neutral, entailment) -> wire (e, n, c)
    assert wire_permutation({0: "CONTRADICTION", 1: "NEUTRAL", 2: "ENTAILMENT"}) == [2, 1, 0]
    assert wire_permutation({0: "entailment", 1: "neutral", 2: "contradiction"}) == [0, 1, 2]


def test_wire_permutation_rejects_missing_or_garbage_metadata():
    with pytest.raises(LabelOrderError):
        wire_permutation(None)
    with pytest.raises(LabelOrderError):
        wire_permutation({0: "LABEL_0", 1: "LABEL_1", 2: "LABEL_2"})
    with pytest.raises(LabelOrderError):
        wire_permutation({0: "entailment", 1: "neutral"})
    with pytest.raises(LabelOrderError):
        wire_permutation({0: "entailment", 1: "entail", 2: "neutral"})


def test_read_pairs_rejects_missing_fields(tmp_path):
    dataset = tmp_path / "bad.jsonl"
    dataset.write_text(json.dumps({"document": "d", "right_summary": "r"}) + "\n",
                       encoding="utf-8")
    with pytest.raises(DatasetError, match="hallucinated_summary"):
        read_pairs(dataset, "summarization")


def test_read_pairs_rejects_unknown_task(tmp_path):
    dataset = tmp_path / "x.jsonl"
    dataset.write_text("", encoding="utf-8")
    with pytest.raises(DatasetError, match="translation"):
        read_pairs(dataset, "translation")
