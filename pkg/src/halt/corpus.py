"""Dataset loading, synthetic data generation, and feature persistence.

Benchmark records arrive in a line-delimited format (one JSON object per
line). Each record expands to two verification examples: the faithful
output (label 0, id "<line>_neg") and the hallucinated output (label 1,
id "<line>_pos"). Positive class = hallucinated.

Field mapping per task:

    summarization  source = document
                   outputs = right_summary / hallucinated_summary
    qa             source = knowledge + "\\n" + question
                   outputs = right_answer / hallucinated_answer
    dialogue       source = knowledge + "\\n" + flattened dialogue_history
                   outputs = right_response / hallucinated_response

The concatenation puts all grounding text into the NLI premise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, LayoutVersionError, ParseError
from .nli import BackendId, NliDistribution, ScoreTable

TASKS = ("summarization", "qa", "dialogue", "synthetic")

LAYOUT_VERSION = 1
FEATURE_FILE_MAGIC = "#halt-features-v1"

_HALUEVAL_FIELDS = {
    "summarization": (("document",), "right_summary", "hallucinated_summary"),
    "qa": (("knowledge", "question"), "right_answer", "hallucinated_answer"),
    "dialogue": (("knowledge", "dialogue_history"), "right_response", "hallucinated_response"),
}


@dataclass(frozen=True)
class LabeledExample:
    """One (source, generated output, label) verification instance."""

    id: str
    source_text: str
    generated_text: str
    label: int
    task: str


@dataclass
class FeatureMatrix:
    ids: list[str]
    rows: np.ndarray          # n x d, float64, all finite
    labels: np.ndarray        # n, values in {0, 1}
    layout_version: int = LAYOUT_VERSION

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        n = len(self.ids)
        if self.rows.shape[0] != n or self.labels.shape[0] != n:
            raise ValueError(
                f"inconsistent sizes: {n} ids, {self.rows.shape[0]} rows, {self.labels.shape[0]} labels"
            )


def _require_nonempty(value: str, lineno: int, field_name: str) -> str:
    if not value.strip():
        raise ParseError(f"line {lineno}: field {field_name!r} is empty")
    return value


def _flatten(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return "\n".join(_flatten(v) for v in value)
    if isinstance(value, dict):
        return "\n".join(f"{k}: {_flatten(v)}" for k, v in value.items())
    return str(value)


def load_halueval(path: str | Path, task: str) -> list[LabeledExample]:
    """Load a benchmark file, expanding each record into a faithful
    (label 0) and a hallucinated (label 1) example.
    """
    if task not in _HALUEVAL_FIELDS:
        raise ConfigError(f"unknown benchmark task {task!r}; expected one of {sorted(_HALUEVAL_FIELDS)}")
    source_fields, right_field, wrong_field = _HALUEVAL_FIELDS[task]

    examples: list[LabeledExample] = []
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            lineno = index + 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON: {exc}") from exc
            parts = []
            for name in source_fields:
                if name not in record:
                    raise ParseError(f"line {lineno}: missing field {name!r}")
                parts.append(_flatten(record[name]))
            source = _require_nonempty("\n".join(parts), lineno, source_fields[0])
            for field_name, label, suffix in ((right_field, 0, "neg"), (wrong_field, 1, "pos")):
                if field_name not in record:
                    raise ParseError(f"line {lineno}: missing field {field_name!r}")
                output = _require_nonempty(_flatten(record[field_name]), lineno, field_name)
                examples.append(LabeledExample(
                    id=f"{index}_{suffix}", source_text=source,
                    generated_text=output, label=label, task=task,
                ))
    return examples


def save_examples(examples: list[LabeledExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps({
                "id": ex.id, "source_text": ex.source_text,
                "generated_text": ex.generated_text, "label": ex.label, "task": ex.task,
            }, ensure_ascii=False) + "\n")


def load_examples(path: str | Path) -> list[LabeledExample]:
    """Load canonical example records (the format `save_examples` writes)."""
    examples: list[LabeledExample] = []
    seen: set[str] = set()
    with Path(path).open(encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            lineno = index + 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON: {exc}") from exc
            for name in ("id", "source_text", "generated_text", "label", "task"):
                if name not in record:
                    raise ParseError(f"line {lineno}: missing field {name!r}")
            if record["label"] not in (0, 1):
                raise ParseError(f"line {lineno}: field 'label' must be 0 or 1, got {record['label']!r}")
            if record["id"] in seen:
                raise ParseError(f"line {lineno}: duplicate id {record['id']!r}")
            seen.add(record["id"])
            _require_nonempty(record["source_text"], lineno, "source_text")
            _require_nonempty(record["generated_text"], lineno, "generated_text")
            examples.append(LabeledExample(
                id=record["id"], source_text=record["source_text"],
                generated_text=record["generated_text"],
                label=int(record["label"]), task=record["task"],
            ))
    return examples


_VOCAB = (
    "market report city river study group water energy model value "
    "system plan growth policy record period impact region council member "
    "budget service health result season level project team change review "
    "travel event media power court trade price stock share index crop "
    "storm bridge road school library museum harbor forest island valley "
    "signal sensor filter engine module network".split()
)


@dataclass
class SyntheticDataset:
    examples: list[LabeledExample]
    scores_a: ScoreTable = field(repr=False)
    scores_b: ScoreTable = field(repr=False)


def generate_synthetic(n: int, seed: int) -> SyntheticDataset:
    """Deterministic synthetic dataset with planted NLI and lexical signal.

    Labels are Bernoulli(0.5). Hallucinated examples get stochastically
    higher contradiction mass, lower entailment mass, and lower lexical
    overlap, with independent per-backend noise so the two-backend
    ensemble carries more signal than either backend alone. Texts fit a
    single window, so score tables are keyed (id, 0, 0).
    """
    if n < 2:
        raise ValueError(f"need n >= 2 synthetic examples, got {n}")
    rng = np.random.default_rng(seed)
    examples: list[LabeledExample] = []
    tables = {"a": {}, "b": {}}

    for i in range(n):
        label = int(rng.integers(0, 2))
        src_tokens = [str(t) for t in rng.choice(_VOCAB, size=int(rng.integers(20, 61)))]
        hyp_len = int(rng.integers(8, 21))
        copy_frac = 0.80 if label == 0 else 0.45
        hyp_tokens = []
        for _ in range(hyp_len):
            if rng.random() < copy_frac:
                hyp_tokens.append(src_tokens[int(rng.integers(0, len(src_tokens)))])
            else:
                hyp_tokens.append(str(rng.choice(_VOCAB)))
        example_id = f"syn{i:06d}"
        examples.append(LabeledExample(
            id=example_id, source_text=" ".join(src_tokens),
            generated_text=" ".join(hyp_tokens), label=label, task="synthetic",
        ))

        base_entail = 0.60 - 0.40 * label
        base_contra = 0.15 + 0.40 * label
        for backend in ("a", "b"):
            entail = float(np.clip(base_entail + rng.normal(0.0, 0.22), 0.01, 0.97))
            contra = float(np.clip(base_contra + rng.normal(0.0, 0.22), 0.01, 0.97))
            neutral = max(1.0 - entail - contra, 0.01)
            total = entail + neutral + contra
            tables[backend][(example_id, 0, 0)] = NliDistribution(
                entail / total, neutral / total, contra / total
            )

    return SyntheticDataset(
        examples=examples,
        scores_a=ScoreTable(BackendId("planted-a", "1"), tables["a"]),
        scores_b=ScoreTable(BackendId("planted-b", "1"), tables["b"]),
    )


def save_features(matrix: FeatureMatrix, path: str | Path) -> None:
    """Persist a feature matrix as line-delimited text.

    Header carries the layout version and row width; values are written
    with full round-trip precision so load(save(m)) is bit-exact.
    """
    if not np.all(np.isfinite(matrix.rows)):
        raise ValueError("feature matrix contains non-finite values")
    dim = matrix.rows.shape[1]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{FEATURE_FILE_MAGIC}\t{matrix.layout_version}\t{dim}\n")
        for example_id, label, row in zip(matrix.ids, matrix.labels, matrix.rows):
            if "\t" in example_id or "\n" in example_id:
                raise FormatError(f"id {example_id!r} contains a separator character")
            values = "\t".join(repr(float(v)) for v in row)
            fh.write(f"{example_id}\t{int(label)}\t{values}\n")


def load_features(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split("\t")
        if len(parts) != 3 or parts[0] != FEATURE_FILE_MAGIC:
            raise FormatError(f"{path}: bad feature-file header {header!r}")
        try:
            version, dim = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"{path}: bad header numbers: {exc}") from exc
        if version != LAYOUT_VERSION:
            raise LayoutVersionError(
                f"{path}: layout version {version} != supported {LAYOUT_VERSION}"
            )
        ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != dim + 2:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim + 2} fields, got {len(fields)}"
                )
            if fields[1] not in ("0", "1"):
                raise FormatError(f"{path}:{lineno}: label must be 0 or 1, got {fields[1]!r}")
            try:
                row = [float(v) for v in fields[2:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if not all(np.isfinite(row)):
                raise FormatError(f"{path}:{lineno}: non-finite feature value")
            ids.append(fields[0])
            labels.append(int(fields[1]))
            rows.append(row)
    return FeatureMatrix(
        ids=ids,
        rows=np.array(rows, dtype=float).reshape(len(ids), dim),
        labels=np.array(labels, dtype=int),
        layout_version=version,
    )
