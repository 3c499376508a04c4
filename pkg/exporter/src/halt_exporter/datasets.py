"""Dataset readers sharing the core's record-to-example expansion.

Benchmark records expand to two examples per line (faithful output as
"<line>_neg", hallucinated as "<line>_pos"); the exporter only needs the
text pairs, not the labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class TextPair:
    example_id: str
    source: str
    output: str


_FIELD_MAP = {
    "summarization": (("document",), "right_summary", "hallucinated_summary"),
    "qa": (("knowledge", "question"), "right_answer", "hallucinated_answer"),
    "dialogue": (("knowledge", "dialogue_history"), "right_response", "hallucinated_response"),
}


def _as_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return "\n".join(_as_text(v) for v in value)
    if isinstance(value, dict):
        return "\n".join(f"{k}: {_as_text(v)}" for k, v in value.items())
    return str(value)


def _records(path: Path):
    with path.open(encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                yield index, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{index + 1}: invalid JSON: {exc}") from exc


def read_pairs(path: str | Path, task: str) -> list[TextPair]:
    path = Path(path)
    if task == "synthetic":
        pairs = []
        for index, record in _records(path):
            for name in ("id", "source_text", "generated_text"):
                if name not in record:
                    raise DatasetError(f"{path}:{index + 1}: missing field {name!r}")
            pairs.append(TextPair(record["id"], record["source_text"], record["generated_text"]))
        return pairs
    if task not in _FIELD_MAP:
        raise DatasetError(f"unknown task {task!r}; expected one of "
                           f"{sorted(_FIELD_MAP) + ['synthetic']}")
    source_fields, right_field, wrong_field = _FIELD_MAP[task]
    pairs = []
    for index, record in _records(path):
        missing = [f for f in source_fields + (right_field, wrong_field) if f not in record]
        if missing:
            raise DatasetError(f"{path}:{index + 1}: missing field {missing[0]!r}")
        source = "\n".join(_as_text(record[f]) for f in source_fields)
        pairs.append(TextPair(f"{index}_neg", source, _as_text(record[right_field])))
        pairs.append(TextPair(f"{index}_pos", source, _as_text(record[wrong_field])))
    return pairs
