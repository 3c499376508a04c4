"""Scoring contract for frozen NLI models and its two in-process
implementations: a precomputed-score file reader and a deterministic
synthetic scorer.

Score file wire format (UTF-8, LF):

    #halt-nli-v1 <backend name> <backend version>
    <example id> \\t <premise idx> \\t <hypothesis idx> \\t <entail> \\t <neutral> \\t <contradict>

Probabilities are decimal text with full round-trip precision. A loaded
distribution whose sum is within 1e-4 of 1 is renormalized; anything
further off is rejected.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import FormatError, MissingScoreError, ScoreValidationError
from .features import jaccard

SCORE_FILE_MAGIC = "#halt-nli-v1"

ScoreKey = tuple[str, int, int]  # (example id, premise window idx, hypothesis window idx)


@dataclass(frozen=True)
class NliDistribution:
    """(entail, neutral, contradict) probabilities for one window pair."""

    entail: float
    neutral: float
    contradict: float

    def validate(self, tol: float = 1e-6) -> None:
        parts = (self.entail, self.neutral, self.contradict)
        if any(p < 0.0 or p > 1.0 for p in parts):
            raise ScoreValidationError(f"distribution components outside [0, 1]: {parts}")
        if abs(sum(parts) - 1.0) > tol:
            raise ScoreValidationError(f"distribution sums to {sum(parts)!r}, not 1")

    def renormalized(self) -> "NliDistribution":
        total = self.entail + self.neutral + self.contradict
        return NliDistribution(self.entail / total, self.neutral / total, self.contradict / total)


@dataclass(frozen=True)
class BackendId:
    name: str
    version: str


class NliBackend(Protocol):
    """Contract every scorer implements.

    `score` must be deterministic and safe to call concurrently. Lookup
    backends key on (example_id, premise_index, hypothesis_index); content
    backends use the tokens. Both receive everything they need.
    """

    backend_id: BackendId

    def score(self, premise: list[str], hypothesis: list[str], *,
              example_id: str, premise_index: int, hypothesis_index: int) -> NliDistribution:
        ...


@dataclass
class ScoreTable:
    """Immutable-after-load mapping from score keys to distributions."""

    backend_id: BackendId
    entries: dict[ScoreKey, NliDistribution]

    def __len__(self) -> int:
        return len(self.entries)


class LookupBackend:
    """Serves distributions from a precomputed score table."""

    def __init__(self, table: ScoreTable):
        self._table = table
        self.backend_id = table.backend_id

    def score(self, premise: list[str], hypothesis: list[str], *,
              example_id: str, premise_index: int, hypothesis_index: int) -> NliDistribution:
        key = (example_id, premise_index, hypothesis_index)
        dist = self._table.entries.get(key)
        if dist is None:
            raise MissingScoreError(
                f"no score for key (id={example_id!r}, premise={premise_index}, "
                f"hypothesis={hypothesis_index}) in table {self.backend_id.name}"
            )
        return dist


class SyntheticBackend:
    """Deterministic model-free scorer for tests and demos.

    Entailment mass tracks lexical overlap (clamped jaccard * 1.2 plus a
    hash-seeded perturbation <= 0.02); contradiction mass grows with the
    count of hypothesis tokens absent from the premise; neutral takes the
    remainder before normalization. A pure function of (tokens, seed).
    """

    def __init__(self, seed: int = 0, name: str = "synthetic"):
        self._seed = seed
        self.backend_id = BackendId(name=name, version="1")

    def _noise(self, premise: list[str], hypothesis: list[str]) -> float:
        payload = f"{self._seed}|{' '.join(premise)}|{' '.join(hypothesis)}"
        digest = hashlib.blake2b(payload.encode(), digest_size=8).digest()
        return 0.02 * int.from_bytes(digest, "big") / 2**64

    def score(self, premise: list[str], hypothesis: list[str], *,
              example_id: str = "", premise_index: int = 0, hypothesis_index: int = 0) -> NliDistribution:
        if not premise or not hypothesis:
            # Contract says never error; treat as fully novel hypothesis.
            overlap, novel_frac = 0.0, 1.0
        else:
            overlap = jaccard(premise, hypothesis)
            premise_set = set(premise)
            novel = sum(1 for t in hypothesis if t not in premise_set)
            novel_frac = novel / len(hypothesis)
        entail = min(max(overlap * 1.2, 0.02), 0.96) + self._noise(premise, hypothesis)
        contradict = 0.02 + 0.9 * novel_frac
        neutral = max(1.0 - entail - contradict, 0.0)
        total = entail + neutral + contradict
        return NliDistribution(entail / total, neutral / total, contradict / total)


def load_score_table(path: str | Path) -> ScoreTable:
    """Parse and validate a score file.

    Distributions within 1e-4 of summing to 1 are renormalized; worse
    sums and malformed lines raise with the offending line number.
    """
    path = Path(path)
    entries: dict[ScoreKey, NliDistribution] = {}
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 3 or parts[0] != SCORE_FILE_MAGIC:
            raise FormatError(f"{path}: bad score-file header {header!r}")
        backend_id = BackendId(name=parts[1], version=parts[2])
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 tab-separated fields, got {len(fields)}")
            try:
                key: ScoreKey = (fields[0], int(fields[1]), int(fields[2]))
                dist = NliDistribution(float(fields[3]), float(fields[4]), float(fields[5]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            total = dist.entail + dist.neutral + dist.contradict
            if abs(total - 1.0) > 1e-4:
                raise ScoreValidationError(
                    f"{path}:{lineno}: distribution sums to {total!r}, outside 1 +/- 1e-4"
                )
            if key in entries:
                raise FormatError(f"{path}:{lineno}: duplicate key {key}")
            entries[key] = dist.renormalized()
    return ScoreTable(backend_id=backend_id, entries=entries)


def save_score_table(table: ScoreTable, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{SCORE_FILE_MAGIC} {table.backend_id.name} {table.backend_id.version}\n")
        for (example_id, p_idx, h_idx), dist in sorted(table.entries.items()):
            fh.write(
                f"{example_id}\t{p_idx}\t{h_idx}\t{dist.entail!r}\t{dist.neutral!r}\t{dist.contradict!r}\n"
            )
