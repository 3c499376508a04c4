"""Universal feature extraction: windowed NLI scores pooled per backend,
plus lexical overlap statistics.

The full feature layout is 17 dimensions:

    0-5   backend A pooled: max_entail, max_neutral, max_contradict,
          mean_entail, mean_neutral, mean_contradict
    6-11  backend B, same order
    12    source token count
    13    hypothesis token count
    14    length ratio hypothesis/source
    15    ROUGE-L F-measure
    16    Jaccard similarity

Ablation masks remove dimensions (the vector shrinks, nothing is zeroed).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, HaltError

log = logging.getLogger(__name__)

WINDOW_SIZE = 320
PLACEHOLDER_TOKEN = "<empty>"

FEATURE_NAMES = (
    "a_max_entail", "a_max_neutral", "a_max_contradict",
    "a_mean_entail", "a_mean_neutral", "a_mean_contradict",
    "b_max_entail", "b_max_neutral", "b_max_contradict",
    "b_mean_entail", "b_mean_neutral", "b_mean_contradict",
    "source_tokens", "hypothesis_tokens", "length_ratio",
    "rouge_l_f", "jaccard",
)

_BACKEND_A_IDX = tuple(range(0, 6))
_BACKEND_B_IDX = tuple(range(6, 12))
_ENTAIL_IDX = (0, 3, 6, 9)
_CONTRADICT_IDX = (2, 5, 8, 11)
_LEXICAL_IDX = (12, 13, 14, 15, 16)


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokenization with leading/trailing punctuation
    split off as separate tokens.

    Interior punctuation is kept ("don't", "3.14" stay whole), so the token
    count never drops below the whitespace-chunk count.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        lead: list[str] = []
        while chunk and not chunk[0].isalnum():
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail: list[str] = []
        while chunk and not chunk[-1].isalnum():
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tokens


def make_windows(tokens: list[str], size: int = WINDOW_SIZE, stride: int = WINDOW_SIZE) -> list[list[str]]:
    """Partition a token list into non-overlapping windows.

    All windows have `size` tokens except possibly the last. Stride must
    equal size; overlapping windows are out of contract.
    """
    if size < 1:
        raise ValueError(f"window size must be >= 1, got {size}")
    if stride != size:
        raise ValueError(f"stride ({stride}) must equal window size ({size})")
    if not tokens:
        raise DegenerateInputError("cannot window an empty token list")
    return [tokens[i:i + size] for i in range(0, len(tokens), size)]


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Single-row DP; O(len(a) * len(b)) time, O(len(b)) space.
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(a: list[str], b: list[str]) -> tuple[float, float, float]:
    """ROUGE-L (precision, recall, F) between reference `a` and candidate `b`.

    precision = LCS/|b|, recall = LCS/|a|, F = 2PR/(P+R) with F = 0 when
    the LCS is empty.
    """
    if not a or not b:
        raise DegenerateInputError("rouge_l requires non-empty token lists")
    lcs = _lcs_length(a, b)
    precision = lcs / len(b)
    recall = lcs / len(a)
    if precision + recall == 0.0:
        return 0.0, 0.0, 0.0
    f = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f


def jaccard(a: list[str], b: list[str]) -> float:
    """Intersection-over-union of the unique token sets."""
    if not a or not b:
        raise DegenerateInputError("jaccard requires non-empty token lists")
    sa, sb = set(a), set(b)
    return len(sa & sb) / len(sa | sb)


def pool_distributions(scores: list) -> tuple[float, float, float, float, float, float]:
    """Max- and mean-pool a list of NLI distributions.

    Returns (max_e, max_n, max_c, mean_e, mean_n, mean_c).
    """
    if not scores:
        raise DegenerateInputError("cannot pool an empty distribution list")
    arr = np.array([(d.entail, d.neutral, d.contradict) for d in scores], dtype=float)
    mx = arr.max(axis=0)
    mn = arr.mean(axis=0)
    return (mx[0], mx[1], mx[2], mn[0], mn[1], mn[2])


@dataclass(frozen=True)
class FeatureMask:
    """Ablation configuration: which feature groups to remove."""

    drop_contradiction: bool = False
    drop_entailment: bool = False
    drop_lexical: bool = False
    single_backend: str | None = None  # "a" or "b"

    def __post_init__(self):
        if self.single_backend not in (None, "a", "b"):
            raise ConfigError(f"single_backend must be 'a' or 'b', got {self.single_backend!r}")

    def kept_indices(self) -> list[int]:
        dropped: set[int] = set()
        if self.drop_contradiction:
            dropped.update(_CONTRADICT_IDX)
        if self.drop_entailment:
            dropped.update(_ENTAIL_IDX)
        if self.drop_lexical:
            dropped.update(_LEXICAL_IDX)
        if self.single_backend == "a":
            dropped.update(_BACKEND_B_IDX)
        elif self.single_backend == "b":
            dropped.update(_BACKEND_A_IDX)
        return [i for i in range(len(FEATURE_NAMES)) if i not in dropped]

    @property
    def dim(self) -> int:
        return len(self.kept_indices())

    def kept_names(self) -> list[str]:
        return [FEATURE_NAMES[i] for i in self.kept_indices()]


FULL_MASK = FeatureMask()

# Ablation variants mirroring the comparison table: name -> mask.
ABLATION_VARIANTS: dict[str, FeatureMask] = {
    "full": FULL_MASK,
    "no_contradiction": FeatureMask(drop_contradiction=True),
    "no_entailment": FeatureMask(drop_entailment=True),
    "no_lexical": FeatureMask(drop_lexical=True),
    "single_backend": FeatureMask(single_backend="b"),
}


def mask_from_name(name: str) -> FeatureMask:
    extra = {"none": FULL_MASK, "single_a": FeatureMask(single_backend="a"),
             "single_b": FeatureMask(single_backend="b")}
    if name in ABLATION_VARIANTS:
        return ABLATION_VARIANTS[name]
    if name in extra:
        return extra[name]
    known = sorted(set(ABLATION_VARIANTS) | set(extra))
    raise ConfigError(f"unknown feature mask {name!r}; known: {', '.join(known)}")


def apply_mask_to_rows(rows: np.ndarray, mask: FeatureMask) -> np.ndarray:
    """Column-select a full-layout matrix down to the masked layout."""
    if rows.shape[1] != len(FEATURE_NAMES):
        raise ValueError(
            f"mask can only be applied to the full {len(FEATURE_NAMES)}-column layout, "
            f"got {rows.shape[1]} columns"
        )
    return rows[:, mask.kept_indices()]


def _tokens_or_placeholder(text: str, example_id: str, side: str) -> list[str]:
    tokens = tokenize(text)
    if not tokens:
        log.warning("example %s has empty %s text; substituting placeholder token", example_id, side)
        return [PLACEHOLDER_TOKEN]
    return tokens


def build_feature_vector(example, backend_a, backend_b, mask: FeatureMask = FULL_MASK) -> np.ndarray:
    """Score every (premise window, hypothesis window) pair with both
    backends, pool per backend, append lexical features, apply the mask.

    Backend failures propagate tagged with the example id.
    """
    src_tokens = _tokens_or_placeholder(example.source_text, example.id, "source")
    hyp_tokens = _tokens_or_placeholder(example.generated_text, example.id, "generated")

    premise_windows = make_windows(src_tokens)
    hypothesis_windows = make_windows(hyp_tokens)

    pooled = []
    for backend in (backend_a, backend_b):
        scores = []
        for p_idx, premise in enumerate(premise_windows):
            for h_idx, hypothesis in enumerate(hypothesis_windows):
                try:
                    scores.append(backend.score(
                        premise, hypothesis,
                        example_id=example.id, premise_index=p_idx, hypothesis_index=h_idx,
                    ))
                except HaltError as exc:
                    raise type(exc)(f"example {example.id}: {exc}") from exc
        pooled.extend(pool_distributions(scores))

    n_src = len(src_tokens)
    n_hyp = len(hyp_tokens)
    _, _, rouge_f = rouge_l(src_tokens, hyp_tokens)
    lexical = [
        float(n_src),
        float(n_hyp),
        n_hyp / max(n_src, 1),
        rouge_f,
        jaccard(src_tokens, hyp_tokens),
    ]

    full = np.array(pooled + lexical, dtype=float)
    return full[mask.kept_indices()]
