"""K-fold out-of-fold training: every example is scored by the one model
whose training set excluded it, a single calibrator is fitted on those
unbiased scores, and a final model is refit on all rows for deployment.

Features must be extracted once, before this module runs; nothing here
recomputes or touches feature values, which is the purity safeguard.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import calibration, models
from .corpus import FeatureMatrix
from .errors import ConfigError, StratificationError
from .seeds import derive_seed


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    fold_of: np.ndarray  # fold index per example

    def indices_of_fold(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == j)


@dataclass
class OofConfig:
    kind: str = "logreg"
    calibration: str = "isotonic"   # or "platt"
    k: int = 5
    seed: int = 0
    c: float = 1.0
    stratified: bool = False


@dataclass
class OofResult:
    raw_scores: np.ndarray
    calibrated: np.ndarray
    fold_of: np.ndarray
    calibrator: calibration.Calibrator
    fold_models: list[models.LinearModel] = field(repr=False)
    final_model: models.LinearModel = field(repr=False)


def kfold_split(n: int, k: int = 5, seed: int = 0) -> FoldAssignment:
    """Shuffled K-fold: a seeded permutation split contiguously, the
    first (n mod k) folds one element larger."""
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if n < k:
        raise ValueError(f"cannot split {n} examples into {k} folds")
    permutation = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    base, extra = divmod(n, k)
    start = 0
    for j in range(k):
        size = base + (1 if j < extra else 0)
        fold_of[permutation[start:start + size]] = j
        start += size
    return FoldAssignment(k=k, seed=seed, fold_of=fold_of)


def stratified_kfold_split(labels: np.ndarray, k: int = 5, seed: int = 0) -> FoldAssignment:
    """Per-class shuffle dealt round-robin, keeping fold sizes within one
    of each other and each class spread evenly across folds."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if n < k:
        raise ValueError(f"cannot split {n} examples into {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    position = 0
    for value in np.unique(labels):
        members = np.flatnonzero(labels == value)
        members = members[rng.permutation(members.shape[0])]
        for idx in members:
            fold_of[idx] = position % k
            position += 1
    return FoldAssignment(k=k, seed=seed, fold_of=fold_of)


def _fit_calibrator(method: str, scores: np.ndarray, labels: np.ndarray) -> calibration.Calibrator:
    if method == "platt":
        return calibration.fit_platt(scores, labels)
    if method == "isotonic":
        return calibration.fit_isotonic(scores, labels)
    raise ConfigError(f"unknown calibration method {method!r}; expected 'platt' or 'isotonic'")


def run_oof(features: FeatureMatrix, config: OofConfig) -> OofResult:
    """Execute the full out-of-fold protocol on an extracted matrix.

    Per fold j: fit (with a fold-local standardizer) on every row outside
    fold j, score the rows inside it. The calibrator is fitted on all
    (OOF raw score, label) pairs; the final model sees 100% of the rows
    and exists only for deployment.
    """
    y = features.labels
    n = y.shape[0]
    split_seed = derive_seed(config.seed, "split")
    fit_seed = derive_seed(config.seed, "fit")
    if config.stratified:
        assignment = stratified_kfold_split(y, k=config.k, seed=split_seed)
    else:
        assignment = kfold_split(n, k=config.k, seed=split_seed)

    raw = np.empty(n, dtype=float)
    fold_models: list[models.LinearModel] = []
    for j in range(config.k):
        held_out = assignment.indices_of_fold(j)
        train = np.flatnonzero(assignment.fold_of != j)
        train_labels = y[train]
        if np.all(train_labels == train_labels[0]):
            raise StratificationError(
                f"training fold for split {j} contains a single class; "
                "try a different seed or stratified=True"
            )
        model = models.fit(config.kind, features.rows[train], train_labels,
                           c=config.c, seed=fit_seed)
        fold_models.append(model)
        raw[held_out] = models.decision_scores(model, features.rows[held_out])

    calibrator = _fit_calibrator(config.calibration, raw, y)
    calibrated = np.asarray(calibrator.apply(raw), dtype=float)
    final_model = models.fit(config.kind, features.rows, y, c=config.c, seed=fit_seed)

    return OofResult(
        raw_scores=raw, calibrated=calibrated, fold_of=assignment.fold_of.copy(),
        calibrator=calibrator, fold_models=fold_models, final_model=final_model,
    )
