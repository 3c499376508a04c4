"""Precision-constrained thresholding, classification metrics and curves,
and coverage-targeted selective prediction.

Conventions fixed here for reproducibility: predict positive at
probability >= threshold; precision is 0 when nothing is predicted
positive; an unreachable precision floor is a hard error, never a
silent fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import calibration
from .errors import DegenerateLabelsError, InfeasiblePrecisionError

DEFAULT_PRECISION_FLOOR = 0.70


@dataclass(frozen=True)
class DecisionPolicy:
    threshold: float
    precision_floor: float = DEFAULT_PRECISION_FLOOR
    coverage_target: float | None = None


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float


@dataclass(frozen=True)
class SelectiveReport:
    coverage_target: float
    realized_coverage: float
    n_retained: int
    n_abstained: int
    abstain_mask: np.ndarray = field(repr=False)
    metrics: Confusion | None
    single_class_retained: bool


@dataclass(frozen=True)
class RiskCoveragePoint:
    coverage: float           # target coverage for this sweep step
    realized_coverage: float
    precision: float
    f1: float


@dataclass
class EvalReport:
    policy: DecisionPolicy
    metrics: Confusion
    roc_auc: float
    ece: float
    pr_points: list[tuple[float, float, float]]      # (threshold, precision, recall)
    roc_points: list[tuple[float, float, float]]     # (threshold, fpr, tpr)
    reliability: list[tuple[float, float, float, float, int]]
    risk_coverage: list[RiskCoveragePoint]
    selective: SelectiveReport | None


def _validate_probs(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.size == 0:
        raise ValueError("need at least one prediction")
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    return probs


def confusion(probs: np.ndarray, labels: np.ndarray, threshold: float) -> Confusion:
    """Counts and rates at a threshold (positive iff prob >= threshold)."""
    probs = _validate_probs(probs)
    labels = np.asarray(labels)
    predicted = probs >= threshold
    actual = labels == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(np.sum(~predicted & ~actual))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = (tp + tn) / probs.size
    return Confusion(tp=tp, fp=fp, tn=tn, fn=fn, precision=precision,
                     recall=recall, f1=f1, accuracy=accuracy)


def _candidate_thresholds(probs: np.ndarray) -> np.ndarray:
    distinct = np.unique(probs)
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    return np.unique(np.concatenate(([0.0], midpoints, [1.0])))


def optimize_threshold(probs: np.ndarray, labels: np.ndarray,
                       pi0: float = DEFAULT_PRECISION_FLOOR) -> DecisionPolicy:
    """Maximize F1 over candidate thresholds subject to precision >= pi0.

    Candidates are midpoints of consecutive distinct probabilities plus
    the endpoints 0 and 1; F1 ties within 1e-12 go to the larger
    threshold. Raises if no candidate satisfies the floor.
    """
    probs = _validate_probs(probs)
    labels = np.asarray(labels)
    if not 0.0 < pi0 <= 1.0:
        raise ValueError(f"precision floor must be in (0, 1], got {pi0}")
    if np.all(labels == labels.flat[0]):
        raise DegenerateLabelsError("threshold optimization needs both classes present")

    feasible: list[tuple[float, float]] = []
    max_precision = 0.0
    for t in _candidate_thresholds(probs):
        stats = confusion(probs, labels, float(t))
        max_precision = max(max_precision, stats.precision)
        if stats.precision >= pi0:
            feasible.append((float(t), stats.f1))
    if not feasible:
        raise InfeasiblePrecisionError(floor=pi0, max_achievable=max_precision)
    best_f1 = max(f1 for _, f1 in feasible)
    best_threshold = max(t for t, f1 in feasible if f1 >= best_f1 - 1e-12)
    return DecisionPolicy(threshold=best_threshold, precision_floor=pi0)


def pr_curve(probs: np.ndarray, labels: np.ndarray) -> list[tuple[float, float, float]]:
    """(threshold, precision, recall) at each distinct threshold, descending."""
    probs = _validate_probs(probs)
    labels = np.asarray(labels)
    if np.all(labels == labels.flat[0]):
        raise DegenerateLabelsError("PR curve needs both classes present")
    points = []
    for t in np.unique(probs)[::-1]:
        stats = confusion(probs, labels, float(t))
        points.append((float(t), stats.precision, stats.recall))
    return points


def roc_curve(probs: np.ndarray, labels: np.ndarray) -> tuple[list[tuple[float, float, float]], float]:
    """(threshold, fpr, tpr) points per distinct threshold (descending,
    with sentinel endpoints) and the trapezoidal AUC."""
    probs = _validate_probs(probs)
    labels = np.asarray(labels)
    if np.all(labels == labels.flat[0]):
        raise DegenerateLabelsError("ROC curve needs both classes present")
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    points = [(float("inf"), 0.0, 0.0)]
    for t in np.unique(probs)[::-1]:
        stats = confusion(probs, labels, float(t))
        points.append((float(t), stats.fp / n_neg, stats.tp / n_pos))
    if points[-1][1:] != (1.0, 1.0):
        points.append((0.0, 1.0, 1.0))
    fpr = np.array([p[1] for p in points])
    tpr = np.array([p[2] for p in points])
    auc = float(np.trapezoid(tpr, fpr))
    return points, auc


def select_with_abstention(probs: np.ndarray, labels: np.ndarray, policy: DecisionPolicy,
                           coverage_target: float) -> SelectiveReport:
    """Abstain on the ceil((1 - coverage) * n) examples whose probability
    sits closest to the threshold (ties broken by index), then recompute
    metrics on the retained set.

    A retained set collapsing to one class is reported with a flag, not
    raised: coverage that low is a caller decision.
    """
    probs = _validate_probs(probs)
    labels = np.asarray(labels)
    if not 0.0 < coverage_target <= 1.0:
        raise ValueError(f"coverage target must be in (0, 1], got {coverage_target}")
    n = probs.size
    n_abstain = int(np.ceil((1.0 - coverage_target) * n))

    confidence = np.abs(probs - policy.threshold)
    order = np.argsort(confidence, kind="stable")  # ties resolve to lower index
    abstain_mask = np.zeros(n, dtype=bool)
    abstain_mask[order[:n_abstain]] = True

    kept_labels = labels[~abstain_mask]
    single_class = bool(kept_labels.size == 0 or np.all(kept_labels == kept_labels.flat[0]))
    metrics = (confusion(probs[~abstain_mask], kept_labels, policy.threshold)
               if kept_labels.size else None)
    return SelectiveReport(
        coverage_target=coverage_target,
        realized_coverage=(n - n_abstain) / n,
        n_retained=n - n_abstain,
        n_abstained=n_abstain,
        abstain_mask=abstain_mask,
        metrics=metrics,
        single_class_retained=single_class,
    )


def risk_coverage_curve(probs: np.ndarray, labels: np.ndarray,
                        policy: DecisionPolicy) -> list[RiskCoveragePoint]:
    """Sweep target coverage 1.00, 0.99, ..., 0.50 through the abstention
    rule; the 1.0 endpoint equals the standard metrics."""
    points = []
    for step in range(51):
        target = 1.0 - step / 100.0
        report = select_with_abstention(probs, labels, policy, target)
        assert report.metrics is not None
        points.append(RiskCoveragePoint(
            coverage=target, realized_coverage=report.realized_coverage,
            precision=report.metrics.precision, f1=report.metrics.f1,
        ))
    return points


def build_report(probs: np.ndarray, labels: np.ndarray, policy: DecisionPolicy,
                 coverage_target: float | None = None) -> EvalReport:
    """Assemble the full evaluation: point metrics at the policy
    threshold, both curves, calibration quality, the risk-coverage
    sweep, and (optionally) the selective operating point."""
    roc_points, auc = roc_curve(probs, labels)
    selective = None
    if coverage_target is not None:
        selective = select_with_abstention(probs, labels, policy, coverage_target)
    return EvalReport(
        policy=policy,
        metrics=confusion(probs, labels, policy.threshold),
        roc_auc=auc,
        ece=calibration.ece(probs, labels),
        pr_points=pr_curve(probs, labels),
        roc_points=roc_points,
        reliability=calibration.reliability_curve(probs, labels),
        risk_coverage=risk_coverage_curve(probs, labels, policy),
        selective=selective,
    )
