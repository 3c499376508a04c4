"""Score-to-probability calibration: Platt scaling, isotonic regression,
and expected calibration error.

Platt fits sigmoid(a*s + b) by Newton iteration on the smoothed-target
likelihood (targets (N+ + 1)/(N+ + 2) and 1/(N- + 2) instead of hard 0/1).
Isotonic fits the least-squares monotone step function via
pool-adjacent-violators and predicts by linear interpolation between
knots, constant outside the fitted range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabelsError

ECE_BINS = 10


@dataclass(frozen=True)
class PlattCalibrator:
    a: float
    b: float

    def apply(self, score) -> np.ndarray | float:
        z = self.a * np.asarray(score, dtype=float) + self.b
        p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
        return float(p) if np.isscalar(score) else p


@dataclass(frozen=True)
class IsotonicCalibrator:
    knot_scores: np.ndarray   # strictly ascending
    knot_values: np.ndarray   # nondecreasing, in [0, 1]

    def apply(self, score) -> np.ndarray | float:
        p = np.interp(np.asarray(score, dtype=float), self.knot_scores, self.knot_values)
        return float(p) if np.isscalar(score) else p


Calibrator = PlattCalibrator | IsotonicCalibrator


def _check_two_classes(labels: np.ndarray) -> None:
    if np.all(labels == labels.flat[0]):
        raise DegenerateLabelsError("calibration needs both classes present")


def fit_platt(scores: np.ndarray, labels: np.ndarray) -> PlattCalibrator:
    """Newton iteration to gradient norm <= 1e-10 (at most 200 steps)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"shape mismatch: scores {scores.shape}, labels {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores contain non-finite values")
    _check_two_classes(labels)

    n_pos = float(np.sum(labels == 1))
    n_neg = labels.shape[0] - n_pos
    targets = np.where(labels == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(a: float, b: float) -> float:
        z = a * scores + b
        return float(np.sum(targets * np.logaddexp(0.0, -z) + (1.0 - targets) * np.logaddexp(0.0, z)))

    t_bar = float(targets.mean())
    a, b = 0.0, float(np.log(t_bar / (1.0 - t_bar)))
    current = nll(a, b)
    for _ in range(200):
        z = a * scores + b
        p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
        residual = p - targets
        grad = np.array([float(residual @ scores), float(residual.sum())])
        if np.linalg.norm(grad) <= 1e-10:
            break
        curvature = p * (1.0 - p)
        h_aa = float(curvature @ (scores * scores))
        h_ab = float(curvature @ scores)
        h_bb = float(curvature.sum())
        hessian = np.array([[h_aa, h_ab], [h_ab, h_bb]]) + 1e-12 * np.eye(2)
        delta = np.linalg.solve(hessian, -grad)
        # Halve the Newton step until the likelihood improves.
        scale = 1.0
        while scale > 1e-12:
            cand = nll(a + scale * delta[0], b + scale * delta[1])
            if cand <= current:
                a, b = float(a + scale * delta[0]), float(b + scale * delta[1])
                current = cand
                break
            scale *= 0.5
        else:
            break
    return PlattCalibrator(a=a, b=b)


def fit_isotonic(scores: np.ndarray, labels: np.ndarray) -> IsotonicCalibrator:
    """Pool-adjacent-violators on (score, label) pairs.

    Tied scores are pre-pooled by averaging their labels, so knot scores
    are strictly ascending. Fitted values preserve the label mean.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape:
        raise ValueError(f"shape mismatch: scores {scores.shape}, labels {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores contain non-finite values")
    _check_two_classes(labels)

    order = np.argsort(scores, kind="stable")
    s_sorted = scores[order]
    y_sorted = labels[order]

    uniq_scores, start_index, counts = np.unique(s_sorted, return_index=True, return_counts=True)
    sums = np.add.reduceat(y_sorted, start_index)
    targets = sums / counts

    # Each stack block holds (value, weight, span); merge while decreasing.
    values: list[float] = []
    weights: list[float] = []
    spans: list[int] = []
    for value, weight in zip(targets, counts):
        values.append(float(value))
        weights.append(float(weight))
        spans.append(1)
        while len(values) >= 2 and values[-2] > values[-1]:
            w = weights[-2] + weights[-1]
            v = (values[-2] * weights[-2] + values[-1] * weights[-1]) / w
            values[-2:] = [v]
            weights[-2:] = [w]
            spans[-2:] = [spans[-2] + spans[-1]]

    fitted = np.repeat(values, spans)
    return IsotonicCalibrator(knot_scores=uniq_scores, knot_values=fitted)


def apply(calibrator: Calibrator, score):
    """Map raw score(s) through a fitted calibrator."""
    return calibrator.apply(score)


def _bin_indices(probs: np.ndarray, bins: int) -> np.ndarray:
    # Equal-width bins over [0, 1]; the last bin is right-closed.
    return np.minimum((probs * bins).astype(int), bins - 1)


def ece(probs: np.ndarray, labels: np.ndarray, bins: int = ECE_BINS) -> float:
    """Bin-weighted mean absolute gap between confidence and empirical
    positive frequency; empty bins contribute nothing."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.size == 0:
        raise ValueError("ece needs at least one prediction")
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    idx = _bin_indices(probs, bins)
    total = 0.0
    for b in range(bins):
        in_bin = idx == b
        count = int(in_bin.sum())
        if count == 0:
            continue
        gap = abs(float(labels[in_bin].mean()) - float(probs[in_bin].mean()))
        total += (count / probs.size) * gap
    return total


def reliability_curve(probs: np.ndarray, labels: np.ndarray,
                      bins: int = ECE_BINS) -> list[tuple[float, float, float, float, int]]:
    """Per-bin (low, high, mean confidence, empirical frequency, count)
    rows for non-empty bins; the data behind a reliability diagram."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.size == 0:
        raise ValueError("reliability curve needs at least one prediction")
    idx = _bin_indices(probs, bins)
    rows = []
    for b in range(bins):
        in_bin = idx == b
        count = int(in_bin.sum())
        if count == 0:
            continue
        rows.append((
            b / bins, (b + 1) / bins,
            float(probs[in_bin].mean()), float(labels[in_bin].mean()), count,
        ))
    return rows
