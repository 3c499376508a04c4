from __future__ import annotations

import itertools

import numpy as np
import pytest

from halt import calibration
from halt.calibration import (IsotonicCalibrator, PlattCalibrator, apply, ece,
                              fit_isotonic, fit_platt, reliability_curve)
from halt.errors import DegenerateLabelsError


def isotonic_partition_oracle(targets: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Exhaustive monotone least squares: enumerate every contiguous
    partition, keep those with nondecreasing block means, take min SSE."""
    n = len(targets)
    if weights is None:
        weights = np.ones(n)
    best_sse, best_fit = None, None
    for cuts in itertools.product([0, 1], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        means = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            w = weights[lo:hi]
            means.append(float(np.sum(w * targets[lo:hi]) / np.sum(w)))
        if any(means[i] > means[i + 1] for i in range(len(means) - 1)):
            continue
        fit = np.concatenate([
            np.full(hi - lo, m) for (lo, hi), m in zip(zip(bounds[:-1], bounds[1:]), means)
        ])
        sse = float(np.sum(weights * (targets - fit) ** 2))
        if best_sse is None or sse < best_sse - 1e-15:
            best_sse, best_fit = sse, fit
    return best_fit


def isotonic_grid_oracle(targets: np.ndarray) -> np.ndarray:
    """DP over the exact candidate value set (all contiguous block means):
    the optimal monotone fit only uses block means, so the DP optimum is
    the true optimum, found without pooling logic."""
    n = len(targets)
    prefix = np.concatenate([[0.0], np.cumsum(targets)])
    candidates = np.unique(np.array([
        (prefix[j] - prefix[i]) / (j - i) for i in range(n) for j in range(i + 1, n + 1)
    ]))
    m = len(candidates)
    cost = np.zeros(m)
    choice = np.empty((n, m), dtype=int)
    for i in range(n):
        running = np.minimum.accumulate(cost)
        is_new_min = cost <= running
        choice[i] = np.maximum.accumulate(np.where(is_new_min, np.arange(m), 0))
        cost = (targets[i] - candidates) ** 2 + running
    fit = np.empty(n)
    k = int(np.argmin(cost))
    for i in range(n - 1, -1, -1):
        fit[i] = candidates[k]
        k = int(choice[i][k])
    return fit


def test_platt_separated_scores():
    scores = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    labels = np.array([0, 0, 0, 1, 1, 1])
    cal = fit_platt(scores, labels)
    assert cal.a > 0
    assert cal.apply(scores.min()) < 0.5 < cal.apply(scores.max())
    grid = np.linspace(-5, 5, 101)
    values = cal.apply(grid)
    assert np.all(np.diff(values) >= 0)


def test_platt_uninformative_scores_predict_base_rate():
    rng = np.random.default_rng(0)
    deviations = []
    for _ in range(20):
        scores = rng.standard_normal(200)
        labels = rng.permutation(np.array([0] * 120 + [1] * 80))
        cal = fit_platt(scores, labels)
        probs = cal.apply(scores)
        deviations.append(np.max(np.abs(probs - 0.4)))
    assert np.median(deviations) <= 0.1


def test_platt_negated_scores_flip_sign_and_preserve_probs():
    rng = np.random.default_rng(5)
    scores = rng.standard_normal(100)
    labels = (scores + 0.5 * rng.standard_normal(100) > 0).astype(int)
    cal = fit_platt(scores, labels)
    flipped = fit_platt(-scores, labels)
    assert flipped.a == pytest.approx(-cal.a, abs=1e-9)
    assert np.allclose(flipped.apply(-scores), cal.apply(scores), atol=1e-9)


def test_platt_single_class_is_error():
    with pytest.raises(DegenerateLabelsError):
        fit_platt(np.array([0.0, 1.0]), np.array([1, 1]))


def test_isotonic_monotone_input_is_fixed_point():
    cal = fit_isotonic(np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, 1.0]))
    assert np.array_equal(cal.knot_values, [0.0, 1.0, 1.0])


def test_isotonic_pools_violation():
    cal = fit_isotonic(np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, 0.0]))
    assert np.allclose(cal.knot_values, [0.0, 0.5, 0.5])


def test_isotonic_constant_pooled_targets_give_constant_fit():
    # Ties pre-pool to identical targets; the fit is that constant.
    scores = np.array([1.0, 1.0, 2.0, 2.0])
    labels = np.array([0, 1, 1, 0])
    cal = fit_isotonic(scores, labels)
    assert np.array_equal(cal.knot_scores, [1.0, 2.0])
    assert np.allclose(cal.knot_values, [0.5, 0.5])


def test_isotonic_single_class_is_error():
    with pytest.raises(DegenerateLabelsError):
        fit_isotonic(np.array([0.0, 1.0]), np.array([0, 0]))


def test_isotonic_matches_partition_oracle_on_small_instances():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        targets = rng.integers(0, 2, n).astype(float)
        if targets.min() == targets.max():
            continue
        scores = np.arange(n, dtype=float)
        cal = fit_isotonic(scores, targets)
        expected = isotonic_partition_oracle(targets)
        assert np.allclose(cal.knot_values, expected, atol=1e-12)


def test_isotonic_preserves_label_mean():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(3, 60))
        scores = rng.standard_normal(n)
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            continue
        cal = fit_isotonic(scores, labels)
        fitted = cal.apply(scores)
        assert float(np.mean(fitted)) == pytest.approx(float(np.mean(labels)), abs=1e-9)


def test_apply_platt_midpoint():
    assert apply(PlattCalibrator(a=1.0, b=0.0), 0.0) == pytest.approx(0.5)


def test_apply_isotonic_interpolates():
    cal = IsotonicCalibrator(knot_scores=np.array([0.0, 1.0]),
                             knot_values=np.array([0.2, 0.8]))
    assert apply(cal, 0.5) == pytest.approx(0.5)
    assert apply(cal, 0.25) == pytest.approx(0.35)


def test_apply_isotonic_clamps_outside_knots():
    cal = IsotonicCalibrator(knot_scores=np.array([0.0, 1.0]),
                             knot_values=np.array([0.2, 0.8]))
    assert apply(cal, -5.0) == pytest.approx(0.2)
    assert apply(cal, 9.0) == pytest.approx(0.8)


def test_both_variants_are_monotone_on_random_fits():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = 150
        scores = rng.standard_normal(n) * rng.uniform(0.5, 3)
        labels = (scores + rng.standard_normal(n) > 0).astype(int)
        for cal in (fit_platt(scores, labels), fit_isotonic(scores, labels)):
            pairs = np.sort(rng.standard_normal((200, 2)) * 4, axis=1)
            low = np.asarray(cal.apply(pairs[:, 0]))
            high = np.asarray(cal.apply(pairs[:, 1]))
            assert np.all(low <= high + 1e-12)


def test_ece_perfect_confident_predictions():
    assert ece(np.ones(10), np.ones(10)) == 0.0


def test_ece_half_positive_at_half_confidence():
    probs = np.full(40, 0.5)
    labels = np.array([0, 1] * 20)
    assert ece(probs, labels) == 0.0


def test_ece_single_bin_gap():
    probs = np.array([0.95, 0.95, 0.95, 0.95])
    labels = np.array([1, 1, 1, 0])
    assert ece(probs, labels) == pytest.approx(0.2)


def test_ece_empty_is_error():
    with pytest.raises(ValueError):
        ece(np.array([]), np.array([]))


def test_ece_rejects_out_of_range():
    with pytest.raises(ValueError):
        ece(np.array([1.5]), np.array([1]))


def test_ece_last_bin_right_closed():
    # prob 1.0 lands in the last bin, not an eleventh one
    assert ece(np.array([1.0, 1.0]), np.array([1, 1])) == 0.0


def test_ece_of_well_calibrated_stream_is_small():
    rng = np.random.default_rng(13)
    probs = rng.uniform(0, 1, 10_000)
    labels = (rng.uniform(0, 1, 10_000) < probs).astype(int)
    assert ece(probs, labels) <= 0.02


def test_reliability_curve_rows_are_consistent_with_ece():
    rng = np.random.default_rng(3)
    probs = rng.uniform(0, 1, 500)
    labels = (rng.uniform(0, 1, 500) < probs).astype(int)
    rows = reliability_curve(probs, labels)
    total = sum(count for *_, count in rows)
    assert total == 500
    recomputed = sum(count / total * abs(freq - conf)
                     for _, _, conf, freq, count in rows)
    assert recomputed == pytest.approx(ece(probs, labels), abs=1e-12)
