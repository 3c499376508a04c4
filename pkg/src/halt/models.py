"""Task-adapted linear meta-classifiers.

Both kinds minimize

    0.5 * ||w||^2  +  C * sum_i s_i * loss(y_i * (w . x_i + b))

over standardized rows x_i, with y_i in {-1, +1}, balanced class weights
s_i, and an unregularized intercept. `logreg` uses the logistic loss
log(1 + exp(-m)); `linear_svc` uses the squared hinge max(0, 1 - m)^2.

The optimizer is deterministic full-batch gradient descent with a
backtracking (Armijo) line search; step sizes are warm-started with the
Barzilai-Borwein estimate, which keeps the iteration count practical
without giving up monotone descent or reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import IsotonicCalibrator, PlattCalibrator
from .errors import DegenerateLabelsError, FormatError

MODEL_KINDS = ("logreg", "linear_svc")
MODEL_FILE_MAGIC = "#halt-model-v1"

_SIGMA_FLOOR = 1e-12
_GRAD_TOL = 1e-6
_MAX_ITER = 10_000


def compute_class_weights(labels: np.ndarray) -> tuple[float, float]:
    """Balanced weights w_c = n / (2 * count_c), so each class carries
    half the total weight: w0*count_0 == w1*count_1 == n/2."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    count1 = int(np.sum(labels == 1))
    count0 = n - count1
    if count0 == 0 or count1 == 0:
        raise DegenerateLabelsError("class weights need both classes present")
    return n / (2.0 * count0), n / (2.0 * count1)


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension affine transform fitted on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        return cls(mean=X.mean(axis=0), std=np.maximum(X.std(axis=0), _SIGMA_FLOOR))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


@dataclass(frozen=True)
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    regularization_c: float
    standardizer: Standardizer
    seed: int
    grad_norm: float      # gradient norm at termination
    iterations: int


def _loss_and_slope(kind: str, margins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if kind == "logreg":
        loss = np.logaddexp(0.0, -margins)
        slope = -1.0 / (1.0 + np.exp(margins))
    else:  # linear_svc, squared hinge
        gap = np.maximum(0.0, 1.0 - margins)
        loss = gap * gap
        slope = -2.0 * gap
    return loss, slope


def objective_and_gradient(kind: str, Z: np.ndarray, signs: np.ndarray,
                           sample_weight: np.ndarray, c: float,
                           theta: np.ndarray) -> tuple[float, np.ndarray]:
    """Objective value and gradient at theta = [w..., b] over standardized
    rows Z with labels as signs in {-1, +1}."""
    d = Z.shape[1]
    w, b = theta[:d], theta[d]
    margins = signs * (Z @ w + b)
    loss, slope = _loss_and_slope(kind, margins)
    obj = 0.5 * float(w @ w) + c * float(sample_weight @ loss)
    coef = c * sample_weight * slope * signs
    grad = np.empty(d + 1)
    grad[:d] = w + Z.T @ coef
    grad[d] = coef.sum()
    return obj, grad


def fit(kind: str, X: np.ndarray, y: np.ndarray, c: float = 1.0, seed: int = 0,
        objective_trace: list[float] | None = None) -> LinearModel:
    """Train a meta-classifier; deterministic for fixed (X, y, seed).

    Terminates when the objective gradient norm drops to 1e-6 or after
    10,000 iterations, whichever comes first (achieved norm is recorded
    on the model). The objective decreases at every accepted step.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")

    w0, w1 = compute_class_weights(y)
    sample_weight = np.where(y == 1, w1, w0)
    signs = np.where(y == 1, 1.0, -1.0)

    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    d = Z.shape[1]

    theta = np.zeros(d + 1)
    obj, grad = objective_and_gradient(kind, Z, signs, sample_weight, c, theta)
    gnorm = float(np.linalg.norm(grad))
    step = 1.0 / max(1.0, gnorm)
    iterations = 0
    if objective_trace is not None:
        objective_trace.append(obj)

    while gnorm > _GRAD_TOL and iterations < _MAX_ITER:
        t = step
        while True:
            candidate = theta - t * grad
            cand_obj, cand_grad = objective_and_gradient(kind, Z, signs, sample_weight, c, candidate)
            if cand_obj <= obj - 1e-4 * t * gnorm * gnorm:
                break
            t *= 0.5
            if t < 1e-20:  # no representable decrease left
                cand_obj, cand_grad = obj, grad
                candidate = theta
                break
        if candidate is theta:
            break
        delta = candidate - theta
        grad_delta = cand_grad - grad
        curvature = float(delta @ grad_delta)
        step = float(delta @ delta) / curvature if curvature > 1e-300 else 1.0
        step = min(max(step, 1e-10), 1e10)
        theta, obj, grad = candidate, cand_obj, cand_grad
        gnorm = float(np.linalg.norm(grad))
        iterations += 1
        if objective_trace is not None:
            objective_trace.append(obj)

    return LinearModel(
        kind=kind, weights=theta[:d].copy(), bias=float(theta[d]),
        regularization_c=c, standardizer=scaler, seed=seed,
        grad_norm=gnorm, iterations=iterations,
    )


def decision_scores(model: LinearModel, X: np.ndarray) -> np.ndarray:
    """Raw pre-calibration scores w . x~ + b for a batch of rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"expected rows of dimension {model.weights.shape[0]}, got shape {X.shape}"
        )
    return model.standardizer.transform(X) @ model.weights + model.bias


def decision_score(model: LinearModel, x: np.ndarray) -> float:
    return float(decision_scores(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


def _vector_line(name: str, values: np.ndarray) -> str:
    return name + "\t" + "\t".join(repr(float(v)) for v in values) + "\n"


def save_model(model: LinearModel, path: str | Path,
               calibrator: PlattCalibrator | IsotonicCalibrator | None = None) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(MODEL_FILE_MAGIC + "\n")
        fh.write(f"kind\t{model.kind}\n")
        fh.write(f"c\t{model.regularization_c!r}\n")
        fh.write(f"seed\t{model.seed}\n")
        fh.write(f"grad_norm\t{model.grad_norm!r}\n")
        fh.write(f"iterations\t{model.iterations}\n")
        fh.write(_vector_line("mean", model.standardizer.mean))
        fh.write(_vector_line("std", model.standardizer.std))
        fh.write(_vector_line("weights", model.weights))
        fh.write(f"bias\t{model.bias!r}\n")
        if isinstance(calibrator, PlattCalibrator):
            fh.write("calibrator\tplatt\n")
            fh.write(f"platt_a\t{float(calibrator.a)!r}\n")
            fh.write(f"platt_b\t{float(calibrator.b)!r}\n")
        elif isinstance(calibrator, IsotonicCalibrator):
            fh.write("calibrator\tisotonic\n")
            fh.write(_vector_line("knot_scores", calibrator.knot_scores))
            fh.write(_vector_line("knot_values", calibrator.knot_values))


def load_model(path: str | Path) -> tuple[LinearModel, PlattCalibrator | IsotonicCalibrator | None]:
    path = Path(path)
    fields: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as fh:
        if fh.readline().rstrip("\n") != MODEL_FILE_MAGIC:
            raise FormatError(f"{path}: not a model file")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            fields[parts[0]] = parts[1:]
    try:
        scaler = Standardizer(
            mean=np.array([float(v) for v in fields["mean"]]),
            std=np.array([float(v) for v in fields["std"]]),
        )
        model = LinearModel(
            kind=fields["kind"][0],
            weights=np.array([float(v) for v in fields["weights"]]),
            bias=float(fields["bias"][0]),
            regularization_c=float(fields["c"][0]),
            standardizer=scaler,
            seed=int(fields["seed"][0]),
            grad_norm=float(fields["grad_norm"][0]),
            iterations=int(fields["iterations"][0]),
        )
    except (KeyError, IndexError, ValueError) as exc:
        raise FormatError(f"{path}: truncated or malformed model file: {exc}") from exc
    calibrator: PlattCalibrator | IsotonicCalibrator | None = None
    if "calibrator" in fields:
        variant = fields["calibrator"][0]
        try:
            if variant == "platt":
                calibrator = PlattCalibrator(a=float(fields["platt_a"][0]), b=float(fields["platt_b"][0]))
            elif variant == "isotonic":
                calibrator = IsotonicCalibrator(
                    knot_scores=np.array([float(v) for v in fields["knot_scores"]]),
                    knot_values=np.array([float(v) for v in fields["knot_values"]]),
                )
            else:
                raise FormatError(f"{path}: unknown calibrator variant {variant!r}")
        except (KeyError, IndexError, ValueError) as exc:
            raise FormatError(f"{path}: malformed calibrator block: {exc}") from exc
    return model, calibrator
