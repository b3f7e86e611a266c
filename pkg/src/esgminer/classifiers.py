"""Multinomial Naive Bayes and softmax logistic regression, from scratch.

Both classifiers consume the L2-normalized TF-IDF vectors from
:mod:`esgminer.features`. The logistic model is the softmax head

    y_hat = softmax(W x + b),  c = argmax(y_hat)

trained by full-batch gradient descent on mean cross-entropy with a ridge
penalty. Parameters start at zero, so training is deterministic and the
recorded seed changes nothing. The ridge penalty covers the bias as well:
with overwhelming regularization the classifier decays to uniform
probabilities rather than to the class prior.

Naive Bayes uses the TF-IDF weights as fractional counts (one shared
feature pipeline instead of a separate integer-count path), with Laplace
smoothing:

    log P(t|c) = ln((count(t,c) + alpha) / (sum_t count(t,c) + alpha*V))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import SparseVector, stack

FORMAT_VERSION = 1


class TrainingError(ValueError):
    """Raised when training data cannot support the requested model."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 42


@dataclass(frozen=True)
class Prediction:
    """A classified item: argmax label, full distribution, top-2 margin."""

    label: str
    probabilities: dict[str, float]
    margin: float


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)
    classes: tuple[str, ...]
    config: TrainConfig
    loss_curve: tuple[float, ...] = field(default=(), compare=False)

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class NaiveBayesModel:
    log_prior: np.ndarray  # (n_classes,)
    log_likelihood: np.ndarray  # (n_classes, n_features)
    alpha: float
    classes: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return self.log_likelihood.shape[1]


Model = LinearModel | NaiveBayesModel


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax; stable for arbitrarily large logits."""
    z = np.asarray(logits, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _check_data(
    data: Sequence[tuple[SparseVector, str]], classes: Sequence[str]
) -> tuple[np.ndarray, np.ndarray, int]:
    if not data:
        raise TrainingError("no training examples")
    class_index = {c: i for i, c in enumerate(classes)}
    if len(class_index) != len(classes):
        raise TrainingError("duplicate class names")
    dim = data[0][0].dimension
    y = np.empty(len(data), dtype=int)
    for row, (vec, label) in enumerate(data):
        if vec.dimension != dim:
            raise TrainingError("inconsistent vector dimensions in training data")
        if label not in class_index:
            raise TrainingError(f"label {label!r} is not in the class list")
        y[row] = class_index[label]
    for c, i in class_index.items():
        if not np.any(y == i):
            raise TrainingError(f"class {c!r} has no training examples")
    x = stack([vec for vec, _ in data])
    return x, y, dim


def _loss(
    x: np.ndarray, onehot: np.ndarray, w: np.ndarray, b: np.ndarray, l2: float
) -> float:
    logits = x @ w.T + b
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    ce = -(onehot * log_probs).sum(axis=1).mean()
    return float(ce + 0.5 * l2 * (np.sum(w * w) + np.sum(b * b)))


def logistic_gradient(
    x: np.ndarray, onehot: np.ndarray, w: np.ndarray, b: np.ndarray, l2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the regularized cross-entropy objective.

    Exposed separately so the finite-difference check can call it directly.
    """
    n = x.shape[0]
    probs = softmax(x @ w.T + b)
    g = (probs - onehot) / n
    return g.T @ x + l2 * w, g.sum(axis=0) + l2 * b


def logistic_loss(
    data: Sequence[tuple[SparseVector, str]],
    classes: Sequence[str],
    w: np.ndarray,
    b: np.ndarray,
    l2: float,
) -> float:
    """Objective value at arbitrary parameters (finite-difference oracle hook)."""
    x, y, _ = _check_data(data, classes)
    onehot = np.eye(len(classes))[y]
    return _loss(x, onehot, w, b, l2)


def train_logistic(
    data: Sequence[tuple[SparseVector, str]],
    classes: Sequence[str],
    config: TrainConfig = TrainConfig(),
) -> LinearModel:
    """Fit the softmax head by full-batch gradient descent from zero init."""
    x, y, dim = _check_data(data, classes)
    n_classes = len(classes)
    onehot = np.eye(n_classes)[y]
    w = np.zeros((n_classes, dim))
    b = np.zeros(n_classes)
    losses = [_loss(x, onehot, w, b, config.l2)]
    for _ in range(config.epochs):
        grad_w, grad_b = logistic_gradient(x, onehot, w, b, config.l2)
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
        losses.append(_loss(x, onehot, w, b, config.l2))
    return LinearModel(
        weights=w,
        bias=b,
        classes=tuple(classes),
        config=config,
        loss_curve=tuple(losses),
    )


def train_nb(
    data: Sequence[tuple[SparseVector, str]],
    classes: Sequence[str],
    alpha: float = 1.0,
) -> NaiveBayesModel:
    """Fit multinomial NB with TF-IDF weights as fractional counts."""
    if alpha <= 0:
        raise TrainingError("alpha must be positive")
    x, y, dim = _check_data(data, classes)
    n_classes = len(classes)
    counts = np.zeros((n_classes, dim))
    class_sizes = np.zeros(n_classes)
    for row in range(x.shape[0]):
        counts[y[row]] += x[row]
        class_sizes[y[row]] += 1
    log_prior = np.log(class_sizes / class_sizes.sum())
    totals = counts.sum(axis=1, keepdims=True)
    log_likelihood = np.log(counts + alpha) - np.log(totals + alpha * dim)
    return NaiveBayesModel(
        log_prior=log_prior,
        log_likelihood=log_likelihood,
        alpha=alpha,
        classes=tuple(classes),
    )


def _scores(model: Model, x: SparseVector) -> np.ndarray:
    if x.dimension != model.dimension:
        raise ValueError(
            f"dimension mismatch: vector has {x.dimension}, model expects {model.dimension}"
        )
    idx = list(x.indices)
    w = np.asarray(x.weights)
    if isinstance(model, LinearModel):
        base = model.bias.copy()
        if idx:
            base += model.weights[:, idx] @ w
        return base
    base = model.log_prior.copy()
    if idx:
        base += model.log_likelihood[:, idx] @ w
    return base


def predict(model: Model, x: SparseVector) -> Prediction:
    """Classify one vector; ties break toward the lowest class index."""
    probs = softmax(_scores(model, x))
    label = model.classes[int(np.argmax(probs))]
    ordered = np.sort(probs)[::-1]
    margin = float(ordered[0] - ordered[1]) if len(ordered) > 1 else float(ordered[0])
    return Prediction(
        label=label,
        probabilities={c: float(p) for c, p in zip(model.classes, probs)},
        margin=margin,
    )


def _fmt(values: np.ndarray) -> str:
    return "\t".join(format(v, ".17g") for v in values)


def save_model(model: Model, path: str | Path) -> None:
    """Versioned text serialization; floats keep 17 significant digits."""
    lines = [f"esgminer-classifier\t{FORMAT_VERSION}"]
    if isinstance(model, LinearModel):
        cfg = model.config
        lines.append("kind\tlinear")
        lines.append("classes\t" + "\t".join(model.classes))
        lines.append(f"dimension\t{model.dimension}")
        lines.append(f"learning_rate\t{format(cfg.learning_rate, '.17g')}")
        lines.append(f"epochs\t{cfg.epochs}")
        lines.append(f"l2\t{format(cfg.l2, '.17g')}")
        lines.append(f"seed\t{cfg.seed}")
        for row in model.weights:
            lines.append("W\t" + _fmt(row))
        lines.append("b\t" + _fmt(model.bias))
    else:
        lines.append("kind\tnaive_bayes")
        lines.append("classes\t" + "\t".join(model.classes))
        lines.append(f"dimension\t{model.dimension}")
        lines.append(f"alpha\t{format(model.alpha, '.17g')}")
        lines.append("log_prior\t" + _fmt(model.log_prior))
        for row in model.log_likelihood:
            lines.append("L\t" + _fmt(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> Model:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"esgminer-classifier\t{FORMAT_VERSION}":
        raise ValueError(f"unsupported classifier file: {path}")
    fields: dict[str, list[str]] = {}
    rows: list[list[float]] = []
    for line in lines[1:]:
        if not line:
            continue
        key, *rest = line.split("\t")
        if key in ("W", "L"):
            rows.append([float(v) for v in rest])
        else:
            fields[key] = rest
    kind = fields["kind"][0]
    classes = tuple(fields["classes"])
    if kind == "linear":
        config = TrainConfig(
            learning_rate=float(fields["learning_rate"][0]),
            epochs=int(fields["epochs"][0]),
            l2=float(fields["l2"][0]),
            seed=int(fields["seed"][0]),
        )
        return LinearModel(
            weights=np.array(rows),
            bias=np.array([float(v) for v in fields["b"]]),
            classes=classes,
            config=config,
        )
    if kind == "naive_bayes":
        return NaiveBayesModel(
            log_prior=np.array([float(v) for v in fields["log_prior"]]),
            log_likelihood=np.array(rows),
            alpha=float(fields["alpha"][0]),
            classes=classes,
        )
    raise ValueError(f"unknown model kind {kind!r} in {path}")
