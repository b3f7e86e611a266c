"""Evaluation machinery: balancing, cross-validation, metrics, agreement.

Random under-sampling discards uniformly chosen majority-class items until
every class matches the smallest one. Folds are stratified so that each
class spreads evenly across the k partitions. Metrics follow the usual
confusion-matrix definitions with the zero-division convention P = R =
F1 = 0, and annotator agreement is Cohen's kappa with the Landis-Koch
verbal bands.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

POOR = "Poor"
SLIGHT = "Slight"
FAIR = "Fair"
MODERATE = "Moderate"
SUBSTANTIAL = "Substantial"
ALMOST_PERFECT = "AlmostPerfect"


class EvaluationError(ValueError):
    pass


def random_undersample(labels: Sequence[str], seed: int) -> list[int]:
    """Indices of a balanced subset, all classes cut to the minimum count.

    Sampling is uniform without replacement and seeded; the returned
    indices are in their original order, so within-class order survives.
    """
    by_class: dict[str, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    if len(by_class) < 2:
        raise EvaluationError("undersampling needs at least two classes")
    floor = min(len(v) for v in by_class.values())
    if floor == 0:
        raise EvaluationError("a class has zero items")
    rng = random.Random(seed)
    keep: set[int] = set()
    for label in sorted(by_class):
        members = by_class[label]
        keep.update(rng.sample(members, floor))
    return sorted(keep)


def stratified_kfold(
    labels: Sequence[str], k: int = 10, seed: int = 42
) -> list[tuple[list[int], list[int]]]:
    """k disjoint (train, test) index partitions, stratified by label.

    Per class, the shuffled indices are dealt round-robin across folds, so
    per-class fold sizes never differ by more than one.
    """
    if k < 2:
        raise EvaluationError("k must be at least 2")
    by_class: dict[str, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    for label, members in by_class.items():
        if len(members) < k:
            raise EvaluationError(
                f"class {label!r} has {len(members)} items, fewer than k={k}"
            )
    rng = random.Random(seed)
    test_folds: list[list[int]] = [[] for _ in range(k)]
    for label in sorted(by_class):
        members = by_class[label][:]
        rng.shuffle(members)
        for position, idx in enumerate(members):
            test_folds[position % k].append(idx)
    all_indices = set(range(len(labels)))
    splits = []
    for fold in test_folds:
        test = sorted(fold)
        train = sorted(all_indices.difference(fold))
        splits.append((train, test))
    return splits


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns predicted."""

    classes: tuple[str, ...]
    counts: np.ndarray

    @classmethod
    def from_labels(
        cls,
        gold: Sequence[str],
        predicted: Sequence[str],
        classes: Sequence[str],
    ) -> "ConfusionMatrix":
        if len(gold) != len(predicted):
            raise EvaluationError(
                f"gold has {len(gold)} labels, predicted has {len(predicted)}"
            )
        index = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=int)
        for g, p in zip(gold, predicted):
            if g not in index:
                raise EvaluationError(f"gold label {g!r} not in class list")
            if p not in index:
                raise EvaluationError(f"predicted label {p!r} not in class list")
            counts[index[g], index[p]] += 1
        return cls(tuple(classes), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    classes: tuple[str, ...]
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    macro_f1: float
    accuracy: float

    def as_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
        }

    def as_table(self) -> str:
        width = max([len(c) for c in self.classes] + [8])
        lines = [
            f"{'class':<{width}}  {'prec':>6}  {'recall':>6}  {'f1':>6}  {'support':>7}"
        ]
        for c in self.classes:
            lines.append(
                f"{c:<{width}}  {self.precision[c]:>6.3f}  {self.recall[c]:>6.3f}"
                f"  {self.f1[c]:>6.3f}  {self.support[c]:>7}"
            )
        lines.append(f"{'macro-F1':<{width}}  {self.macro_f1:.3f}")
        lines.append(f"{'accuracy':<{width}}  {self.accuracy:.3f}")
        return "\n".join(lines)


def metrics_from_confusion(matrix: ConfusionMatrix) -> MetricsReport:
    counts = matrix.counts
    precision: dict[str, float] = {}
    recall: dict[str, float] = {}
    f1: dict[str, float] = {}
    support: dict[str, int] = {}
    for i, c in enumerate(matrix.classes):
        tp = float(counts[i, i])
        predicted = float(counts[:, i].sum())
        gold = float(counts[i, :].sum())
        p = tp / predicted if predicted else 0.0
        r = tp / gold if gold else 0.0
        precision[c] = p
        recall[c] = r
        f1[c] = 2 * p * r / (p + r) if (p + r) else 0.0
        support[c] = int(gold)
    total = matrix.total
    return MetricsReport(
        classes=matrix.classes,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        macro_f1=sum(f1.values()) / len(f1),
        accuracy=(float(np.trace(counts)) / total) if total else 0.0,
    )


def compute_metrics(
    gold: Sequence[str], predicted: Sequence[str], classes: Sequence[str]
) -> MetricsReport:
    return metrics_from_confusion(ConfusionMatrix.from_labels(gold, predicted, classes))


def metrics_from_binary_counts(
    tp: int, fp: int, fn: int, tn: int, positive: str = "positive", negative: str = "negative"
) -> MetricsReport:
    """Metrics from an already-tallied binary confusion."""
    counts = np.array([[tp, fn], [fp, tn]], dtype=int)
    return metrics_from_confusion(ConfusionMatrix((positive, negative), counts))


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    observed_agreement: float
    expected_agreement: float
    category: str


def cohen_kappa(a: Sequence[str], b: Sequence[str]) -> AgreementReport:
    """Chance-corrected agreement between two label sequences.

    When chance agreement is already 1 (both annotators constant on the
    same label universe), kappa is defined as 1 for perfect agreement and
    0 otherwise.
    """
    if len(a) != len(b):
        raise EvaluationError("label sequences must have equal length")
    if not a:
        raise EvaluationError("cannot compute agreement on empty input")
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    labels = sorted(set(a) | set(b))
    expected = 0.0
    for label in labels:
        pa = sum(1 for x in a if x == label) / n
        pb = sum(1 for y in b if y == label) / n
        expected += pa * pb
    if expected == 1.0:
        kappa = 1.0 if observed == 1.0 else 0.0
    else:
        kappa = (observed - expected) / (1.0 - expected)
    return AgreementReport(
        kappa=kappa,
        observed_agreement=observed,
        expected_agreement=expected,
        category=landis_koch(max(-1.0, min(1.0, kappa))),
    )


def landis_koch(kappa: float) -> str:
    """Verbal agreement band for a kappa value in [-1, 1]."""
    if not -1.0 <= kappa <= 1.0:
        raise EvaluationError(f"kappa {kappa} outside [-1, 1]")
    if kappa < 0:
        return POOR
    if kappa <= 0.20:
        return SLIGHT
    if kappa <= 0.40:
        return FAIR
    if kappa <= 0.60:
        return MODERATE
    if kappa <= 0.80:
        return SUBSTANTIAL
    return ALMOST_PERFECT


def subset(items: Sequence, indices: Sequence[int]) -> list:
    return [items[i] for i in indices]


def mean_and_folds(
    per_fold: Mapping[int, MetricsReport] | Sequence[MetricsReport],
) -> tuple[float, list[float]]:
    """Mean macro-F1 plus the per-fold values, for CV reporting."""
    reports = (
        list(per_fold.values()) if isinstance(per_fold, Mapping) else list(per_fold)
    )
    scores = [r.macro_f1 for r in reports]
    return sum(scores) / len(scores), scores
