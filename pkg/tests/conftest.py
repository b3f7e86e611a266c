from __future__ import annotations

import random

import numpy as np
import pytest

from esgminer.classifiers import LinearModel, TrainConfig
from esgminer.corpus import DOMAINS
from esgminer.detection import Gazetteer
from esgminer.features import fit_tfidf
from esgminer.pipeline import SENTIMENTS, TextClassifier


def synthetic_texts(
    classes: tuple[str, ...],
    n: int,
    seed: int,
    shared_fraction: float = 0.3,
    core_size: int = 40,
    shared_size: int = 60,
    tokens_per_headline: int = 10,
) -> tuple[list[str], list[str]]:
    """Headlines with class-disjoint vocabulary cores plus shared noise.

    Each class owns ``core_size`` tokens nobody else uses; the remaining
    draw comes from a noise pool shared by every class.
    """
    rng = random.Random(seed)
    cores = {
        cls: [f"{cls.lower()[:3]}{j}core" for j in range(core_size)] for cls in classes
    }
    shared = [f"noise{j}" for j in range(shared_size)]
    texts, labels = [], []
    for i in range(n):
        cls = classes[i % len(classes)]
        tokens = [
            rng.choice(shared) if rng.random() < shared_fraction else rng.choice(cores[cls])
            for _ in range(tokens_per_headline)
        ]
        texts.append(" ".join(tokens))
        labels.append(cls)
    return texts, labels

# Marker tokens the forced-output classifiers key on. Headlines in pipeline
# fixtures carry these so stage outcomes are fully predictable.
MARKERS = ("envtopic", "soctopic", "govtopic", "chatter", "negtone", "neutone", "postone")


def keyword_classifier(
    classes: tuple[str, ...], token_to_class: dict[str, str], fallback: str
) -> TextClassifier:
    """A real LinearModel whose huge keyword weights force known outputs."""
    vocab = fit_tfidf([[m] for m in MARKERS])
    weights = np.zeros((len(classes), vocab.dimension))
    for token, cls in token_to_class.items():
        weights[classes.index(cls), vocab.term_index[token]] = 50.0
    bias = np.zeros(len(classes))
    bias[classes.index(fallback)] = 1.0
    model = LinearModel(weights=weights, bias=bias, classes=classes, config=TrainConfig())
    return TextClassifier(vocab, model)


@pytest.fixture(scope="session")
def gazetteer() -> Gazetteer:
    return Gazetteer(
        [
            ("ExxonMobil", ["Exxon Mobil Corporation"]),
            ("Shell", []),
            ("TestCorp", []),
        ]
    )


@pytest.fixture(scope="session")
def relevance_clf() -> TextClassifier:
    return keyword_classifier(
        ("relevant", "irrelevant"),
        {
            "envtopic": "relevant",
            "soctopic": "relevant",
            "govtopic": "relevant",
            "chatter": "irrelevant",
        },
        fallback="irrelevant",
    )


@pytest.fixture(scope="session")
def domain_clf() -> TextClassifier:
    return keyword_classifier(
        DOMAINS,
        {"envtopic": "Environmental", "soctopic": "Social", "govtopic": "Governance"},
        fallback="Environmental",
    )


@pytest.fixture(scope="session")
def sentiment_clf() -> TextClassifier:
    return keyword_classifier(
        SENTIMENTS,
        {"negtone": "negative", "neutone": "neutral", "postone": "positive"},
        fallback="neutral",
    )
