"""The four-stage headline pipeline and its bookkeeping.

Stage order: company detection, ESG relevance, domain classification,
sentiment. A headline stops at the first terminal stage: no company found,
classified irrelevant, or fully scored. Human corrections override the
predicted label at their stage and everything downstream is recomputed.

False positives surviving a stage are forwarded to later stages and false
negatives are silently dropped, so the propagation report tallies each
stage's confusion over the items that actually reached it, plus the
forwarded-FP and dropped-FN counts at every boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .classifiers import Model, Prediction, load_model, predict, save_model
from .corpus import DOMAINS, LabeledHeadline, mask_companies
from .detection import DEFAULT_THRESHOLD, Gazetteer, find_mentions
from .evaluation import ConfusionMatrix, MetricsReport, metrics_from_confusion
from .features import Vocabulary, load_vocabulary, save_vocabulary, tokenize, transform

STAGE_COMPANY = "CompanyDetection"
STAGE_RELEVANCE = "Relevance"
STAGE_DOMAIN = "DomainClassification"
STAGE_SENTIMENT = "Sentiment"
STAGES = (STAGE_COMPANY, STAGE_RELEVANCE, STAGE_DOMAIN, STAGE_SENTIMENT)

MENTIONED = "mentioned"
NOT_MENTIONED = "not_mentioned"
RELEVANT = "relevant"
IRRELEVANT = "irrelevant"
SENTIMENTS = ("negative", "neutral", "positive")
SENTIMENT_WEIGHT = {"negative": -1, "neutral": 0, "positive": 1}

STAGE_LABELS: dict[str, tuple[str, ...]] = {
    STAGE_COMPANY: (MENTIONED, NOT_MENTIONED),
    STAGE_RELEVANCE: (RELEVANT, IRRELEVANT),
    STAGE_DOMAIN: DOMAINS,
    STAGE_SENTIMENT: SENTIMENTS,
}

# Labels that forward an item to the next stage. Domain classification
# forwards everything it sees; sentiment is the last stage.
_FORWARDING: dict[str, frozenset[str]] = {
    STAGE_COMPANY: frozenset({MENTIONED}),
    STAGE_RELEVANCE: frozenset({RELEVANT}),
    STAGE_DOMAIN: frozenset(DOMAINS),
    STAGE_SENTIMENT: frozenset(),
}

NONE_LABEL = "none"

NO_COMPANY = "NoCompany"
TERMINAL_IRRELEVANT = "Irrelevant"
SCORED = "Scored"


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class Correction:
    label: str
    author: str
    timestamp: str


@dataclass(frozen=True)
class StageOutcome:
    stage: str
    predicted: str
    probabilities: dict[str, float]
    correction: Correction | None = None

    @property
    def effective(self) -> str:
        return self.correction.label if self.correction else self.predicted


@dataclass(frozen=True)
class Terminal:
    kind: str
    domain: str | None = None
    sentiment: str | None = None


@dataclass(frozen=True)
class PipelineResult:
    headline_id: str
    company: str | None
    outcomes: tuple[StageOutcome, ...]
    terminal: Terminal


@dataclass(frozen=True)
class TextClassifier:
    """A trained model bound to the vocabulary it was fitted with."""

    vocabulary: Vocabulary
    model: Model

    def __post_init__(self) -> None:
        if self.vocabulary.dimension != self.model.dimension:
            raise PipelineError(
                "model and vocabulary disagree on dimension: "
                f"{self.model.dimension} vs {self.vocabulary.dimension}"
            )
        if not self.model.classes:
            raise PipelineError("model has no classes")

    def classify(self, text: str) -> Prediction:
        vector = transform(self.vocabulary, tokenize(text, self.vocabulary.tokenizer))
        return predict(self.model, vector)


def save_stage_classifier(clf: TextClassifier, model_dir: str | Path, stage: str) -> None:
    """Persist a classifier as <stage>.vocab plus <stage>.model."""
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    save_vocabulary(clf.vocabulary, model_dir / f"{stage}.vocab")
    save_model(clf.model, model_dir / f"{stage}.model")


def load_stage_classifier(model_dir: str | Path, stage: str) -> TextClassifier:
    model_dir = Path(model_dir)
    vocab_path = model_dir / f"{stage}.vocab"
    model_path = model_dir / f"{stage}.model"
    for path in (vocab_path, model_path):
        if not path.exists():
            raise FileNotFoundError(f"missing trained {stage} file: {path}")
    return TextClassifier(load_vocabulary(vocab_path), load_model(model_path))


def validate_label(stage: str, label: str) -> None:
    if stage not in STAGE_LABELS:
        raise PipelineError(f"unknown stage {stage!r}")
    if label not in STAGE_LABELS[stage]:
        raise PipelineError(
            f"label {label!r} is not valid for stage {stage}; "
            f"expected one of {', '.join(STAGE_LABELS[stage])}"
        )


Overrides = Mapping[tuple[str, str], Correction]


def run_pipeline(
    headlines: Sequence[LabeledHeadline],
    company: str,
    gazetteer: Gazetteer,
    relevance_model: TextClassifier,
    domain_model: TextClassifier,
    sentiment_model: TextClassifier,
    threshold: float = DEFAULT_THRESHOLD,
    overrides: Overrides | None = None,
) -> list[PipelineResult]:
    """Run all four stages for one company of interest.

    Headlines are masked before the classification stages (with
    ``masked_text`` when the corpus already carries it, otherwise on the
    fly) so the classifiers see the same ORGMASK token they were trained
    on. ``overrides`` carries human corrections keyed by (headline id,
    stage); an override replaces the prediction at its stage and the rest
    of the pipeline is recomputed from there.
    """
    for name, clf in (
        ("relevance", relevance_model),
        ("domain", domain_model),
        ("sentiment", sentiment_model),
    ):
        if not isinstance(clf, TextClassifier):
            raise PipelineError(f"{name} model is not a trained TextClassifier")
    if company not in gazetteer.canonical_names():
        raise PipelineError(f"company {company!r} is not in the gazetteer")
    overrides = overrides or {}
    results = []
    for headline in headlines:
        results.append(
            _run_one(
                headline,
                company,
                gazetteer,
                relevance_model,
                domain_model,
                sentiment_model,
                threshold,
                overrides,
            )
        )
    return results


def _outcome(
    headline_id: str,
    stage: str,
    predicted: str,
    probabilities: dict[str, float],
    overrides: Overrides,
) -> StageOutcome:
    correction = overrides.get((headline_id, stage))
    if correction is not None:
        validate_label(stage, correction.label)
    return StageOutcome(stage, predicted, probabilities, correction)


def _run_one(
    headline: LabeledHeadline,
    company: str,
    gazetteer: Gazetteer,
    relevance_model: TextClassifier,
    domain_model: TextClassifier,
    sentiment_model: TextClassifier,
    threshold: float,
    overrides: Overrides,
) -> PipelineResult:
    mentions = [
        m
        for m in find_mentions(headline.text, gazetteer, threshold, headline.id)
        if m.company == company
    ]
    best = max((m.similarity for m in mentions), default=0.0)
    detection = _outcome(
        headline.id,
        STAGE_COMPANY,
        MENTIONED if mentions else NOT_MENTIONED,
        {MENTIONED: best, NOT_MENTIONED: 1.0 - best},
        overrides,
    )
    outcomes = [detection]
    if detection.effective == NOT_MENTIONED:
        return PipelineResult(headline.id, None, tuple(outcomes), Terminal(NO_COMPANY))

    masked = headline.masked_text
    if masked is None:
        masked = mask_companies(headline.text, gazetteer, threshold)

    relevance_pred = relevance_model.classify(masked)
    relevance = _outcome(
        headline.id,
        STAGE_RELEVANCE,
        relevance_pred.label,
        relevance_pred.probabilities,
        overrides,
    )
    outcomes.append(relevance)
    if relevance.effective == IRRELEVANT:
        return PipelineResult(
            headline.id, company, tuple(outcomes), Terminal(TERMINAL_IRRELEVANT)
        )

    domain_pred = domain_model.classify(masked)
    domain = _outcome(
        headline.id, STAGE_DOMAIN, domain_pred.label, domain_pred.probabilities, overrides
    )
    outcomes.append(domain)

    sentiment_pred = sentiment_model.classify(masked)
    sentiment = _outcome(
        headline.id,
        STAGE_SENTIMENT,
        sentiment_pred.label,
        sentiment_pred.probabilities,
        overrides,
    )
    outcomes.append(sentiment)
    return PipelineResult(
        headline.id,
        company,
        tuple(outcomes),
        Terminal(SCORED, domain=domain.effective, sentiment=sentiment.effective),
    )


@dataclass(frozen=True)
class DomainScore:
    score: float
    n_negative: int
    n_neutral: int
    n_positive: int

    @property
    def total(self) -> int:
        return self.n_negative + self.n_neutral + self.n_positive


@dataclass(frozen=True)
class EsgScore:
    """Per-domain sentiment means; domains with no headlines are absent."""

    domains: dict[str, DomainScore] = field(default_factory=dict)
    n_scored: int = 0
    n_irrelevant: int = 0
    n_no_company: int = 0


def compute_score(results: Sequence[PipelineResult]) -> EsgScore:
    """Mean sentiment weight per domain over the fully scored results."""
    tallies: dict[str, dict[str, int]] = {}
    n_scored = n_irrelevant = n_no_company = 0
    for result in results:
        terminal = result.terminal
        if terminal.kind == NO_COMPANY:
            n_no_company += 1
        elif terminal.kind == TERMINAL_IRRELEVANT:
            n_irrelevant += 1
        else:
            n_scored += 1
            counts = tallies.setdefault(
                terminal.domain, {s: 0 for s in SENTIMENTS}
            )
            counts[terminal.sentiment] += 1
    domains = {}
    for domain, counts in tallies.items():
        total = sum(counts.values())
        score = (counts["positive"] - counts["negative"]) / total
        domains[domain] = DomainScore(
            score=score,
            n_negative=counts["negative"],
            n_neutral=counts["neutral"],
            n_positive=counts["positive"],
        )
    return EsgScore(
        domains=domains,
        n_scored=n_scored,
        n_irrelevant=n_irrelevant,
        n_no_company=n_no_company,
    )


@dataclass(frozen=True)
class StageReport:
    stage: str
    confusion: ConfusionMatrix
    metrics: MetricsReport
    metrics_excluding_none: MetricsReport | None
    n_reached: int
    n_forwarded: int
    n_dropped: int
    fp_forwarded: int
    fn_dropped: int


@dataclass(frozen=True)
class PropagationReport:
    stages: tuple[StageReport, ...]

    def stage(self, name: str) -> StageReport:
        for report in self.stages:
            if report.stage == name:
                return report
        raise KeyError(name)


def propagation_report(
    results: Sequence[PipelineResult],
    gold: Mapping[str, Mapping[str, str]],
) -> PropagationReport:
    """Per-stage confusions over the items that reached each stage.

    ``gold`` maps stage name to headline-id-to-label. Items that reach a
    multiclass stage only because an upstream false positive was forwarded
    carry the gold label ``none`` there; metrics are reported both with and
    without that class.
    """
    reports = []
    for stage_index, stage in enumerate(STAGES):
        pairs: list[tuple[str, str]] = []
        forwarded = dropped = fp_forwarded = fn_dropped = 0
        stage_gold = gold.get(stage, {})
        for result in results:
            if len(result.outcomes) <= stage_index:
                continue
            outcome = result.outcomes[stage_index]
            if result.headline_id not in stage_gold:
                raise PipelineError(
                    f"missing gold label for headline {result.headline_id!r} "
                    f"at stage {stage}"
                )
            gold_label = stage_gold[result.headline_id]
            effective = outcome.effective
            pairs.append((gold_label, effective))
            if effective in _FORWARDING[stage]:
                forwarded += 1
                if gold_label != effective:
                    fp_forwarded += 1
            else:
                dropped += 1
                if gold_label in _FORWARDING[stage]:
                    fn_dropped += 1
        classes = list(STAGE_LABELS[stage])
        if any(g == NONE_LABEL for g, _ in pairs):
            classes.append(NONE_LABEL)
        confusion = ConfusionMatrix.from_labels(
            [g for g, _ in pairs], [p for _, p in pairs], classes
        )
        metrics = metrics_from_confusion(confusion)
        metrics_excluding_none = None
        if NONE_LABEL in classes:
            kept = [(g, p) for g, p in pairs if g != NONE_LABEL]
            metrics_excluding_none = metrics_from_confusion(
                ConfusionMatrix.from_labels(
                    [g for g, _ in kept],
                    [p for _, p in kept],
                    STAGE_LABELS[stage],
                )
            )
        reports.append(
            StageReport(
                stage=stage,
                confusion=confusion,
                metrics=metrics,
                metrics_excluding_none=metrics_excluding_none,
                n_reached=len(pairs),
                n_forwarded=forwarded,
                n_dropped=dropped,
                fp_forwarded=fp_forwarded,
                fn_dropped=fn_dropped,
            )
        )
    return PropagationReport(tuple(reports))


def result_to_record(result: PipelineResult) -> dict:
    return {
        "headline_id": result.headline_id,
        "company": result.company,
        "terminal": {
            "kind": result.terminal.kind,
            "domain": result.terminal.domain,
            "sentiment": result.terminal.sentiment,
        },
        "outcomes": [
            {
                "stage": o.stage,
                "predicted": o.predicted,
                "probabilities": o.probabilities,
                "correction": (
                    {
                        "label": o.correction.label,
                        "author": o.correction.author,
                        "timestamp": o.correction.timestamp,
                    }
                    if o.correction
                    else None
                ),
            }
            for o in result.outcomes
        ],
    }


def result_from_record(record: dict) -> PipelineResult:
    outcomes = []
    for o in record["outcomes"]:
        correction = None
        if o.get("correction"):
            c = o["correction"]
            correction = Correction(c["label"], c["author"], c["timestamp"])
        outcomes.append(
            StageOutcome(o["stage"], o["predicted"], o["probabilities"], correction)
        )
    t = record["terminal"]
    return PipelineResult(
        headline_id=record["headline_id"],
        company=record.get("company"),
        outcomes=tuple(outcomes),
        terminal=Terminal(t["kind"], t.get("domain"), t.get("sentiment")),
    )
