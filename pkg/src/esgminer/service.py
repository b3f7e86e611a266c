"""Durable headline store with event-sourced human corrections.

Storage is a directory of append-only line-delimited files: one for
ingested headlines, one for correction events. Predictions are recomputed
deterministically from the loaded models, so replaying the logs over an
empty store always reproduces the live state; that replay property is what
makes crash recovery trivial and testable.

All writes funnel through one lock (single writer); reads copy out small
snapshots, so concurrent readers never see torn state.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .classifiers import LinearModel
from .detection import DEFAULT_THRESHOLD, Gazetteer, nearest_names
from .pipeline import (
    MENTIONED,
    NO_COMPANY,
    NOT_MENTIONED,
    STAGE_COMPANY,
    STAGE_LABELS,
    STAGES,
    Correction,
    PipelineError,
    PipelineResult,
    TextClassifier,
    compute_score,
    result_to_record,
    run_pipeline,
    validate_label,
)

HEADLINES_FILE = "headlines.jsonl"
CORRECTIONS_FILE = "corrections.jsonl"
SNAPSHOT_FILE = "snapshot.json"


class ServiceError(Exception):
    """Service failure with a stable machine-readable code."""

    code = "internal"
    http_status = 500

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def as_document(self) -> dict:
        doc = {"code": self.code, "message": str(self)}
        doc.update(self.details)
        return doc


class UnknownCompanyError(ServiceError):
    code = "unknown_company"
    http_status = 404


class UnknownHeadlineError(ServiceError):
    code = "unknown_headline"
    http_status = 404


class InvalidCorrectionError(ServiceError):
    code = "invalid_correction"
    http_status = 400


class BadRequestError(ServiceError):
    code = "bad_request"
    http_status = 400


@dataclass(frozen=True)
class Headline:
    """An ingested headline; gold labels do not exist at serving time."""

    id: str
    text: str
    masked_text: str | None = None
    ingested_at: str = ""


@dataclass(frozen=True)
class CorrectionEvent:
    event_id: int
    headline_id: str
    stage: str
    old_label: str
    new_label: str
    author: str
    timestamp: str

    def as_document(self) -> dict:
        return {
            "event_id": self.event_id,
            "headline_id": self.headline_id,
            "stage": self.stage,
            "old_label": self.old_label,
            "new_label": self.new_label,
            "author": self.author,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class IngestReport:
    accepted: int
    rejected: list[dict]

    def as_document(self) -> dict:
        return {"accepted": self.accepted, "rejected": self.rejected}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _fingerprint(clf: TextClassifier) -> str:
    digest = hashlib.sha256()
    model = clf.model
    digest.update(",".join(model.classes).encode())
    if isinstance(model, LinearModel):
        digest.update(np.ascontiguousarray(model.weights).tobytes())
        digest.update(np.ascontiguousarray(model.bias).tobytes())
    else:
        digest.update(np.ascontiguousarray(model.log_prior).tobytes())
        digest.update(np.ascontiguousarray(model.log_likelihood).tobytes())
    for term, idx in sorted(clf.vocabulary.term_index.items()):
        digest.update(f"{term}:{idx}:{clf.vocabulary.document_frequency[term]};".encode())
    return digest.hexdigest()[:16]


class MinerService:
    """Ingest headlines, serve per-company ESG scores, apply corrections."""

    def __init__(
        self,
        store_dir: str | Path,
        gazetteer: Gazetteer,
        relevance: TextClassifier,
        domain: TextClassifier,
        sentiment: TextClassifier,
        threshold: float = DEFAULT_THRESHOLD,
    ):
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.gazetteer = gazetteer
        self.classifiers = {
            "relevance": relevance,
            "domain": domain,
            "sentiment": sentiment,
        }
        self.threshold = threshold
        self.model_versions = {
            name: _fingerprint(clf) for name, clf in self.classifiers.items()
        }
        self._lock = threading.RLock()
        self._headlines: dict[str, Headline] = {}
        self._events: list[CorrectionEvent] = []
        # results[company][headline_id]
        self._results: dict[str, dict[str, PipelineResult]] = {
            name: {} for name in gazetteer.canonical_names()
        }
        self._load()

    # -- persistence -------------------------------------------------

    @property
    def _headlines_path(self) -> Path:
        return self.store_dir / HEADLINES_FILE

    @property
    def _corrections_path(self) -> Path:
        return self.store_dir / CORRECTIONS_FILE

    def _load(self) -> None:
        if self._headlines_path.exists():
            with open(self._headlines_path, encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    headline = Headline(
                        id=record["id"],
                        text=record["text"],
                        masked_text=record.get("masked_text"),
                        ingested_at=record.get("ingested_at", ""),
                    )
                    self._headlines[headline.id] = headline
        if self._corrections_path.exists():
            with open(self._corrections_path, encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    self._events.append(CorrectionEvent(**record))
        for headline in self._headlines.values():
            self._recompute(headline)

    def _append(self, path: Path, record: dict) -> None:
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            handle.flush()

    def flush(self) -> None:
        """Write an informational snapshot; the logs stay authoritative."""
        with self._lock:
            snapshot = {
                "headline_count": len(self._headlines),
                "correction_count": len(self._events),
                "state_hash": self.state_hash(),
                "written_at": _now(),
            }
        (self.store_dir / SNAPSHOT_FILE).write_text(
            json.dumps(snapshot, indent=2) + "\n", encoding="utf-8"
        )

    # -- pipeline plumbing -------------------------------------------

    def _overrides(self) -> dict[tuple[str, str], Correction]:
        overrides: dict[tuple[str, str], Correction] = {}
        for event in self._events:
            overrides[(event.headline_id, event.stage)] = Correction(
                event.new_label, event.author, event.timestamp
            )
        return overrides

    def _recompute(self, headline: Headline) -> None:
        overrides = self._overrides()
        for company in self.gazetteer.canonical_names():
            result = run_pipeline(
                [headline],
                company,
                self.gazetteer,
                self.classifiers["relevance"],
                self.classifiers["domain"],
                self.classifiers["sentiment"],
                threshold=self.threshold,
                overrides=overrides,
            )[0]
            self._results[company][headline.id] = result

    # -- operations ----------------------------------------------------

    def ingest_lines(self, lines) -> IngestReport:
        """Ingest a line-delimited batch; bad lines are reported, not fatal."""
        accepted = 0
        rejected: list[dict] = []
        with self._lock:
            batch_ids: set[str] = set()
            for line_no, line in enumerate(lines, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    rejected.append({"line": line_no, "reason": f"invalid JSON: {exc}"})
                    continue
                if not isinstance(record, dict):
                    rejected.append({"line": line_no, "reason": "expected an object"})
                    continue
                hid = str(record.get("id", "")).strip()
                text = str(record.get("text", "")).strip()
                if not hid or not text:
                    rejected.append(
                        {"line": line_no, "reason": "id and text are required"}
                    )
                    continue
                if hid in self._headlines or hid in batch_ids:
                    rejected.append(
                        {"line": line_no, "id": hid, "reason": "duplicate id"}
                    )
                    continue
                headline = Headline(
                    id=hid,
                    text=text,
                    masked_text=record.get("masked_text"),
                    ingested_at=_now(),
                )
                batch_ids.add(hid)
                self._headlines[hid] = headline
                self._append(
                    self._headlines_path,
                    {
                        "id": headline.id,
                        "text": headline.text,
                        "masked_text": headline.masked_text,
                        "ingested_at": headline.ingested_at,
                    },
                )
                self._recompute(headline)
                accepted += 1
        return IngestReport(accepted=accepted, rejected=rejected)

    def _require_company(self, company: str) -> str:
        if company not in self._results:
            raise UnknownCompanyError(
                f"company {company!r} is not in the gazetteer",
                suggestions=nearest_names(self.gazetteer, company),
            )
        return company

    def query_score(self, company: str) -> dict:
        with self._lock:
            self._require_company(company)
            results = list(self._results[company].values())
            score = compute_score(results)
            return {
                "company": company,
                "domains": {
                    name: {
                        "score": ds.score,
                        "n_negative": ds.n_negative,
                        "n_neutral": ds.n_neutral,
                        "n_positive": ds.n_positive,
                    }
                    for name, ds in sorted(score.domains.items())
                },
                "headline_count": score.n_scored + score.n_irrelevant,
                "n_scored": score.n_scored,
                "n_irrelevant": score.n_irrelevant,
                "n_no_company": score.n_no_company,
                "last_updated": self._last_updated(),
            }

    def _last_updated(self) -> str | None:
        stamps = [h.ingested_at for h in self._headlines.values() if h.ingested_at]
        stamps += [e.timestamp for e in self._events]
        return max(stamps) if stamps else None

    def list_headlines(
        self,
        company: str,
        stage: str | None = None,
        label: str | None = None,
        page: int = 1,
        page_size: int = 20,
    ) -> dict:
        if page < 1 or page_size < 1:
            raise BadRequestError("page and page_size must be positive")
        if stage is not None and stage not in STAGES:
            raise BadRequestError(
                f"unknown stage {stage!r}", valid_stages=list(STAGES)
            )
        with self._lock:
            self._require_company(company)
            results = [
                self._results[company][hid] for hid in sorted(self._results[company])
            ]
        if stage is not None:
            stage_index = STAGES.index(stage)
            results = [r for r in results if len(r.outcomes) > stage_index]
            if label is not None:
                results = [
                    r for r in results if r.outcomes[stage_index].effective == label
                ]
        start = (page - 1) * page_size
        items = results[start : start + page_size]
        return {
            "company": company,
            "items": [self._result_document(r) for r in items],
            "page": page,
            "page_size": page_size,
            "total": len(results),
        }

    def _result_document(self, result: PipelineResult) -> dict:
        record = result_to_record(result)
        record["text"] = self._headlines[result.headline_id].text
        return record

    def submit_correction(
        self, headline_id: str, stage: str, new_label: str, author: str
    ) -> dict:
        with self._lock:
            headline = self._headlines.get(headline_id)
            if headline is None:
                raise UnknownHeadlineError(f"no headline with id {headline_id!r}")
            try:
                validate_label(stage, new_label)
            except PipelineError as exc:
                raise InvalidCorrectionError(str(exc)) from exc
            if stage == STAGE_COMPANY and new_label == MENTIONED:
                raise InvalidCorrectionError(
                    "detection corrections can only clear false positives "
                    f"({NOT_MENTIONED}); forcing a new mention is not supported"
                )
            if not author.strip():
                raise InvalidCorrectionError("author is required")
            stage_index = STAGES.index(stage)
            touched = [
                company
                for company in self.gazetteer.canonical_names()
                if len(self._results[company][headline_id].outcomes) > stage_index
            ]
            if not touched:
                raise InvalidCorrectionError(
                    f"headline {headline_id!r} never reached stage {stage}"
                )
            old_label = (
                self._results[touched[0]][headline_id].outcomes[stage_index].effective
            )
            event = CorrectionEvent(
                event_id=len(self._events) + 1,
                headline_id=headline_id,
                stage=stage,
                old_label=old_label,
                new_label=new_label,
                author=author,
                timestamp=_now(),
            )
            self._events.append(event)
            self._append(self._corrections_path, event.as_document())
            self._recompute(headline)
            company = touched[0]
            return {
                "event": event.as_document(),
                "result": self._result_document(self._results[company][headline_id]),
                "score": self.query_score(company),
            }

    def corrections(self) -> list[dict]:
        with self._lock:
            return [event.as_document() for event in self._events]

    def health(self) -> dict:
        with self._lock:
            return {
                "status": "ok",
                "model_versions": dict(self.model_versions),
                "store": {
                    "headlines": len(self._headlines),
                    "corrections": len(self._events),
                    "companies": len(self._results),
                },
            }

    def state_hash(self) -> str:
        """Hash of every result and event; replay must reproduce it."""
        with self._lock:
            body = {
                "headlines": [
                    {
                        "id": h.id,
                        "text": h.text,
                        "masked_text": h.masked_text,
                        "ingested_at": h.ingested_at,
                    }
                    for h in sorted(self._headlines.values(), key=lambda h: h.id)
                ],
                "results": {
                    company: [
                        result_to_record(self._results[company][hid])
                        for hid in sorted(self._results[company])
                    ]
                    for company in sorted(self._results)
                },
                "events": [e.as_document() for e in self._events],
            }
        raw = json.dumps(body, sort_keys=True, ensure_ascii=False).encode()
        return hashlib.sha256(raw).hexdigest()
